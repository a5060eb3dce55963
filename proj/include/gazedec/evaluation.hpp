#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "gazedec/calibration.hpp"
#include "gazedec/dataset.hpp"
#include "gazedec/estimator.hpp"
#include "gazedec/trainer.hpp"

namespace gazedec {

struct PerSubjectEval {
  double mean_error = 0.0;   // degrees
  GazeAngle residual_mean{};  // g - prediction, per axis
  GazeAngle residual_sd{};
  int count = 0;
};

struct EvalReport {
  double mean_error = 0.0;  // equal-weight mean over subjects
  std::map<SubjectKey, PerSubjectEval> per_subject;
  double calibration_free_error = 0.0;  // filled by full_report
  double lower_bound_error = 0.0;       // filled by full_report
  long trials = 0;
};

/// Per-sample angular error of t(x) + bias against the label, averaged per
/// subject and across subjects. Every test subject needs a bias entry.
EvalReport evaluate(const Params& model, const std::map<SubjectKey, GazeAngle>& biases,
                    const Dataset& test);

/// Calibration-free report plus the calibration-free and lower-bound
/// summary errors for the same data.
EvalReport full_report(const Params& model, const Dataset& test);

struct BiasVarianceReport {
  double mean_squared_bias = 0.0;            // deg^2, mean over subjects of |mean residual|^2
  double mean_intra_subject_variance = 0.0;  // deg^2, per-axis variances summed
  GazeAngle squared_bias_per_axis{};
  GazeAngle intra_variance_per_axis{};
  int subjects_used = 0;
  std::vector<SubjectKey> excluded;  // subjects with fewer than 2 samples
};

/// Residuals are taken against the uncalibrated estimator.
BiasVarianceReport bias_variance_decomposition(const Params& model, const Dataset& test);

enum class Protocol { sgpc, mgpc };

const char* to_string(Protocol p);

struct TrialConfig {
  Protocol protocol = Protocol::sgpc;
  std::vector<int> dc_sizes = {1, 4, 8, 16};
  int n_trials = 5000;
  double radius_deg = 2.0;
  std::uint64_t seed = 1;
  int max_point_draws = 64;  // SGPC: attempts before a (trial, subject) is skipped
};

struct TrialCurvePoint {
  int dc_size = 0;
  double mean_error = 0.0;
  double standard_error = 0.0;  // over per-trial means
  long trials_used = 0;
  long cells_skipped = 0;  // (trial, subject) pairs without a feasible calibration set
  std::map<SubjectKey, double> per_subject_mean;
};

struct TrialCurve {
  Protocol protocol = Protocol::sgpc;
  std::vector<TrialCurvePoint> points;
  double calibration_free_error = 0.0;  // same data, bias 0
  double lower_bound_error = 0.0;       // bias fitted on each subject's full data
  std::map<SubjectKey, double> calibration_free_per_subject;
};

/// Monte-Carlo error-versus-size curves. Calibrated models are evaluated on
/// the subject's images outside the calibration set (on all of them when the
/// set covers everything, which reproduces the lower bound). Trials derive
/// independent rng streams from (seed, size, trial, subject), so results do
/// not depend on execution order.
TrialCurve run_calibration_trials(const Params& model, const Dataset& test,
                                  const TrialConfig& cfg);

struct GridSpec {
  double yaw_min = -7.5;
  double yaw_max = 7.5;
  double pitch_min = -7.5;
  double pitch_max = 7.5;
  double step = 0.5;
  double region = 5.0;  // region edge; must be a multiple of step
  int dc_size = 9;
  double radius_deg = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GridCell {
  double yaw_lo = 0.0, yaw_hi = 0.0, pitch_lo = 0.0, pitch_hi = 0.0;
  double mean_error = 0.0;      // NaN when no grid point in the cell was feasible
  double standard_error = 0.0;  // over per-point means within the cell
  int benefit_count = 0;        // subjects strictly better than calibration-free
  int subjects_counted = 0;
  int feasible_points = 0;  // feasible (point, subject) pairs
};

struct GridReport {
  GridSpec spec;
  int regions_yaw = 0;
  int regions_pitch = 0;
  std::vector<GridCell> cells;  // row-major, pitch outer, yaw inner
  double calibration_free_error = 0.0;
};

/// SGPC at every grid point; subjects weighted equally within each region.
GridReport grid_robustness_map(const Params& model, const Dataset& test, const GridSpec& spec);

struct BenefitReport {
  int improved = 0;
  int total = 0;
  double fraction = 0.0;
};

/// Counts subjects whose calibrated mean error is strictly lower. Ties do
/// not count as improvements. Key sets must match.
BenefitReport benefit_fraction(const std::map<SubjectKey, double>& calibrated,
                               const std::map<SubjectKey, double>& calibration_free);

struct AblationArm {
  double calibration_free_error = 0.0;
  double sgpc_error = 0.0;
  double lower_bound_error = 0.0;
};

struct AblationConfig {
  int dc_size = 9;
  double radius_deg = 2.0;
  int trials_per_fold = 30;
};

struct AblationReport {
  AblationArm decomposed;
  AblationArm no_decomposition;
  int folds = 0;
};

/// Trains the decomposition and its frozen-bias control on identical
/// leave-one-subject-out folds and seeds, then compares held-out errors.
AblationReport ablation_compare(const Dataset& d, const Architecture& arch,
                                const TrainConfig& cfg, const AblationConfig& ab = {});

}  // namespace gazedec
