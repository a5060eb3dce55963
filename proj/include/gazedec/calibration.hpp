#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gazedec/dataset.hpp"
#include "gazedec/estimator.hpp"

namespace gazedec {

enum class Labeling { per_image, shared_target };

/// Calibration images of one subject. In shared_target mode every image is
/// labeled with the single target angle instead of its own gaze.
struct CalibrationSet {
  std::vector<Sample> samples;
  Labeling labeling = Labeling::per_image;
  GazeAngle shared_target{};  // meaningful iff labeling == shared_target
  /// Positions in the dataset the set was drawn from, parallel to samples;
  /// empty for hand-built sets. Lets evaluation exclude the set's images.
  std::vector<int> source_indices;

  void validate() const;  // nonempty, single subject
};

enum class CalibrationMethod { offset, fc, la, none };

const char* to_string(CalibrationMethod m);

struct ResidualStats {
  int count = 0;
  GazeAngle mean{};
  GazeAngle sd{};
};

struct CalibrationOutcome {
  GazeAngle bias_estimate{};  // (0,0) when method == none
  CalibrationMethod method = CalibrationMethod::none;
  ResidualStats diagnostics{};
};

/// Mean over the calibration set of (label - t(X)).
CalibrationOutcome estimate_bias_offset(const Params& model, const CalibrationSet& dc);

/// g = t(x) + bias; bias (0,0) gives the calibration-free estimate.
GazeAngle predict(const Params& model, const GazeAngle& bias, std::span<const double> x);

/// Uniformly picks `size` of the subject's images whose gaze lies strictly
/// within radius_deg of `point` (no duplicates within one set). Returns
/// nullopt when fewer than `size` qualify — the point is discarded. The
/// shared target is the mean of the selected images' gazes.
std::optional<CalibrationSet> select_sgpc_set(const Dataset& test, const SubjectKey& subject,
                                              const GazeAngle& point, int size,
                                              double radius_deg, std::mt19937_64& rng);

/// Uniform sample without replacement from all of the subject's images,
/// labeled per image. Throws InsufficientDataError when size exceeds them.
CalibrationSet select_mgpc_set(const Dataset& test, const SubjectKey& subject, int size,
                               std::mt19937_64& rng);

/// Offset estimated from the subject's entire test data (per-image labels).
CalibrationOutcome lower_bound_bias(const Params& model, const Dataset& test,
                                    const SubjectKey& subject);

/// Refits the final affine output stage on the calibration set by ridge
/// least squares, penalizing deviation from the current stage (so an
/// infinite ridge leaves the model unchanged). The rest of the parameters
/// stay frozen.
Params calibrate_fc(const Params& model, const CalibrationSet& dc, double ridge = 1e-6);

struct AffineCorrection {
  std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  GazeAngle c{};

  GazeAngle apply(const GazeAngle& t_hat) const {
    return {a[0] * t_hat.yaw + a[1] * t_hat.pitch + c.yaw,
            a[2] * t_hat.yaw + a[3] * t_hat.pitch + c.pitch};
  }
};

/// Least-squares fit of g = A t(x) + c on the calibration set. Throws
/// NotApplicableError with fewer than 3 samples or collinear predictions.
AffineCorrection calibrate_la(const Params& model, const CalibrationSet& dc);

}  // namespace gazedec
