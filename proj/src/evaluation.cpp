#include "gazedec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gazedec/errors.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

namespace {

constexpr std::uint64_t kTagTrial = 51;
constexpr std::uint64_t kTagGrid = 53;
constexpr std::uint64_t kTagAblation = 55;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-sample trig cache so offset-shifted predictions cost a few multiplies
// plus one acos instead of four trig calls per (sample, trial).
struct PredictionCache {
  std::vector<GazeAngle> t_hat;
  std::vector<double> sy, cy, sp, cp;
  std::vector<Vec3> label_unit;

  PredictionCache(const Params& model, const Dataset& d) {
    const std::size_t n = d.size();
    t_hat.resize(n);
    sy.resize(n);
    cy.resize(n);
    sp.resize(n);
    cp.resize(n);
    label_unit.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      t_hat[i] = forward(model, d[i].features);
      const double yr = deg_to_rad(t_hat[i].yaw);
      const double pr = deg_to_rad(t_hat[i].pitch);
      sy[i] = std::sin(yr);
      cy[i] = std::cos(yr);
      sp[i] = std::sin(pr);
      cp[i] = std::cos(pr);
      label_unit[i] = to_unit_vector(d[i].gaze);
    }
  }
};

struct OffsetTrig {
  double sy, cy, sp, cp;
  explicit OffsetTrig(const GazeAngle& b)
      : sy(std::sin(deg_to_rad(b.yaw))),
        cy(std::cos(deg_to_rad(b.yaw))),
        sp(std::sin(deg_to_rad(b.pitch))),
        cp(std::cos(deg_to_rad(b.pitch))) {}
};

double shifted_error_deg(const PredictionCache& c, std::size_t i, const OffsetTrig& o) {
  const double syo = c.sy[i] * o.cy + c.cy[i] * o.sy;  // sin(yaw + b_yaw)
  const double cyo = c.cy[i] * o.cy - c.sy[i] * o.sy;
  const double spo = c.sp[i] * o.cp + c.cp[i] * o.sp;
  const double cpo = c.cp[i] * o.cp - c.sp[i] * o.sp;
  const Vec3& v = c.label_unit[i];
  const double dot = cpo * syo * v[0] + spo * v[1] + cpo * cyo * v[2];
  return rad_to_deg(std::acos(std::clamp(dot, -1.0, 1.0)));
}

double mean_shifted_error(const PredictionCache& c, std::span<const int> indices,
                          const GazeAngle& bias) {
  const OffsetTrig o(bias);
  double sum = 0.0;
  for (int i : indices) sum += shifted_error_deg(c, static_cast<std::size_t>(i), o);
  return sum / static_cast<double>(indices.size());
}

// Mean of (label - t_hat) over the set, using cached predictions.
GazeAngle offset_from_cache(const PredictionCache& c, const Dataset& d,
                            const CalibrationSet& dc) {
  GazeAngle sum{};
  for (std::size_t k = 0; k < dc.source_indices.size(); ++k) {
    const std::size_t i = static_cast<std::size_t>(dc.source_indices[k]);
    const GazeAngle label = dc.labeling == Labeling::shared_target ? dc.shared_target : d[i].gaze;
    sum += label - c.t_hat[i];
  }
  return (1.0 / static_cast<double>(dc.source_indices.size())) * sum;
}

// indices minus excluded (both ascending); empty result falls back to all,
// which is exactly the lower-bound evaluation.
std::vector<int> eval_indices(const std::vector<int>& subject_indices,
                              std::vector<int> excluded) {
  std::sort(excluded.begin(), excluded.end());
  std::vector<int> out;
  out.reserve(subject_indices.size());
  std::size_t e = 0;
  for (int i : subject_indices) {
    while (e < excluded.size() && excluded[e] < i) ++e;
    if (e < excluded.size() && excluded[e] == i) continue;
    out.push_back(i);
  }
  if (out.empty()) return subject_indices;
  return out;
}

struct RunningStats {
  double sum = 0.0;
  double sumsq = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : kNaN; }
  double standard_error() const {
    if (n < 2) return kNaN;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - static_cast<double>(n) * m * m) /
                                         static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace

const char* to_string(Protocol p) { return p == Protocol::sgpc ? "sgpc" : "mgpc"; }

EvalReport evaluate(const Params& model, const std::map<SubjectKey, GazeAngle>& biases,
                    const Dataset& test) {
  EvalReport rep;
  double total = 0.0;
  for (const SubjectKey& key : test.subjects()) {
    const auto it = biases.find(key);
    if (it == biases.end()) throw Error("no bias estimate for subject " + to_string(key));
    const GazeAngle& bias = it->second;

    PerSubjectEval ps;
    GazeAngle rsum{};
    std::vector<GazeAngle> residuals;
    const auto& idx = test.indices_of(key);
    residuals.reserve(idx.size());
    double err_sum = 0.0;
    for (int i : idx) {
      const Sample& s = test[static_cast<std::size_t>(i)];
      const GazeAngle pred = forward(model, s.features) + bias;
      err_sum += angular_error_deg(pred, s.gaze);
      const GazeAngle r = s.gaze - pred;
      residuals.push_back(r);
      rsum += r;
    }
    const double n = static_cast<double>(idx.size());
    ps.count = static_cast<int>(idx.size());
    ps.mean_error = err_sum / n;
    ps.residual_mean = (1.0 / n) * rsum;
    GazeAngle var{};
    for (const GazeAngle& r : residuals) {
      var.yaw += (r.yaw - ps.residual_mean.yaw) * (r.yaw - ps.residual_mean.yaw);
      var.pitch += (r.pitch - ps.residual_mean.pitch) * (r.pitch - ps.residual_mean.pitch);
    }
    if (idx.size() > 1) var = (1.0 / (n - 1.0)) * var;
    ps.residual_sd = {std::sqrt(var.yaw), std::sqrt(var.pitch)};
    rep.per_subject[key] = ps;
    total += ps.mean_error;
  }
  rep.mean_error = total / static_cast<double>(test.subjects().size());
  return rep;
}

EvalReport full_report(const Params& model, const Dataset& test) {
  std::map<SubjectKey, GazeAngle> zeros;
  std::map<SubjectKey, GazeAngle> fitted;
  for (const SubjectKey& key : test.subjects()) {
    zeros[key] = GazeAngle{};
    fitted[key] = lower_bound_bias(model, test, key).bias_estimate;
  }
  EvalReport rep = evaluate(model, zeros, test);
  rep.calibration_free_error = rep.mean_error;
  rep.lower_bound_error = evaluate(model, fitted, test).mean_error;
  return rep;
}

BiasVarianceReport bias_variance_decomposition(const Params& model, const Dataset& test) {
  BiasVarianceReport rep;
  double msb[2] = {0.0, 0.0};
  double intra[2] = {0.0, 0.0};
  for (const SubjectKey& key : test.subjects()) {
    const auto& idx = test.indices_of(key);
    if (idx.size() < 2) {
      rep.excluded.push_back(key);
      continue;
    }
    GazeAngle mean{};
    std::vector<GazeAngle> residuals;
    residuals.reserve(idx.size());
    for (int i : idx) {
      const Sample& s = test[static_cast<std::size_t>(i)];
      residuals.push_back(s.gaze - forward(model, s.features));
      mean += residuals.back();
    }
    const double n = static_cast<double>(idx.size());
    mean = (1.0 / n) * mean;
    GazeAngle var{};
    for (const GazeAngle& r : residuals) {
      var.yaw += (r.yaw - mean.yaw) * (r.yaw - mean.yaw);
      var.pitch += (r.pitch - mean.pitch) * (r.pitch - mean.pitch);
    }
    var = (1.0 / (n - 1.0)) * var;
    msb[0] += mean.yaw * mean.yaw;
    msb[1] += mean.pitch * mean.pitch;
    intra[0] += var.yaw;
    intra[1] += var.pitch;
    ++rep.subjects_used;
  }
  if (rep.subjects_used == 0) {
    throw InsufficientDataError("no subject has >= 2 samples");
  }
  const double ns = static_cast<double>(rep.subjects_used);
  rep.squared_bias_per_axis = {msb[0] / ns, msb[1] / ns};
  rep.intra_variance_per_axis = {intra[0] / ns, intra[1] / ns};
  rep.mean_squared_bias = rep.squared_bias_per_axis.yaw + rep.squared_bias_per_axis.pitch;
  rep.mean_intra_subject_variance =
      rep.intra_variance_per_axis.yaw + rep.intra_variance_per_axis.pitch;
  return rep;
}

namespace {

struct SubjectContext {
  SubjectKey key;
  const std::vector<int>* indices;
  double yaw_lo, yaw_hi, pitch_lo, pitch_hi;  // observed gaze bounding box
};

std::vector<SubjectContext> subject_contexts(const Dataset& test) {
  std::vector<SubjectContext> out;
  for (const SubjectKey& key : test.subjects()) {
    SubjectContext sc;
    sc.key = key;
    sc.indices = &test.indices_of(key);
    sc.yaw_lo = sc.pitch_lo = std::numeric_limits<double>::infinity();
    sc.yaw_hi = sc.pitch_hi = -std::numeric_limits<double>::infinity();
    for (int i : *sc.indices) {
      const GazeAngle& g = test[static_cast<std::size_t>(i)].gaze;
      sc.yaw_lo = std::min(sc.yaw_lo, g.yaw);
      sc.yaw_hi = std::max(sc.yaw_hi, g.yaw);
      sc.pitch_lo = std::min(sc.pitch_lo, g.pitch);
      sc.pitch_hi = std::max(sc.pitch_hi, g.pitch);
    }
    out.push_back(sc);
  }
  return out;
}

}  // namespace

TrialCurve run_calibration_trials(const Params& model, const Dataset& test,
                                  const TrialConfig& cfg) {
  if (cfg.dc_sizes.empty()) throw ConfigError("dc_sizes must be nonempty");
  for (int s : cfg.dc_sizes) {
    if (s < 1) throw ConfigError("dc_size must be >= 1");
  }
  if (cfg.n_trials < 1) throw ConfigError("n_trials must be >= 1");

  const PredictionCache cache(model, test);
  const auto subjects = subject_contexts(test);

  TrialCurve curve;
  curve.protocol = cfg.protocol;

  double cf_total = 0.0;
  double lb_total = 0.0;
  for (const auto& sc : subjects) {
    const double cf = mean_shifted_error(cache, *sc.indices, GazeAngle{});
    curve.calibration_free_per_subject[sc.key] = cf;
    cf_total += cf;
    GazeAngle full{};
    for (int i : *sc.indices) {
      full += test[static_cast<std::size_t>(i)].gaze - cache.t_hat[static_cast<std::size_t>(i)];
    }
    full = (1.0 / static_cast<double>(sc.indices->size())) * full;
    lb_total += mean_shifted_error(cache, *sc.indices, full);
  }
  curve.calibration_free_error = cf_total / static_cast<double>(subjects.size());
  curve.lower_bound_error = lb_total / static_cast<double>(subjects.size());

  for (std::size_t size_idx = 0; size_idx < cfg.dc_sizes.size(); ++size_idx) {
    const int dc_size = cfg.dc_sizes[size_idx];
    TrialCurvePoint point;
    point.dc_size = dc_size;

    RunningStats trial_stats;
    std::map<SubjectKey, RunningStats> subject_stats;

    for (int trial = 0; trial < cfg.n_trials; ++trial) {
      double trial_sum = 0.0;
      int trial_cnt = 0;
      for (std::size_t si = 0; si < subjects.size(); ++si) {
        const auto& sc = subjects[si];
        auto rng = make_rng(cfg.seed, kTagTrial + (size_idx << 32) + static_cast<std::uint64_t>(trial),
                            si);
        std::optional<CalibrationSet> dc;
        if (cfg.protocol == Protocol::sgpc) {
          std::uniform_real_distribution<double> yaw_u(sc.yaw_lo, sc.yaw_hi);
          std::uniform_real_distribution<double> pitch_u(sc.pitch_lo, sc.pitch_hi);
          for (int attempt = 0; attempt < cfg.max_point_draws && !dc; ++attempt) {
            const GazeAngle p{yaw_u(rng), pitch_u(rng)};
            dc = select_sgpc_set(test, sc.key, p, dc_size, cfg.radius_deg, rng);
          }
        } else if (static_cast<int>(sc.indices->size()) >= dc_size) {
          dc = select_mgpc_set(test, sc.key, dc_size, rng);
        }
        if (!dc) {
          ++point.cells_skipped;
          continue;
        }
        const GazeAngle bias = offset_from_cache(cache, test, *dc);
        const auto eval = eval_indices(*sc.indices, dc->source_indices);
        const double err = mean_shifted_error(cache, eval, bias);
        subject_stats[sc.key].add(err);
        trial_sum += err;
        ++trial_cnt;
      }
      if (trial_cnt > 0) trial_stats.add(trial_sum / trial_cnt);
    }

    point.mean_error = trial_stats.mean();
    point.standard_error = trial_stats.standard_error();
    point.trials_used = trial_stats.n;
    for (const auto& [key, st] : subject_stats) point.per_subject_mean[key] = st.mean();
    curve.points.push_back(std::move(point));
  }
  return curve;
}

void GridSpec::validate() const {
  if (!(yaw_min < yaw_max) || !(pitch_min < pitch_max)) throw ConfigError("grid extent degenerate");
  if (step <= 0 || region <= 0) throw ConfigError("grid step/region must be positive");
  const double ratio = region / step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) throw ConfigError("region must be a multiple of step");
  const double ny = (yaw_max - yaw_min) / region;
  const double np = (pitch_max - pitch_min) / region;
  if (std::abs(ny - std::round(ny)) > 1e-9 || std::abs(np - std::round(np)) > 1e-9) {
    throw ConfigError("grid extent must be a multiple of the region size");
  }
  if (dc_size < 1) throw ConfigError("dc_size must be >= 1");
  if (radius_deg <= 0) throw ConfigError("radius must be positive");
}

GridReport grid_robustness_map(const Params& model, const Dataset& test, const GridSpec& spec) {
  spec.validate();
  const PredictionCache cache(model, test);
  const auto subjects = subject_contexts(test);

  GridReport rep;
  rep.spec = spec;
  rep.regions_yaw = static_cast<int>(std::round((spec.yaw_max - spec.yaw_min) / spec.region));
  rep.regions_pitch = static_cast<int>(std::round((spec.pitch_max - spec.pitch_min) / spec.region));
  const int ppr = static_cast<int>(std::round(spec.region / spec.step));

  std::map<SubjectKey, double> calibration_free;
  double cf_total = 0.0;
  for (const auto& sc : subjects) {
    const double cf = mean_shifted_error(cache, *sc.indices, GazeAngle{});
    calibration_free[sc.key] = cf;
    cf_total += cf;
  }
  rep.calibration_free_error = cf_total / static_cast<double>(subjects.size());

  for (int rp = 0; rp < rep.regions_pitch; ++rp) {
    for (int ry = 0; ry < rep.regions_yaw; ++ry) {
      GridCell cell;
      cell.yaw_lo = spec.yaw_min + ry * spec.region;
      cell.yaw_hi = cell.yaw_lo + spec.region;
      cell.pitch_lo = spec.pitch_min + rp * spec.region;
      cell.pitch_hi = cell.pitch_lo + spec.region;

      std::map<SubjectKey, RunningStats> per_subject;
      RunningStats point_means;
      for (int ip = 0; ip < ppr; ++ip) {
        for (int iy = 0; iy < ppr; ++iy) {
          const GazeAngle point{cell.yaw_lo + (iy + 0.5) * spec.step,
                                cell.pitch_lo + (ip + 0.5) * spec.step};
          const std::uint64_t point_index =
              ((static_cast<std::uint64_t>(rp) * rep.regions_yaw + ry) * ppr + ip) * ppr + iy;
          RunningStats this_point;
          for (std::size_t si = 0; si < subjects.size(); ++si) {
            const auto& sc = subjects[si];
            auto rng = make_rng(spec.seed, kTagGrid + point_index, si);
            auto dc = select_sgpc_set(test, sc.key, point, spec.dc_size, spec.radius_deg, rng);
            if (!dc) continue;
            const GazeAngle bias = offset_from_cache(cache, test, *dc);
            const auto eval = eval_indices(*sc.indices, dc->source_indices);
            const double err = mean_shifted_error(cache, eval, bias);
            per_subject[sc.key].add(err);
            this_point.add(err);
            ++cell.feasible_points;
          }
          if (this_point.n > 0) point_means.add(this_point.mean());
        }
      }

      if (per_subject.empty()) {
        cell.mean_error = kNaN;
        cell.standard_error = kNaN;
      } else {
        double sum = 0.0;
        for (const auto& [key, st] : per_subject) {
          const double m = st.mean();
          sum += m;
          if (m < calibration_free.at(key)) ++cell.benefit_count;
        }
        cell.subjects_counted = static_cast<int>(per_subject.size());
        cell.mean_error = sum / cell.subjects_counted;
        cell.standard_error = point_means.standard_error();
      }
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

BenefitReport benefit_fraction(const std::map<SubjectKey, double>& calibrated,
                               const std::map<SubjectKey, double>& calibration_free) {
  if (calibrated.size() != calibration_free.size()) {
    throw Error("benefit_fraction: subject sets differ in size");
  }
  BenefitReport rep;
  for (const auto& [key, err] : calibrated) {
    const auto it = calibration_free.find(key);
    if (it == calibration_free.end()) {
      throw Error("benefit_fraction: subject " + to_string(key) + " missing from baseline");
    }
    if (err < it->second) ++rep.improved;
    ++rep.total;
  }
  rep.fraction = rep.total > 0 ? static_cast<double>(rep.improved) / rep.total : 0.0;
  return rep;
}

AblationReport ablation_compare(const Dataset& d, const Architecture& arch,
                                const TrainConfig& cfg, const AblationConfig& ab) {
  if (d.subjects().size() < 3) {
    throw InsufficientDataError("ablation comparison needs at least 3 subjects");
  }
  const auto folds = leave_one_subject_out_splits(d, true);

  AblationReport rep;
  rep.folds = static_cast<int>(folds.size());
  for (int variant = 0; variant < 2; ++variant) {
    AblationArm& arm = variant == 0 ? rep.decomposed : rep.no_decomposition;
    double cf = 0.0, sg = 0.0, lb = 0.0;
    int sg_folds = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      TrainConfig fold_cfg = cfg;
      fold_cfg.decomposition = (variant == 0);
      fold_cfg.seed = mix_seed(cfg.seed, kTagAblation, f);
      const TrainedDecomposition trained = train(folds[f].train, arch, fold_cfg);

      TrialConfig tc;
      tc.protocol = Protocol::sgpc;
      tc.dc_sizes = {ab.dc_size};
      tc.n_trials = ab.trials_per_fold;
      tc.radius_deg = ab.radius_deg;
      tc.seed = fold_cfg.seed;
      const TrialCurve curve = run_calibration_trials(trained.params, folds[f].test, tc);
      cf += curve.calibration_free_error;
      lb += curve.lower_bound_error;
      if (curve.points[0].trials_used > 0) {
        sg += curve.points[0].mean_error;
        ++sg_folds;
      }
    }
    const double nf = static_cast<double>(folds.size());
    arm.calibration_free_error = cf / nf;
    arm.lower_bound_error = lb / nf;
    arm.sgpc_error = sg_folds > 0 ? sg / sg_folds : kNaN;
  }
  return rep;
}

}  // namespace gazedec
