#include "gazedec/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "gazedec/errors.hpp"

namespace gazedec {

void CalibrationSet::validate() const {
  if (samples.empty()) throw InsufficientDataError("calibration set is empty");
  for (const Sample& s : samples) {
    if (!(s.subject == samples.front().subject)) {
      throw Error("calibration set mixes subjects");
    }
  }
}

const char* to_string(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::offset: return "offset";
    case CalibrationMethod::fc: return "fc";
    case CalibrationMethod::la: return "la";
    case CalibrationMethod::none: return "none";
  }
  return "?";
}

namespace {

GazeAngle label_of(const CalibrationSet& dc, const Sample& s) {
  return dc.labeling == Labeling::shared_target ? dc.shared_target : s.gaze;
}

}  // namespace

CalibrationOutcome estimate_bias_offset(const Params& model, const CalibrationSet& dc) {
  dc.validate();
  GazeAngle sum{};
  std::vector<GazeAngle> residuals;
  residuals.reserve(dc.samples.size());
  for (const Sample& s : dc.samples) {
    const GazeAngle r = label_of(dc, s) - forward(model, s.features);
    residuals.push_back(r);
    sum += r;
  }
  const double n = static_cast<double>(residuals.size());
  CalibrationOutcome out;
  out.method = CalibrationMethod::offset;
  out.bias_estimate = (1.0 / n) * sum;
  out.diagnostics.count = static_cast<int>(residuals.size());
  out.diagnostics.mean = out.bias_estimate;
  GazeAngle var{};
  for (const GazeAngle& r : residuals) {
    var.yaw += (r.yaw - out.bias_estimate.yaw) * (r.yaw - out.bias_estimate.yaw);
    var.pitch += (r.pitch - out.bias_estimate.pitch) * (r.pitch - out.bias_estimate.pitch);
  }
  if (residuals.size() > 1) var = (1.0 / (n - 1.0)) * var;
  out.diagnostics.sd = {std::sqrt(var.yaw), std::sqrt(var.pitch)};
  return out;
}

GazeAngle predict(const Params& model, const GazeAngle& bias, std::span<const double> x) {
  return forward(model, x) + bias;
}

std::optional<CalibrationSet> select_sgpc_set(const Dataset& test, const SubjectKey& subject,
                                              const GazeAngle& point, int size,
                                              double radius_deg, std::mt19937_64& rng) {
  if (size < 1) throw Error("calibration set size must be >= 1");
  std::vector<int> candidates;
  for (int i : test.indices_of(subject)) {
    if (angular_error_deg(point, test[static_cast<std::size_t>(i)].gaze) < radius_deg) {
      candidates.push_back(i);
    }
  }
  if (static_cast<int>(candidates.size()) < size) return std::nullopt;

  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(size));
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(chosen),
              static_cast<std::size_t>(size), rng);

  CalibrationSet dc;
  dc.labeling = Labeling::shared_target;
  GazeAngle mean{};
  for (int i : chosen) {
    dc.samples.push_back(test[static_cast<std::size_t>(i)]);
    dc.source_indices.push_back(i);
    mean += dc.samples.back().gaze;
  }
  dc.shared_target = (1.0 / static_cast<double>(size)) * mean;
  return dc;
}

CalibrationSet select_mgpc_set(const Dataset& test, const SubjectKey& subject, int size,
                               std::mt19937_64& rng) {
  if (size < 1) throw Error("calibration set size must be >= 1");
  const auto& idx = test.indices_of(subject);
  if (static_cast<int>(idx.size()) < size) {
    throw InsufficientDataError("subject " + to_string(subject) + " has " +
                                std::to_string(idx.size()) + " images, need " +
                                std::to_string(size));
  }
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(size));
  std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), static_cast<std::size_t>(size),
              rng);
  CalibrationSet dc;
  dc.labeling = Labeling::per_image;
  for (int i : chosen) {
    dc.samples.push_back(test[static_cast<std::size_t>(i)]);
    dc.source_indices.push_back(i);
  }
  return dc;
}

CalibrationOutcome lower_bound_bias(const Params& model, const Dataset& test,
                                    const SubjectKey& subject) {
  CalibrationSet dc;
  dc.labeling = Labeling::per_image;
  for (int i : test.indices_of(subject)) {
    dc.samples.push_back(test[static_cast<std::size_t>(i)]);
    dc.source_indices.push_back(i);
  }
  return estimate_bias_offset(model, dc);
}

Params calibrate_fc(const Params& model, const CalibrationSet& dc, double ridge) {
  dc.validate();
  if (ridge < 0) throw Error("ridge must be nonnegative");
  const int n = static_cast<int>(dc.samples.size());
  const int w = model.arch.kind == ArchKind::linear ? model.arch.input_dim
                                                    : model.arch.hidden_units;

  // Stage features augmented with a constant column for the offset.
  Eigen::MatrixXd h(n, w + 1);
  Eigen::MatrixXd g(n, 2);
  for (int i = 0; i < n; ++i) {
    const Sample& s = dc.samples[static_cast<std::size_t>(i)];
    const auto feats = last_stage_features(model, s.features);
    for (int j = 0; j < w; ++j) h(i, j) = feats[static_cast<std::size_t>(j)];
    h(i, w) = 1.0;
    const GazeAngle label = label_of(dc, s) ;
    g(i, 0) = label.yaw / kOutputScaleDeg;
    g(i, 1) = label.pitch / kOutputScaleDeg;
  }

  // Current output stage, as (w+1) x 2 with the offset in the last row.
  const std::size_t stage_off =
      model.arch.kind == ArchKind::linear
          ? 0
          : static_cast<std::size_t>(model.arch.hidden_units * model.arch.input_dim +
                                     model.arch.hidden_units);
  Eigen::MatrixXd w0(w + 1, 2);
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < w; ++j) w0(j, k) = model.values[stage_off + static_cast<std::size_t>(k * w + j)];
    w0(w, k) = model.values[stage_off + static_cast<std::size_t>(2 * w + k)];
  }

  // min ||g - h W||^2 + ridge ||W - W0||^2; ridge anchors at the current stage.
  Eigen::MatrixXd gram = h.transpose() * h;
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd rhs = h.transpose() * g + ridge * w0;
  const Eigen::MatrixXd sol = gram.ldlt().solve(rhs);

  Params out = model;
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < w; ++j) out.values[stage_off + static_cast<std::size_t>(k * w + j)] = sol(j, k);
    out.values[stage_off + static_cast<std::size_t>(2 * w + k)] = sol(w, k);
  }
  return out;
}

AffineCorrection calibrate_la(const Params& model, const CalibrationSet& dc) {
  dc.validate();
  const int n = static_cast<int>(dc.samples.size());
  if (n < 3) {
    throw NotApplicableError("linear adaptation needs at least 3 calibration samples, got " +
                             std::to_string(n));
  }
  Eigen::MatrixXd t(n, 3);
  Eigen::MatrixXd g(n, 2);
  for (int i = 0; i < n; ++i) {
    const Sample& s = dc.samples[static_cast<std::size_t>(i)];
    const GazeAngle pred = forward(model, s.features);
    t(i, 0) = pred.yaw;
    t(i, 1) = pred.pitch;
    t(i, 2) = 1.0;
    const GazeAngle label = label_of(dc, s);
    g(i, 0) = label.yaw;
    g(i, 1) = label.pitch;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(t);
  qr.setThreshold(1e-9);
  if (qr.rank() < 3) {
    throw NotApplicableError("linear adaptation needs non-collinear predictions");
  }
  const Eigen::MatrixXd sol = qr.solve(g);  // 3 x 2
  AffineCorrection corr;
  corr.a = {sol(0, 0), sol(1, 0), sol(0, 1), sol(1, 1)};
  corr.c = {sol(2, 0), sol(2, 1)};
  return corr;
}

}  // namespace gazedec
