#include "gazedec/synthworld.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "gazedec/errors.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

namespace {

constexpr int kOddBasis = 3;
constexpr int kEvenBasis = 3 + SynthWorld::kAppearanceDim;

constexpr std::uint64_t kTagMixOdd = 11;
constexpr std::uint64_t kTagMixEven = 12;
constexpr std::uint64_t kTagSubjects = 21;
constexpr std::uint64_t kTagSamples = 31;

// Odd terms negate when yaw negates; even terms are invariant. Frequencies
// are high enough that the sinusoids decorrelate from the affine terms over
// typical gaze ranges, which keeps the regression well conditioned and a
// purely linear estimator imperfect.
void odd_basis(const GazeAngle& t, double* out) {
  const double yr = deg_to_rad(t.yaw);
  const double pr = deg_to_rad(t.pitch);
  out[0] = t.yaw / kOutputScaleDeg;
  out[1] = std::sin(3.0 * yr);
  out[2] = std::sin(6.5 * yr) * std::cos(3.5 * pr);
}

void even_basis(const GazeAngle& t, const std::vector<double>& appearance, double* out) {
  const double yr = deg_to_rad(t.yaw);
  const double pr = deg_to_rad(t.pitch);
  out[0] = t.pitch / kOutputScaleDeg;
  out[1] = std::cos(3.0 * yr);
  out[2] = std::sin(4.0 * pr);
  for (int j = 0; j < SynthWorld::kAppearanceDim; ++j) out[3 + j] = appearance[static_cast<std::size_t>(j)];
}

std::vector<double> random_mix(int rows, int cols, std::mt19937_64 rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> m(static_cast<std::size_t>(rows) * cols);
  for (double& v : m) v = scale * gauss(rng);
  return m;
}

std::string subject_id(int index, int total) {
  int width = 2;
  for (int v = total - 1; v >= 100; v /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%0*d", width, index);
  return buf;
}

}  // namespace

void WorldConfig::validate() const {
  if (feature_dim < 2) throw ConfigError("feature_dim must be >= 2");
  if (n_subjects < 2) throw ConfigError("n_subjects must be >= 2");
  if (samples_per_subject < 1) throw ConfigError("samples_per_subject must be >= 1");
  if (!(yaw_min < yaw_max) || !(pitch_min < pitch_max)) {
    throw ConfigError("gaze range must be non-degenerate");
  }
  if (yaw_min < -90.0 || yaw_max > 90.0 || pitch_min < -90.0 || pitch_max > 90.0) {
    throw ConfigError("gaze range must lie within +-90 degrees");
  }
  if (bias_sd < 0 || bias_slope_sd < 0 || feature_noise_sd < 0 || label_noise_sd < 0) {
    throw ConfigError("noise and bias SDs must be nonnegative");
  }
}

SynthWorld::SynthWorld(WorldConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d_o = cfg_.feature_dim / 2;
  const int d_e = cfg_.feature_dim - d_o;
  mix_odd_ = random_mix(d_o, kOddBasis, make_rng(cfg_.seed, kTagMixOdd));
  mix_even_ = random_mix(d_e, kEvenBasis, make_rng(cfg_.seed, kTagMixEven));
}

std::vector<SubjectProfile> SynthWorld::sample_subjects() const {
  auto rng = make_rng(cfg_.seed, kTagSubjects);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<SubjectProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(cfg_.n_subjects));
  for (int i = 0; i < cfg_.n_subjects; ++i) {
    SubjectProfile p;
    p.key = SubjectKey{subject_id(i, cfg_.n_subjects), false};
    p.bias.yaw = cfg_.bias_sd * gauss(rng);
    p.bias.pitch = cfg_.bias_sd * gauss(rng);
    p.appearance.resize(kAppearanceDim);
    for (double& a : p.appearance) a = gauss(rng);
    for (double& s : p.bias_slope) s = cfg_.bias_slope_sd * gauss(rng);
    profiles.push_back(std::move(p));
  }
  return profiles;
}

Sample SynthWorld::generate_sample(const SubjectProfile& profile, const GazeAngle& t,
                                   std::mt19937_64& rng) const {
  if (t.yaw < cfg_.yaw_min || t.yaw > cfg_.yaw_max || t.pitch < cfg_.pitch_min ||
      t.pitch > cfg_.pitch_max) {
    throw Error("gaze point outside the configured range");
  }
  if (static_cast<int>(profile.appearance.size()) != kAppearanceDim) {
    throw DimensionError("profile appearance dimension mismatch");
  }

  const int d_o = cfg_.feature_dim / 2;
  const int d_e = cfg_.feature_dim - d_o;
  double phi_o[kOddBasis];
  double phi_e[kEvenBasis];
  odd_basis(t, phi_o);
  even_basis(t, profile.appearance, phi_e);

  Sample s;
  s.subject = profile.key;
  s.features.resize(static_cast<std::size_t>(cfg_.feature_dim));
  for (int i = 0; i < d_o; ++i) {
    double acc = 0.0;
    for (int j = 0; j < kOddBasis; ++j) acc += mix_odd_[static_cast<std::size_t>(i * kOddBasis + j)] * phi_o[j];
    s.features[static_cast<std::size_t>(i)] = acc;
  }
  for (int i = 0; i < d_e; ++i) {
    double acc = 0.0;
    for (int j = 0; j < kEvenBasis; ++j) acc += mix_even_[static_cast<std::size_t>(i * kEvenBasis + j)] * phi_e[j];
    s.features[static_cast<std::size_t>(d_o + i)] = acc;
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  if (cfg_.feature_noise_sd > 0.0) {
    for (double& f : s.features) f += cfg_.feature_noise_sd * gauss(rng);
  }

  GazeAngle label = t + profile.bias;
  label.yaw += profile.bias_slope[0] * t.yaw + profile.bias_slope[1] * t.pitch;
  label.pitch += profile.bias_slope[2] * t.yaw + profile.bias_slope[3] * t.pitch;
  if (cfg_.label_noise_sd > 0.0) {
    label.yaw += cfg_.label_noise_sd * gauss(rng);
    label.pitch += cfg_.label_noise_sd * gauss(rng);
  }
  s.gaze = label;
  s.latent_visual_axis = t;
  return s;
}

std::pair<Dataset, std::vector<SubjectProfile>> SynthWorld::generate_dataset() const {
  auto profiles = sample_subjects();
  Dataset d = generate_dataset(profiles);
  return {std::move(d), std::move(profiles)};
}

Dataset SynthWorld::generate_dataset(const std::vector<SubjectProfile>& profiles) const {
  Dataset d(cfg_.feature_dim);
  std::uniform_real_distribution<double> yaw_u(cfg_.yaw_min, cfg_.yaw_max);
  std::uniform_real_distribution<double> pitch_u(cfg_.pitch_min, cfg_.pitch_max);
  for (std::size_t si = 0; si < profiles.size(); ++si) {
    auto rng = make_rng(cfg_.seed, kTagSamples, si);
    for (int j = 0; j < cfg_.samples_per_subject; ++j) {
      const GazeAngle t{yaw_u(rng), pitch_u(rng)};
      d.add(generate_sample(profiles[si], t, rng));
    }
  }
  return d;
}

Params SynthWorld::perfect_linear_params() const {
  const int d_o = cfg_.feature_dim / 2;
  const int d_e = cfg_.feature_dim - d_o;
  if (d_o < kOddBasis || d_e < kEvenBasis) {
    throw Error("perfect estimator needs feature_dim >= " +
                std::to_string(2 * kEvenBasis) + " (odd block >= " + std::to_string(kOddBasis) +
                ", even block >= " + std::to_string(kEvenBasis) + ")");
  }

  using Eigen::MatrixXd;
  MatrixXd a_o(d_o, kOddBasis);
  for (int i = 0; i < d_o; ++i)
    for (int j = 0; j < kOddBasis; ++j) a_o(i, j) = mix_odd_[static_cast<std::size_t>(i * kOddBasis + j)];
  MatrixXd a_e(d_e, kEvenBasis);
  for (int i = 0; i < d_e; ++i)
    for (int j = 0; j < kEvenBasis; ++j) a_e(i, j) = mix_even_[static_cast<std::size_t>(i * kEvenBasis + j)];

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod_o(a_o);
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod_e(a_e);
  if (cod_o.rank() < kOddBasis || cod_e.rank() < kEvenBasis) {
    throw RankDeficiencyError("mixing map is rank deficient; choose a different world seed");
  }
  const MatrixXd pinv_o = cod_o.pseudoInverse();  // kOddBasis x d_o
  const MatrixXd pinv_e = cod_e.pseudoInverse();  // kEvenBasis x d_e

  // Row 0 of each basis is t scaled by 1/kOutputScaleDeg, and the output
  // stage multiplies by kOutputScaleDeg, so the weights are the pinv rows.
  Params p;
  p.arch = Architecture{ArchKind::linear, cfg_.feature_dim, 0};
  p.values.assign(static_cast<std::size_t>(p.arch.param_count()), 0.0);
  const int d = cfg_.feature_dim;
  for (int i = 0; i < d_o; ++i) p.values[static_cast<std::size_t>(i)] = pinv_o(0, i);
  for (int i = 0; i < d_e; ++i) p.values[static_cast<std::size_t>(d + d_o + i)] = pinv_e(0, i);
  return p;
}

Dataset flip_dataset(const Dataset& d) {
  if (d.feature_dim() < 2) throw Error("unknown feature layout: feature_dim < 2");
  const int d_o = d.feature_dim() / 2;
  Dataset out(d.feature_dim());
  for (const Sample& s : d.samples()) {
    Sample f = s;
    f.subject.flipped = !f.subject.flipped;
    f.gaze = flip_gaze(f.gaze);
    if (f.latent_visual_axis) f.latent_visual_axis = flip_gaze(*f.latent_visual_axis);
    for (int i = 0; i < d_o; ++i) f.features[static_cast<std::size_t>(i)] = -f.features[static_cast<std::size_t>(i)];
    out.add(std::move(f));
  }
  return out;
}

}  // namespace gazedec
