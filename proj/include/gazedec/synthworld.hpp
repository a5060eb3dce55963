#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "gazedec/dataset.hpp"
#include "gazedec/estimator.hpp"
#include "gazedec/geometry.hpp"

namespace gazedec {

/// Parameters of the synthetic gaze world. Samples are generated as
///   features = F(appearance, t) + feature noise
///   label    = t + bias + bias_slope * t + label noise
/// with t drawn uniformly over the gaze range. Biases are drawn i.i.d. per
/// axis with SD bias_sd, independent of appearance. The gaze range plus the
/// largest plausible bias must stay inside +-90 degrees or generation fails
/// when a label leaves the valid range.
struct WorldConfig {
  int feature_dim = 16;
  int n_subjects = 15;
  int samples_per_subject = 200;
  double yaw_min = -20.0;
  double yaw_max = 20.0;
  double pitch_min = -15.0;
  double pitch_max = 15.0;
  double bias_sd = 3.0;          // degrees per axis
  double bias_slope_sd = 0.0;    // unitless; 0 keeps the bias constant in t
  double feature_noise_sd = 0.05;
  double label_noise_sd = 1.0;   // degrees
  std::uint64_t seed = 1;

  void validate() const;
};

struct SubjectProfile {
  SubjectKey key;
  std::vector<double> appearance;        // c_i
  GazeAngle bias;                        // b_i, degrees
  std::array<double, 4> bias_slope{};    // row-major 2x2, applied to t in degrees
};

/// F concatenates an affine image of t, fixed sinusoidal features of t, and
/// an affine image of the appearance vector, mixed by a seeded random linear
/// map. Terms odd under yaw negation feed only the first feature_dim/2
/// coordinates, so a horizontal flip is exactly a sign change of that block.
class SynthWorld {
 public:
  static constexpr int kAppearanceDim = 3;

  explicit SynthWorld(WorldConfig cfg);

  const WorldConfig& config() const { return cfg_; }
  int odd_block_dim() const { return cfg_.feature_dim / 2; }

  /// Deterministic in the config seed.
  std::vector<SubjectProfile> sample_subjects() const;

  /// Throws when t lies outside the configured gaze range.
  Sample generate_sample(const SubjectProfile& profile, const GazeAngle& t,
                         std::mt19937_64& rng) const;

  /// samples_per_subject uniform gaze points per subject; byte-identical
  /// datasets for identical configs.
  std::pair<Dataset, std::vector<SubjectProfile>> generate_dataset() const;
  Dataset generate_dataset(const std::vector<SubjectProfile>& profiles) const;

  /// Linear estimator that inverts the mixing map: in the noiseless world it
  /// reproduces t exactly, and it is exactly flip-equivariant. Requires
  /// feature_dim/2 >= 3 odd and >= 6 even coordinates (feature_dim >= 12).
  Params perfect_linear_params() const;

 private:
  WorldConfig cfg_;
  std::vector<double> mix_odd_;   // (d_o x 3) row-major
  std::vector<double> mix_even_;  // (d_e x (3 + kAppearanceDim)) row-major
};

/// Horizontal mirror of a world-generated dataset: gaze and latent angles
/// flip, the yaw-odd feature block negates, subject keys toggle `flipped`.
/// Exact involution. Requires the world feature layout (feature_dim >= 2).
Dataset flip_dataset(const Dataset& d);

}  // namespace gazedec
