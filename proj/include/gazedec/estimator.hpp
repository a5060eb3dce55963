#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "gazedec/dataset.hpp"
#include "gazedec/geometry.hpp"

namespace gazedec {

enum class ArchKind { linear, mlp };

/// Output is always a (yaw, pitch) pair in degrees. The hidden layer uses a
/// rectifier; `hidden_units` is ignored for the linear kind.
struct Architecture {
  ArchKind kind = ArchKind::linear;
  int input_dim = 0;
  int hidden_units = 0;

  int param_count() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// The affine output stage predicts in units of kOutputScaleDeg degrees, so
/// weights of magnitude ~1 span the usual gaze range and a single step size
/// suits all trainable parameters. Per-subject bias parameters use the same
/// unit during optimization.
constexpr double kOutputScaleDeg = 30.0;

/// Flat parameter vector; the layout is fixed by the architecture.
///   linear: W (2 x d, row-major), b (2)          -> t = scale*(W x + b)
///   mlp:    W1 (h x d), b1 (h), W2 (2 x h), b2(2) -> t = scale*(W2 relu(W1 x + b1) + b2)
struct Params {
  Architecture arch;
  std::vector<double> values;
};

/// Symmetric uniform init with variance 1/fan_in on weights, zero offsets.
Params init_params(const Architecture& arch, std::uint64_t seed);

GazeAngle forward(const Params& p, std::span<const double> x);

/// Representation right before the final affine stage (linear: x itself).
std::vector<double> last_stage_features(const Params& p, std::span<const double> x);

struct DecompositionFit {
  Params params;                         // linear architecture
  std::map<SubjectKey, GazeAngle> biases;  // degrees; centered (sums to zero)
  double squared_residual = 0.0;           // total squared error of the fit
};

/// Exact minimizer of the squared-error part of the decomposition objective
/// for a linear estimator, with the per-subject biases centered to sum to
/// zero. Solved by within-subject centering plus ordinary least squares.
/// A rank-deficient centered design throws unless ridge > 0.
DecompositionFit closed_form_decomposition_fit(const Dataset& train, double ridge = 0.0);

/// Versioned flat text file so models can be reused across CLI commands.
void save_params(const Params& p, const std::filesystem::path& path);
Params load_params(const std::filesystem::path& path);

}  // namespace gazedec
