#pragma once

#include <filesystem>
#include <string>

#include "gazedec/calibration.hpp"
#include "gazedec/estimator.hpp"
#include "gazedec/evaluation.hpp"
#include "gazedec/synthworld.hpp"
#include "gazedec/trainer.hpp"

namespace gazedec {

/// Flat key=value experiment configuration shared by all CLI commands.
/// Unknown keys are rejected; `resolved_text` echoes every key with its
/// final value so any run can be reproduced from its output directory.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  WorldConfig world;
  TrainConfig train;
  GridSpec grid;

  std::string arch = "linear";  // linear | mlp
  int hidden_units = 32;

  Protocol protocol = Protocol::sgpc;
  int dc_size = 9;
  double radius = 2.0;
  int trials = 5000;
  CalibrationMethod method = CalibrationMethod::offset;
  double fc_ridge = 1e-6;
  bool pair_flipped = true;

  std::string dataset_path;
  std::string model_path;
  std::string out_dir;

  /// Throws ConfigError naming the key on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  /// Parses `key=value` lines; '#' starts a comment, blank lines are ignored.
  void load_file(const std::filesystem::path& path);

  /// Sorted key=value echo of the full resolved configuration.
  std::string resolved_text() const;

  /// Copies the master seed into the per-component seeds and validates.
  void finalize();

  Architecture make_architecture(int input_dim) const;
};

}  // namespace gazedec
