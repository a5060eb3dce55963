#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "gazedec/errors.hpp"

namespace {

using gazedec::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string dataset;
  std::string model;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key=value config file");
  cmd->add_option("--out", f.out, "output directory (default: out)");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&f](std::uint64_t v) { f.seed = v; f.seed_set = true; }, "master seed");
}

// Flags take precedence over config-file keys.
ExperimentConfig resolve(const CommonFlags& f,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg.load_file(f.config_path);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  if (f.seed_set) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.dataset.empty()) cfg.dataset_path = f.dataset;
  if (!f.model.empty()) cfg.model_path = f.model;
  cfg.finalize();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze decomposition and offset calibration experiments"};
  app.require_subcommand(1);

  CommonFlags flags[7];
  std::vector<std::pair<std::string, std::string>> overrides[7];

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset and its profiles");
  add_common(synth, flags[0]);

  auto* train_cmd = app.add_subcommand("train", "train the decomposition on a dataset");
  add_common(train_cmd, flags[1]);
  train_cmd->add_option("--dataset", flags[1].dataset, "dataset file");
  train_cmd->add_option_function<double>(
      "--lambda", [&](double v) { overrides[1].emplace_back("train.lambda", std::to_string(v)); },
      "bias-sum regularizer weight");
  train_cmd->add_flag_callback(
      "--no-decomposition", [&] { overrides[1].emplace_back("train.decomposition", "0"); },
      "freeze all per-subject biases at zero");

  auto* calibrate = app.add_subcommand("calibrate", "run calibration trials on a trained model");
  add_common(calibrate, flags[2]);
  calibrate->add_option("--dataset", flags[2].dataset, "dataset file");
  calibrate->add_option("--model", flags[2].model, "model params file");
  calibrate->add_option_function<std::string>(
      "--protocol", [&](const std::string& v) { overrides[2].emplace_back("protocol.kind", v); },
      "sgpc|mgpc");
  calibrate->add_option_function<int>(
      "--dc-size", [&](int v) { overrides[2].emplace_back("protocol.dc_size", std::to_string(v)); },
      "calibration set size");
  calibrate->add_option_function<double>(
      "--radius", [&](double v) { overrides[2].emplace_back("protocol.radius", std::to_string(v)); },
      "SGPC gaze-point radius in degrees (default 2)");
  calibrate->add_option_function<int>(
      "--trials", [&](int v) { overrides[2].emplace_back("protocol.trials", std::to_string(v)); },
      "number of trials (default 5000)");
  calibrate->add_option_function<std::string>(
      "--method", [&](const std::string& v) { overrides[2].emplace_back("protocol.method", v); },
      "offset|fc|la|none");

  auto* eval_cmd = app.add_subcommand("eval", "calibration-free and lower-bound report");
  add_common(eval_cmd, flags[3]);
  eval_cmd->add_option("--dataset", flags[3].dataset, "dataset file");
  eval_cmd->add_option("--model", flags[3].model, "model params file");

  auto* grid = app.add_subcommand("grid", "calibration-location robustness map (+SVG)");
  add_common(grid, flags[4]);
  grid->add_option("--dataset", flags[4].dataset, "dataset file");
  grid->add_option("--model", flags[4].model, "model params file");

  auto* analyze = app.add_subcommand("analyze", "bias/variance decomposition of the error");
  add_common(analyze, flags[5]);
  analyze->add_option("--dataset", flags[5].dataset, "dataset file");
  analyze->add_option("--model", flags[5].model, "model params file");

  auto* crossval = app.add_subcommand("crossval", "leave-one-subject-out bias consistency");
  add_common(crossval, flags[6]);
  crossval->add_option("--dataset", flags[6].dataset, "dataset file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return gazedec::cli::cmd_synth(resolve(flags[0], overrides[0]));
    if (train_cmd->parsed()) return gazedec::cli::cmd_train(resolve(flags[1], overrides[1]));
    if (calibrate->parsed()) return gazedec::cli::cmd_calibrate(resolve(flags[2], overrides[2]));
    if (eval_cmd->parsed()) return gazedec::cli::cmd_eval(resolve(flags[3], overrides[3]));
    if (grid->parsed()) return gazedec::cli::cmd_grid(resolve(flags[4], overrides[4]));
    if (analyze->parsed()) return gazedec::cli::cmd_analyze(resolve(flags[5], overrides[5]));
    if (crossval->parsed()) return gazedec::cli::cmd_crossval(resolve(flags[6], overrides[6]));
  } catch (const gazedec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
