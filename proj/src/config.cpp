#include "gazedec/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "gazedec/errors.hpp"
#include "gazedec/format.hpp"

namespace gazedec {

namespace {

double to_double(const std::string& key, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(x)) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  const long l = static_cast<long>(x);
  if (static_cast<double>(l) != x) throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return l;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "0" || v == "false") return false;
  if (v == "1" || v == "true") return true;
  throw ConfigError("key '" + key + "': expected 0/1, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") { seed = static_cast<std::uint64_t>(to_long(key, value)); return; }

  if (key == "world.feature_dim") { world.feature_dim = static_cast<int>(to_long(key, value)); return; }
  if (key == "world.n_subjects") { world.n_subjects = static_cast<int>(to_long(key, value)); return; }
  if (key == "world.samples_per_subject") { world.samples_per_subject = static_cast<int>(to_long(key, value)); return; }
  if (key == "world.yaw_min") { world.yaw_min = to_double(key, value); return; }
  if (key == "world.yaw_max") { world.yaw_max = to_double(key, value); return; }
  if (key == "world.pitch_min") { world.pitch_min = to_double(key, value); return; }
  if (key == "world.pitch_max") { world.pitch_max = to_double(key, value); return; }
  if (key == "world.bias_sd") { world.bias_sd = to_double(key, value); return; }
  if (key == "world.bias_slope_sd") { world.bias_slope_sd = to_double(key, value); return; }
  if (key == "world.feature_noise_sd") { world.feature_noise_sd = to_double(key, value); return; }
  if (key == "world.label_noise_sd") { world.label_noise_sd = to_double(key, value); return; }

  if (key == "train.arch") {
    if (value != "linear" && value != "mlp") throw ConfigError("key 'train.arch': expected linear|mlp");
    arch = value;
    return;
  }
  if (key == "train.hidden_units") { hidden_units = static_cast<int>(to_long(key, value)); return; }
  if (key == "train.lambda") { train.lambda = to_double(key, value); return; }
  if (key == "train.epochs") { train.epochs = static_cast<int>(to_long(key, value)); return; }
  if (key == "train.batch_size") { train.batch_size = static_cast<int>(to_long(key, value)); return; }
  if (key == "train.initial_lr") { train.initial_lr = to_double(key, value); return; }
  if (key == "train.lr_decay_every") { train.lr_decay_every = static_cast<int>(to_long(key, value)); return; }
  if (key == "train.decomposition") { train.decomposition = to_bool(key, value); return; }
  if (key == "train.optimizer") {
    if (value == "sgd") { train.optimizer = Optimizer::plain_sgd; return; }
    if (value == "adam") { train.optimizer = Optimizer::adaptive_moment; return; }
    throw ConfigError("key 'train.optimizer': expected sgd|adam");
  }

  if (key == "protocol.kind") {
    if (value == "sgpc") { protocol = Protocol::sgpc; return; }
    if (value == "mgpc") { protocol = Protocol::mgpc; return; }
    throw ConfigError("key 'protocol.kind': expected sgpc|mgpc");
  }
  if (key == "protocol.dc_size") { dc_size = static_cast<int>(to_long(key, value)); return; }
  if (key == "protocol.radius") { radius = to_double(key, value); return; }
  if (key == "protocol.trials") { trials = static_cast<int>(to_long(key, value)); return; }
  if (key == "protocol.fc_ridge") { fc_ridge = to_double(key, value); return; }
  if (key == "protocol.method") {
    if (value == "offset") { method = CalibrationMethod::offset; return; }
    if (value == "fc") { method = CalibrationMethod::fc; return; }
    if (value == "la") { method = CalibrationMethod::la; return; }
    if (value == "none") { method = CalibrationMethod::none; return; }
    throw ConfigError("key 'protocol.method': expected offset|fc|la|none");
  }

  if (key == "grid.yaw_min") { grid.yaw_min = to_double(key, value); return; }
  if (key == "grid.yaw_max") { grid.yaw_max = to_double(key, value); return; }
  if (key == "grid.pitch_min") { grid.pitch_min = to_double(key, value); return; }
  if (key == "grid.pitch_max") { grid.pitch_max = to_double(key, value); return; }
  if (key == "grid.step") { grid.step = to_double(key, value); return; }
  if (key == "grid.region") { grid.region = to_double(key, value); return; }
  if (key == "grid.dc_size") { grid.dc_size = static_cast<int>(to_long(key, value)); return; }
  if (key == "grid.radius") { grid.radius_deg = to_double(key, value); return; }

  if (key == "split.pair_flipped") { pair_flipped = to_bool(key, value); return; }

  if (key == "paths.dataset") { dataset_path = value; return; }
  if (key == "paths.model") { model_path = value; return; }
  if (key == "paths.out") { out_dir = value; return; }

  throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void ExperimentConfig::finalize() {
  world.seed = seed;
  train.seed = seed;
  grid.seed = seed;
  world.validate();
  train.validate();
}

Architecture ExperimentConfig::make_architecture(int input_dim) const {
  Architecture a;
  a.kind = arch == "mlp" ? ArchKind::mlp : ArchKind::linear;
  a.input_dim = input_dim;
  a.hidden_units = a.kind == ArchKind::mlp ? hidden_units : 0;
  a.validate();
  return a;
}

std::string ExperimentConfig::resolved_text() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(seed);
  kv["world.feature_dim"] = std::to_string(world.feature_dim);
  kv["world.n_subjects"] = std::to_string(world.n_subjects);
  kv["world.samples_per_subject"] = std::to_string(world.samples_per_subject);
  kv["world.yaw_min"] = g17(world.yaw_min);
  kv["world.yaw_max"] = g17(world.yaw_max);
  kv["world.pitch_min"] = g17(world.pitch_min);
  kv["world.pitch_max"] = g17(world.pitch_max);
  kv["world.bias_sd"] = g17(world.bias_sd);
  kv["world.bias_slope_sd"] = g17(world.bias_slope_sd);
  kv["world.feature_noise_sd"] = g17(world.feature_noise_sd);
  kv["world.label_noise_sd"] = g17(world.label_noise_sd);
  kv["train.arch"] = arch;
  kv["train.hidden_units"] = std::to_string(hidden_units);
  kv["train.lambda"] = g17(train.lambda);
  kv["train.epochs"] = std::to_string(train.epochs);
  kv["train.batch_size"] = std::to_string(train.batch_size);
  kv["train.initial_lr"] = g17(train.initial_lr);
  kv["train.lr_decay_every"] = std::to_string(train.lr_decay_every);
  kv["train.decomposition"] = train.decomposition ? "1" : "0";
  kv["train.optimizer"] = train.optimizer == Optimizer::plain_sgd ? "sgd" : "adam";
  kv["protocol.kind"] = to_string(protocol);
  kv["protocol.dc_size"] = std::to_string(dc_size);
  kv["protocol.radius"] = g17(radius);
  kv["protocol.trials"] = std::to_string(trials);
  kv["protocol.method"] = to_string(method);
  kv["protocol.fc_ridge"] = g17(fc_ridge);
  kv["grid.yaw_min"] = g17(grid.yaw_min);
  kv["grid.yaw_max"] = g17(grid.yaw_max);
  kv["grid.pitch_min"] = g17(grid.pitch_min);
  kv["grid.pitch_max"] = g17(grid.pitch_max);
  kv["grid.step"] = g17(grid.step);
  kv["grid.region"] = g17(grid.region);
  kv["grid.dc_size"] = std::to_string(grid.dc_size);
  kv["grid.radius"] = g17(grid.radius_deg);
  kv["split.pair_flipped"] = pair_flipped ? "1" : "0";
  kv["paths.dataset"] = dataset_path;
  kv["paths.model"] = model_path;
  kv["paths.out"] = out_dir;

  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  return out.str();
}

}  // namespace gazedec
