#include "gazedec/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gazedec/errors.hpp"
#include "gazedec/format.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

int Architecture::param_count() const {
  if (kind == ArchKind::linear) return 2 * input_dim + 2;
  return hidden_units * input_dim + hidden_units + 2 * hidden_units + 2;
}

void Architecture::validate() const {
  if (input_dim <= 0) throw DimensionError("input_dim must be positive");
  if (kind == ArchKind::mlp && hidden_units <= 0) {
    throw DimensionError("mlp needs hidden_units > 0");
  }
}

Params init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Params p{arch, std::vector<double>(static_cast<std::size_t>(arch.param_count()), 0.0)};
  auto rng = make_rng(seed, 0x9a7a);

  auto fill_uniform = [&rng](std::span<double> w, int fan_in) {
    const double bound = std::sqrt(3.0 / fan_in);  // variance 1/fan_in
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : w) v = u(rng);
  };

  std::span<double> vals(p.values);
  if (arch.kind == ArchKind::linear) {
    fill_uniform(vals.subspan(0, 2 * arch.input_dim), arch.input_dim);
  } else {
    const int h = arch.hidden_units;
    fill_uniform(vals.subspan(0, h * arch.input_dim), arch.input_dim);
    fill_uniform(vals.subspan(h * arch.input_dim + h, 2 * h), h);
  }
  return p;
}

namespace {

void check_input(const Params& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.arch.input_dim) {
    throw DimensionError("input has " + std::to_string(x.size()) + " entries, model expects " +
                         std::to_string(p.arch.input_dim));
  }
  if (static_cast<int>(p.values.size()) != p.arch.param_count()) {
    throw DimensionError("parameter vector length does not match architecture");
  }
}

}  // namespace

GazeAngle forward(const Params& p, std::span<const double> x) {
  check_input(p, x);
  const double* v = p.values.data();
  const int d = p.arch.input_dim;

  if (p.arch.kind == ArchKind::linear) {
    double out[2];
    for (int k = 0; k < 2; ++k) {
      double acc = v[2 * d + k];  // offset
      const double* row = v + k * d;
      for (int j = 0; j < d; ++j) acc += row[j] * x[j];
      out[k] = kOutputScaleDeg * acc;
    }
    return {out[0], out[1]};
  }

  const int h = p.arch.hidden_units;
  const double* w1 = v;
  const double* b1 = v + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + 2 * h;
  double out[2] = {b2[0], b2[1]};
  for (int i = 0; i < h; ++i) {
    double acc = b1[i];
    const double* row = w1 + i * d;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    if (acc > 0.0) {
      out[0] += w2[i] * acc;
      out[1] += w2[h + i] * acc;
    }
  }
  return {kOutputScaleDeg * out[0], kOutputScaleDeg * out[1]};
}

std::vector<double> last_stage_features(const Params& p, std::span<const double> x) {
  check_input(p, x);
  if (p.arch.kind == ArchKind::linear) return {x.begin(), x.end()};

  const int d = p.arch.input_dim;
  const int h = p.arch.hidden_units;
  const double* w1 = p.values.data();
  const double* b1 = w1 + h * d;
  std::vector<double> out(h);
  for (int i = 0; i < h; ++i) {
    double acc = b1[i];
    const double* row = w1 + i * d;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    out[i] = std::max(acc, 0.0);
  }
  return out;
}

DecompositionFit closed_form_decomposition_fit(const Dataset& train, double ridge) {
  if (train.size() == 0) throw InsufficientDataError("empty training set");
  const int n = static_cast<int>(train.size());
  const int d = train.feature_dim();
  const auto& subjects = train.subjects();
  const int n_subj = static_cast<int>(subjects.size());

  Eigen::MatrixXd x(n, d);
  Eigen::MatrixXd g(n, 2);
  for (int i = 0; i < n; ++i) {
    const Sample& s = train[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) x(i, j) = s.features[static_cast<std::size_t>(j)];
    g(i, 0) = s.gaze.yaw;
    g(i, 1) = s.gaze.pitch;
  }

  // Within-subject centering absorbs the per-subject intercepts exactly.
  Eigen::MatrixXd mean_x = Eigen::MatrixXd::Zero(n_subj, d);
  Eigen::MatrixXd mean_g = Eigen::MatrixXd::Zero(n_subj, 2);
  Eigen::MatrixXd xc = x;
  Eigen::MatrixXd gc = g;
  for (int si = 0; si < n_subj; ++si) {
    const auto& idx = train.indices_of(subjects[static_cast<std::size_t>(si)]);
    for (int i : idx) {
      mean_x.row(si) += x.row(i);
      mean_g.row(si) += g.row(i);
    }
    mean_x.row(si) /= static_cast<double>(idx.size());
    mean_g.row(si) /= static_cast<double>(idx.size());
    for (int i : idx) {
      xc.row(i) -= mean_x.row(si);
      gc.row(i) -= mean_g.row(si);
    }
  }

  Eigen::MatrixXd w;  // d x 2
  if (ridge > 0.0) {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += ridge;
    w = gram.ldlt().solve(xc.transpose() * gc);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    if (qr.rank() < d) {
      throw RankDeficiencyError("centered design has rank " + std::to_string(qr.rank()) +
                                " < " + std::to_string(d) + "; pass ridge > 0 to proceed");
    }
    w = qr.solve(gc);
  }

  // Per-subject intercepts split into a shared offset plus centered biases.
  Eigen::MatrixXd gamma = mean_g - mean_x * w;  // n_subj x 2
  const Eigen::RowVector2d offset = gamma.colwise().mean();

  DecompositionFit fit;
  fit.params.arch = Architecture{ArchKind::linear, d, 0};
  fit.params.values.assign(static_cast<std::size_t>(fit.params.arch.param_count()), 0.0);
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < d; ++j) {
      fit.params.values[static_cast<std::size_t>(k * d + j)] = w(j, k) / kOutputScaleDeg;
    }
    fit.params.values[static_cast<std::size_t>(2 * d + k)] = offset(k) / kOutputScaleDeg;
  }
  for (int si = 0; si < n_subj; ++si) {
    fit.biases[subjects[static_cast<std::size_t>(si)]] =
        GazeAngle{gamma(si, 0) - offset(0), gamma(si, 1) - offset(1)};
  }
  fit.squared_residual = (gc - xc * w).squaredNorm();
  return fit;
}

void save_params(const Params& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write params file: " + path.string());
  out << "gazedec-params v1\n";
  out << "kind=" << (p.arch.kind == ArchKind::linear ? "linear" : "mlp")
      << " input_dim=" << p.arch.input_dim << " hidden_units=" << p.arch.hidden_units << '\n';
  out << p.values.size() << '\n';
  for (double v : p.values) out << g17(v) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Params load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open params file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "gazedec-params v1") {
    throw ParseError("line 1: expected 'gazedec-params v1'");
  }
  if (!std::getline(in, line)) throw ParseError("line 2: missing architecture line");
  std::istringstream arch_in(line);
  std::string kind_tok, dim_tok, hidden_tok;
  arch_in >> kind_tok >> dim_tok >> hidden_tok;
  Params p;
  if (kind_tok == "kind=linear") {
    p.arch.kind = ArchKind::linear;
  } else if (kind_tok == "kind=mlp") {
    p.arch.kind = ArchKind::mlp;
  } else {
    throw ParseError("line 2: bad kind token");
  }
  if (dim_tok.rfind("input_dim=", 0) != 0 || hidden_tok.rfind("hidden_units=", 0) != 0) {
    throw ParseError("line 2: bad architecture line");
  }
  p.arch.input_dim = std::stoi(dim_tok.substr(10));
  p.arch.hidden_units = std::stoi(hidden_tok.substr(13));
  p.arch.validate();
  if (!std::getline(in, line)) throw ParseError("line 3: missing value count");
  const std::size_t count = std::stoul(line);
  if (count != static_cast<std::size_t>(p.arch.param_count())) {
    throw ParseError("line 3: value count does not match architecture");
  }
  p.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ParseError("truncated params file");
    p.values.push_back(std::strtod(line.c_str(), nullptr));
    if (!std::isfinite(p.values.back())) throw ParseError("non-finite parameter value");
  }
  return p;
}

}  // namespace gazedec
