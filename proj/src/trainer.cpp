#include "gazedec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gazedec/errors.hpp"
#include "gazedec/rng.hpp"

namespace gazedec {

namespace {

constexpr std::uint64_t kTagShuffle = 41;
constexpr std::uint64_t kTagFold = 43;

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct HiddenBuffer {
  std::vector<double> pre;  // hidden pre-activations
};

GazeAngle forward_with_hidden(const Params& p, std::span<const double> x, HiddenBuffer* hb) {
  const int d = p.arch.input_dim;
  const double* v = p.values.data();
  if (p.arch.kind == ArchKind::linear) {
    double out[2];
    for (int k = 0; k < 2; ++k) {
      double acc = v[2 * d + k];
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
  hb->pre.resize(static_cast<std::size_t>(h));
  double out[2] = {b2[0], b2[1]};
  for (int i = 0; i < h; ++i) {
    double acc = b1[i];
    const double* row = w1 + i * d;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    hb->pre[static_cast<std::size_t>(i)] = acc;
    if (acc > 0.0) {
      out[0] += w2[i] * acc;
      out[1] += w2[h + i] * acc;
    }
  }
  return {kOutputScaleDeg * out[0], kOutputScaleDeg * out[1]};
}

int require_beta(const DecompositionState& state, const SubjectKey& key) {
  const int bi = state.beta_index(key);
  if (bi < 0) throw Error("no bias parameter for subject " + to_string(key));
  return bi;
}

}  // namespace

void TrainConfig::validate() const {
  if (lambda < 0) throw ConfigError("lambda must be nonnegative");
  if (epochs <= 0 || batch_size <= 0) throw ConfigError("epochs and batch_size must be positive");
  if (!(initial_lr > 0)) throw ConfigError("initial_lr must be positive");
  if (lr_decay_every <= 0) throw ConfigError("lr_decay_every must be positive");
}

GazeAngle DecompositionState::beta_deg(int subject_index) const {
  const std::size_t base = 2 * static_cast<std::size_t>(subject_index);
  return {kOutputScaleDeg * beta_values[base], kOutputScaleDeg * beta_values[base + 1]};
}

GazeAngle DecompositionState::beta_sum_deg() const {
  GazeAngle sum{};
  for (std::size_t i = 0; i < subjects.size(); ++i) sum += beta_deg(static_cast<int>(i));
  return sum;
}

int DecompositionState::beta_index(const SubjectKey& k) const {
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (subjects[i] == k) return static_cast<int>(i);
  }
  return -1;
}

DecompositionState make_state(const Dataset& train, const Architecture& arch,
                              const TrainConfig& cfg) {
  cfg.validate();
  Architecture a = arch;
  a.input_dim = train.feature_dim();
  DecompositionState state;
  state.params = init_params(a, cfg.seed);
  state.decomposition = cfg.decomposition;
  state.lambda = cfg.lambda;
  if (cfg.decomposition) {
    state.subjects = train.subjects();
    state.beta_values.assign(2 * state.subjects.size(), 0.0);
  }
  return state;
}

double decomposition_loss(const DecompositionState& state, const Dataset& data,
                          std::span<const int> batch) {
  HiddenBuffer hb;
  double loss = 0.0;
  for (int idx : batch) {
    const Sample& s = data[static_cast<std::size_t>(idx)];
    const GazeAngle pred = forward_with_hidden(state.params, s.features, &hb);
    GazeAngle r = s.gaze - pred;
    if (state.decomposition) r -= state.beta_deg(require_beta(state, s.subject));
    loss += r.yaw * r.yaw + r.pitch * r.pitch;
  }
  if (state.decomposition) {
    const GazeAngle sum = state.beta_sum_deg();
    loss += state.lambda * (std::abs(sum.yaw) + std::abs(sum.pitch));
  }
  return loss;
}

Gradients loss_gradients(const DecompositionState& state, const Dataset& data,
                         std::span<const int> batch, double reg_scale) {
  const Architecture& arch = state.params.arch;
  const int d = arch.input_dim;
  Gradients g;
  g.params.assign(state.params.values.size(), 0.0);
  g.betas.assign(state.beta_values.size(), 0.0);

  HiddenBuffer hb;
  for (int idx : batch) {
    const Sample& s = data[static_cast<std::size_t>(idx)];
    const GazeAngle pred = forward_with_hidden(state.params, s.features, &hb);
    int bi = -1;
    GazeAngle r = s.gaze - pred;
    if (state.decomposition) {
      bi = require_beta(state, s.subject);
      r -= state.beta_deg(bi);
    }
    // d(loss)/d(t_hat) = -2 r; the output stage carries the degree scale.
    const double dy = -2.0 * r.yaw * kOutputScaleDeg;
    const double dp = -2.0 * r.pitch * kOutputScaleDeg;
    const double* x = s.features.data();

    if (arch.kind == ArchKind::linear) {
      for (int j = 0; j < d; ++j) {
        g.params[static_cast<std::size_t>(j)] += dy * x[j];
        g.params[static_cast<std::size_t>(d + j)] += dp * x[j];
      }
      g.params[static_cast<std::size_t>(2 * d)] += dy;
      g.params[static_cast<std::size_t>(2 * d + 1)] += dp;
    } else {
      const int h = arch.hidden_units;
      const double* v = state.params.values.data();
      const double* w2 = v + h * d + h;
      double* gw1 = g.params.data();
      double* gb1 = gw1 + h * d;
      double* gw2 = gb1 + h;
      double* gb2 = gw2 + 2 * h;
      gb2[0] += dy;
      gb2[1] += dp;
      for (int i = 0; i < h; ++i) {
        const double pre = hb.pre[static_cast<std::size_t>(i)];
        if (pre <= 0.0) continue;  // rectifier gate (subgradient 0 at the kink)
        gw2[i] += dy * pre;
        gw2[h + i] += dp * pre;
        const double dh = dy * w2[i] + dp * w2[h + i];
        gb1[i] += dh;
        double* row = gw1 + i * d;
        for (int j = 0; j < d; ++j) row[j] += dh * x[j];
      }
    }

    if (bi >= 0) {
      g.betas[2 * static_cast<std::size_t>(bi)] += dy;
      g.betas[2 * static_cast<std::size_t>(bi) + 1] += dp;
    }
  }

  if (state.decomposition && state.lambda > 0.0 && !state.subjects.empty()) {
    const GazeAngle sum = state.beta_sum_deg();
    const double sy = state.lambda * sign_or_zero(sum.yaw) * kOutputScaleDeg * reg_scale;
    const double sp = state.lambda * sign_or_zero(sum.pitch) * kOutputScaleDeg * reg_scale;
    for (std::size_t i = 0; i < state.subjects.size(); ++i) {
      g.betas[2 * i] += sy;
      g.betas[2 * i + 1] += sp;
    }
  }
  return g;
}

namespace {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
};

void apply_update(std::vector<double>& values, const std::vector<double>& grad, double lr,
                  Optimizer opt, AdamState& adam, std::size_t offset) {
  if (opt == Optimizer::plain_sgd) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
    return;
  }
  const double bc1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(adam.t));
  const double bc2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(adam.t));
  for (std::size_t i = 0; i < values.size(); ++i) {
    double& m = adam.m[offset + i];
    double& v = adam.v[offset + i];
    m = AdamState::kBeta1 * m + (1.0 - AdamState::kBeta1) * grad[i];
    v = AdamState::kBeta2 * v + (1.0 - AdamState::kBeta2) * grad[i] * grad[i];
    values[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + AdamState::kEps);
  }
}

}  // namespace

TrainedDecomposition train(const Dataset& train_data, const Architecture& arch,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (train_data.size() == 0) throw InsufficientDataError("empty training set");
  if (cfg.decomposition && train_data.subjects().size() < 2) {
    throw InsufficientDataError("decomposition training needs at least 2 subjects");
  }

  DecompositionState state = make_state(train_data, arch, cfg);
  const int n = static_cast<int>(train_data.size());
  const int n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const double reg_scale = 1.0 / static_cast<double>(n_batches);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> all = order;

  AdamState adam;
  adam.m.assign(state.params.values.size() + state.beta_values.size(), 0.0);
  adam.v.assign(adam.m.size(), 0.0);

  TrainedDecomposition out;
  out.arch = state.params.arch;
  out.history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.initial_lr / std::pow(10.0, static_cast<double>(epoch / cfg.lr_decay_every));
    auto rng = make_rng(cfg.seed, kTagShuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    for (int b = 0; b < n_batches; ++b) {
      const int lo = b * cfg.batch_size;
      const int hi = std::min(n, lo + cfg.batch_size);
      std::span<const int> batch(order.data() + lo, static_cast<std::size_t>(hi - lo));
      Gradients g = loss_gradients(state, train_data, batch, reg_scale);
      ++adam.t;
      apply_update(state.params.values, g.params, lr, cfg.optimizer, adam, 0);
      apply_update(state.beta_values, g.betas, lr, cfg.optimizer, adam,
                   state.params.values.size());
    }

    const double epoch_loss = decomposition_loss(state, train_data, all);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("non-finite loss after epoch " + std::to_string(epoch + 1) +
                          " (lr=" + std::to_string(lr) + "); lower the learning rate");
    }
    out.history.push_back(epoch_loss);
  }

  if (cfg.decomposition && !state.subjects.empty()) {
    // Exact minimization along the flat shift direction: residuals are
    // unchanged, the regularizer drops to zero.
    double shift[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < state.subjects.size(); ++i) {
      shift[0] += state.beta_values[2 * i];
      shift[1] += state.beta_values[2 * i + 1];
    }
    shift[0] /= static_cast<double>(state.subjects.size());
    shift[1] /= static_cast<double>(state.subjects.size());
    for (std::size_t i = 0; i < state.subjects.size(); ++i) {
      state.beta_values[2 * i] -= shift[0];
      state.beta_values[2 * i + 1] -= shift[1];
    }
    const Architecture& a = state.params.arch;
    const std::size_t off = (a.kind == ArchKind::linear)
                                ? static_cast<std::size_t>(2 * a.input_dim)
                                : state.params.values.size() - 2;
    state.params.values[off] += shift[0];
    state.params.values[off + 1] += shift[1];
  }

  out.params = std::move(state.params);
  for (std::size_t i = 0; i < state.subjects.size(); ++i) {
    const std::size_t base = 2 * i;
    out.train_biases[state.subjects[i]] = GazeAngle{
        kOutputScaleDeg * state.beta_values[base], kOutputScaleDeg * state.beta_values[base + 1]};
  }
  return out;
}

BetaConsistency train_biases_consistency(const Dataset& d, const Architecture& arch,
                                         const TrainConfig& cfg, bool pair_flipped) {
  if (d.subjects().size() < 3) {
    throw InsufficientDataError("bias consistency needs at least 3 subjects");
  }
  const auto folds = leave_one_subject_out_splits(d, pair_flipped);

  // observed[i][f] is subject i's bias in fold f, or unset.
  std::map<SubjectKey, std::map<std::size_t, GazeAngle>> observed;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, kTagFold, f);
    const TrainedDecomposition t = train(folds[f].train, arch, fold_cfg);
    for (const auto& [key, beta] : t.train_biases) observed[key][f] = beta;
  }

  // Each fold's bias table carries its own sum-to-zero reference, and the
  // reference moves with the fold's subject set. That common shift is the
  // objective's non-identifiable mode, so the tables are aligned on it
  // (additive two-way fit, per axis) before measuring per-subject spread.
  std::map<SubjectKey, GazeAngle> m;
  std::vector<GazeAngle> delta(folds.size());
  for (const auto& [key, byfold] : observed) {
    GazeAngle mean{};
    for (const auto& [f, b] : byfold) mean += b;
    m[key] = (1.0 / static_cast<double>(byfold.size())) * mean;
  }
  for (int it = 0; it < 100; ++it) {
    std::vector<GazeAngle> dsum(folds.size());
    std::vector<int> dcnt(folds.size(), 0);
    for (const auto& [key, byfold] : observed) {
      for (const auto& [f, b] : byfold) {
        dsum[f] += b - m[key];
        ++dcnt[f];
      }
    }
    GazeAngle dmean{};
    for (std::size_t f = 0; f < folds.size(); ++f) {
      delta[f] = dcnt[f] > 0 ? (1.0 / dcnt[f]) * dsum[f] : GazeAngle{};
      dmean += delta[f];
    }
    dmean = (1.0 / static_cast<double>(folds.size())) * dmean;
    for (GazeAngle& dl : delta) dl -= dmean;  // pin the global constant
    for (const auto& [key, byfold] : observed) {
      GazeAngle sum{};
      for (const auto& [f, b] : byfold) sum += b - delta[f];
      m[key] = (1.0 / static_cast<double>(byfold.size())) * sum;
    }
  }

  BetaConsistency rep;
  double intra[2] = {0.0, 0.0};
  std::vector<GazeAngle> means;
  for (const auto& [key, byfold] : observed) {
    const GazeAngle mean = m.at(key);
    GazeAngle var{};
    if (byfold.size() > 1) {
      for (const auto& [f, b] : byfold) {
        const GazeAngle e = b - delta[f] - mean;
        var.yaw += e.yaw * e.yaw;
        var.pitch += e.pitch * e.pitch;
      }
      var = (1.0 / static_cast<double>(byfold.size() - 1)) * var;
    }
    rep.per_subject[key] = BetaConsistency::PerSubject{
        mean, GazeAngle{std::sqrt(var.yaw), std::sqrt(var.pitch)},
        static_cast<int>(byfold.size())};
    intra[0] += var.yaw;
    intra[1] += var.pitch;
    means.push_back(mean);
  }
  const double n_subj = static_cast<double>(means.size());
  rep.intra_subject_variance = {intra[0] / n_subj, intra[1] / n_subj};

  GazeAngle grand{};
  for (const GazeAngle& mn : means) grand += mn;
  grand = (1.0 / n_subj) * grand;
  GazeAngle inter{};
  for (const GazeAngle& mn : means) {
    inter.yaw += (mn.yaw - grand.yaw) * (mn.yaw - grand.yaw);
    inter.pitch += (mn.pitch - grand.pitch) * (mn.pitch - grand.pitch);
  }
  rep.inter_subject_variance = (1.0 / (n_subj - 1.0)) * inter;
  return rep;
}

}  // namespace gazedec
