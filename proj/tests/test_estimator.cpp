#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gazedec/errors.hpp"
#include "gazedec/estimator.hpp"
#include "gazedec/rng.hpp"
#include "gazedec/synthworld.hpp"

using namespace gazedec;

namespace {

// Independent two-loop evaluation of the mlp layout, kept deliberately naive.
GazeAngle naive_mlp_forward(const Params& p, const std::vector<double>& x) {
  const int d = p.arch.input_dim;
  const int h = p.arch.hidden_units;
  std::vector<double> hidden(h);
  for (int i = 0; i < h; ++i) {
    double acc = p.values[static_cast<std::size_t>(h * d + i)];
    for (int j = 0; j < d; ++j) acc += p.values[static_cast<std::size_t>(i * d + j)] * x[static_cast<std::size_t>(j)];
    hidden[static_cast<std::size_t>(i)] = acc > 0.0 ? acc : 0.0;
  }
  double out[2];
  for (int k = 0; k < 2; ++k) {
    double acc = p.values[p.values.size() - 2 + static_cast<std::size_t>(k)];
    for (int i = 0; i < h; ++i) {
      acc += p.values[static_cast<std::size_t>(h * d + h + k * h + i)] * hidden[static_cast<std::size_t>(i)];
    }
    out[k] = kOutputScaleDeg * acc;
  }
  return {out[0], out[1]};
}

std::vector<double> random_features(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (double& v : x) v = u(rng);
  return x;
}

// Dataset with a known exact linear ground truth: g = W x + b_i, full-rank
// random features. The exact-recovery oracle for the closed-form fit.
struct LinearGroundTruth {
  Dataset data{1};
  std::vector<GazeAngle> biases;       // raw
  std::vector<GazeAngle> centered;     // centered over subjects
};

LinearGroundTruth make_linear_world(int d, int subjects, int per_subject, double label_noise,
                                    std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(2 * d));
  for (double& v : w) v = 0.3 * gauss(rng);
  LinearGroundTruth out;
  out.data = Dataset(d);
  GazeAngle mean{};
  for (int s = 0; s < subjects; ++s) {
    out.biases.push_back({2.5 * gauss(rng), 2.5 * gauss(rng)});
    mean += out.biases.back();
  }
  mean = (1.0 / subjects) * mean;
  for (const GazeAngle& b : out.biases) out.centered.push_back(b - mean);
  for (int s = 0; s < subjects; ++s) {
    for (int i = 0; i < per_subject; ++i) {
      Sample smp;
      smp.subject = {"u" + std::to_string(s), false};
      smp.features = random_features(d, rng);
      double y[2];
      for (int k = 0; k < 2; ++k) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += w[static_cast<std::size_t>(k * d + j)] * smp.features[static_cast<std::size_t>(j)];
        y[k] = acc;
      }
      smp.gaze = GazeAngle{y[0], y[1]} + out.biases[static_cast<std::size_t>(s)];
      if (label_noise > 0) smp.gaze += GazeAngle{label_noise * gauss(rng), label_noise * gauss(rng)};
      out.data.add(smp);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("init is deterministic, finite, and has the right size") {
  const Architecture lin{ArchKind::linear, 7, 0};
  const Params a = init_params(lin, 5);
  const Params b = init_params(lin, 5);
  CHECK(a.values == b.values);
  CHECK(a.values.size() == 2 * 7 + 2);
  for (double v : a.values) CHECK(std::isfinite(v));
  const Params c = init_params(lin, 6);
  CHECK(a.values != c.values);

  const Architecture mlp{ArchKind::mlp, 7, 5};
  CHECK(init_params(mlp, 1).values.size() == static_cast<std::size_t>(mlp.param_count()));
}

TEST_CASE("zero params map everything to the zero direction") {
  const Architecture lin{ArchKind::linear, 4, 0};
  Params p{lin, std::vector<double>(static_cast<std::size_t>(lin.param_count()), 0.0)};
  auto rng = make_rng(2);
  const auto x = random_features(4, rng);
  const GazeAngle out = forward(p, x);
  CHECK(out.yaw == 0.0);
  CHECK(out.pitch == 0.0);
}

TEST_CASE("linear forward reproduces an affine function exactly") {
  const Architecture lin{ArchKind::linear, 3, 0};
  Params p{lin, {0.1, -0.2, 0.3, /*row2*/ 0.5, 0.0, -0.1, /*offsets*/ 0.02, -0.01}};
  const std::vector<double> x{1.0, 2.0, -1.0};
  const GazeAngle out = forward(p, x);
  const double yaw = kOutputScaleDeg * (0.1 * 1.0 - 0.2 * 2.0 + 0.3 * -1.0 + 0.02);
  const double pitch = kOutputScaleDeg * (0.5 * 1.0 + 0.0 * 2.0 - 0.1 * -1.0 - 0.01);
  CHECK(out.yaw == doctest::Approx(yaw).epsilon(1e-15));
  CHECK(out.pitch == doctest::Approx(pitch).epsilon(1e-15));
}

TEST_CASE("mlp forward matches the naive two-loop oracle") {
  const Architecture mlp{ArchKind::mlp, 6, 9};
  auto rng = make_rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Params p = init_params(mlp, 100 + rep);
    const auto x = random_features(6, rng);
    const GazeAngle a = forward(p, x);
    const GazeAngle b = naive_mlp_forward(p, x);
    CHECK(std::abs(a.yaw - b.yaw) < 1e-12);
    CHECK(std::abs(a.pitch - b.pitch) < 1e-12);
  }
}

TEST_CASE("last stage features for linear is the input itself") {
  const Architecture lin{ArchKind::linear, 5, 0};
  const Params p = init_params(lin, 7);
  auto rng = make_rng(4);
  const auto x = random_features(5, rng);
  CHECK(last_stage_features(p, x) == x);
}

TEST_CASE("mlp output stage applied to stage features reproduces forward") {
  const Architecture mlp{ArchKind::mlp, 5, 8};
  auto rng = make_rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Params p = init_params(mlp, 200 + rep);
    const auto x = random_features(5, rng);
    const auto feats = last_stage_features(p, x);
    CHECK(feats.size() == 8);
    const int h = 8, d = 5;
    double out[2];
    for (int k = 0; k < 2; ++k) {
      double acc = p.values[p.values.size() - 2 + static_cast<std::size_t>(k)];
      for (int i = 0; i < h; ++i) acc += p.values[static_cast<std::size_t>(h * d + h + k * h + i)] * feats[static_cast<std::size_t>(i)];
      out[k] = kOutputScaleDeg * acc;
    }
    const GazeAngle f = forward(p, x);
    CHECK(std::abs(out[0] - f.yaw) < 1e-12);
    CHECK(std::abs(out[1] - f.pitch) < 1e-12);
  }
}

TEST_CASE("forward rejects dimension mismatches") {
  const Architecture lin{ArchKind::linear, 4, 0};
  const Params p = init_params(lin, 1);
  const std::vector<double> x{1.0, 2.0};
  CHECK_THROWS_AS(forward(p, x), DimensionError);
  CHECK_THROWS_AS(last_stage_features(p, x), DimensionError);
}

TEST_CASE("closed form recovers an exact linear world to machine precision") {
  const LinearGroundTruth gt = make_linear_world(6, 8, 30, 0.0, 11);
  const DecompositionFit fit = closed_form_decomposition_fit(gt.data);
  CHECK(fit.squared_residual < 1e-9);
  std::size_t s = 0;
  for (const SubjectKey& key : gt.data.subjects()) {
    const GazeAngle got = fit.biases.at(key);
    CHECK(std::abs(got.yaw - gt.centered[s].yaw) < 1e-6);
    CHECK(std::abs(got.pitch - gt.centered[s].pitch) < 1e-6);
    ++s;
  }
  // recovered biases are centered
  GazeAngle sum{};
  for (const auto& [key, b] : fit.biases) sum += b;
  CHECK(std::abs(sum.yaw) < 1e-9);
  CHECK(std::abs(sum.pitch) < 1e-9);
}

TEST_CASE("closed form bias error stays within the standard-error bound under noise") {
  const double sigma = 1.0;
  int within = 0, total = 0;
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const LinearGroundTruth gt = make_linear_world(6, 10, 200, sigma, seed);
    const DecompositionFit fit = closed_form_decomposition_fit(gt.data);
    std::size_t s = 0;
    for (const SubjectKey& key : gt.data.subjects()) {
      const GazeAngle got = fit.biases.at(key);
      if (std::abs(got.yaw - gt.centered[s].yaw) <= 3.0 * sigma / std::sqrt(200.0)) ++within;
      if (std::abs(got.pitch - gt.centered[s].pitch) <= 3.0 * sigma / std::sqrt(200.0)) ++within;
      total += 2;
      ++s;
    }
  }
  CHECK(within >= total - 1);  // 3-sigma bound, allow one straggler
}

TEST_CASE("closed form on the noiseless synthetic world leaves no residual") {
  WorldConfig cfg;
  cfg.feature_dim = 16;
  cfg.n_subjects = 8;
  cfg.samples_per_subject = 60;
  cfg.feature_noise_sd = 0.0;
  cfg.label_noise_sd = 0.0;
  cfg.seed = 31;
  const auto [data, profiles] = SynthWorld(cfg).generate_dataset();
  // within-subject centering removes all appearance variation, so the
  // centered design is rank deficient by construction and needs the ridge
  CHECK_THROWS_AS(closed_form_decomposition_fit(data), RankDeficiencyError);
  const DecompositionFit fit = closed_form_decomposition_fit(data, 1e-8);
  CHECK(fit.squared_residual < 1e-9);
}

TEST_CASE("rank deficiency throws without ridge and solves with it") {
  auto rng = make_rng(41);
  Dataset d(3);
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < 10; ++i) {
      Sample smp;
      smp.subject = {"r" + std::to_string(s), false};
      const double a = std::uniform_real_distribution<double>(-1, 1)(rng);
      smp.features = {a, 2.0 * a, 1.0};  // second column collinear, third constant
      smp.gaze = {3.0 * a, -a};
      d.add(smp);
    }
  }
  CHECK_THROWS_AS(closed_form_decomposition_fit(d), RankDeficiencyError);
  const DecompositionFit fit = closed_form_decomposition_fit(d, 1e-8);
  CHECK(fit.squared_residual < 1e-6);
}

TEST_CASE("params survive a save/load round trip") {
  const Architecture mlp{ArchKind::mlp, 6, 4};
  const Params p = init_params(mlp, 77);
  const auto path = std::filesystem::temp_directory_path() / "gazedec_tests" / "params.txt";
  std::filesystem::create_directories(path.parent_path());
  save_params(p, path);
  const Params q = load_params(path);
  CHECK(q.arch == p.arch);
  CHECK(q.values == p.values);
}

}  // TEST_SUITE
