#include <doctest.h>

#include <cmath>
#include <vector>

#include "gazedec/errors.hpp"
#include "gazedec/rng.hpp"
#include "gazedec/synthworld.hpp"

using namespace gazedec;

namespace {

WorldConfig noiseless_config(std::uint64_t seed = 1) {
  WorldConfig cfg;
  cfg.feature_dim = 16;
  cfg.n_subjects = 6;
  cfg.samples_per_subject = 40;
  cfg.feature_noise_sd = 0.0;
  cfg.label_noise_sd = 0.0;
  cfg.seed = seed;
  return cfg;
}

bool same_samples(const Sample& a, const Sample& b) {
  return a.subject == b.subject && a.features == b.features && a.gaze == b.gaze &&
         a.latent_visual_axis == b.latent_visual_axis;
}

}  // namespace

TEST_SUITE("synthworld") {

TEST_CASE("zero bias SD gives zero biases") {
  WorldConfig cfg = noiseless_config();
  cfg.bias_sd = 0.0;
  for (const SubjectProfile& p : SynthWorld(cfg).sample_subjects()) {
    CHECK(p.bias.yaw == 0.0);
    CHECK(p.bias.pitch == 0.0);
  }
}

TEST_CASE("per-axis SD 2.85 lands the mean squared bias near 16.2 deg^2") {
  WorldConfig cfg = noiseless_config(42);
  cfg.n_subjects = 400;
  cfg.bias_sd = 2.85;
  double sum = 0.0;
  for (const SubjectProfile& p : SynthWorld(cfg).sample_subjects()) {
    sum += p.bias.yaw * p.bias.yaw + p.bias.pitch * p.bias.pitch;
  }
  const double mean_sq = sum / cfg.n_subjects;
  CHECK(mean_sq == doctest::Approx(16.2).epsilon(0.15));
}

TEST_CASE("same seed reproduces profiles and datasets exactly") {
  WorldConfig cfg = noiseless_config(9);
  cfg.feature_noise_sd = 0.05;
  cfg.label_noise_sd = 1.0;
  const SynthWorld w1(cfg);
  const SynthWorld w2(cfg);
  const auto p1 = w1.sample_subjects();
  const auto p2 = w2.sample_subjects();
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].bias == p2[i].bias);
    CHECK(p1[i].appearance == p2[i].appearance);
  }
  const auto [d1, q1] = w1.generate_dataset();
  const auto [d2, q2] = w2.generate_dataset();
  REQUIRE(d1.size() == d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i) CHECK(same_samples(d1[i], d2[i]));
}

TEST_CASE("noiseless zero-slope world satisfies the additive bias model exactly") {
  const WorldConfig cfg = noiseless_config(3);
  const SynthWorld world(cfg);
  const auto [data, profiles] = world.generate_dataset();
  for (const SubjectProfile& p : profiles) {
    for (int i : data.indices_of(p.key)) {
      const Sample& s = data[static_cast<std::size_t>(i)];
      REQUIRE(s.latent_visual_axis.has_value());
      const GazeAngle r = s.gaze - *s.latent_visual_axis;
      CHECK(std::abs(r.yaw - p.bias.yaw) < 1e-12);
      CHECK(std::abs(r.pitch - p.bias.pitch) < 1e-12);
    }
  }
}

TEST_CASE("gaze-dependent slope makes the residual linear in t") {
  WorldConfig cfg = noiseless_config(5);
  cfg.bias_slope_sd = 0.05;
  const SynthWorld world(cfg);
  const auto [data, profiles] = world.generate_dataset();
  for (const SubjectProfile& p : profiles) {
    for (int i : data.indices_of(p.key)) {
      const Sample& s = data[static_cast<std::size_t>(i)];
      const GazeAngle t = *s.latent_visual_axis;
      const GazeAngle expected{p.bias.yaw + p.bias_slope[0] * t.yaw + p.bias_slope[1] * t.pitch,
                               p.bias.pitch + p.bias_slope[2] * t.yaw + p.bias_slope[3] * t.pitch};
      const GazeAngle r = s.gaze - t;
      CHECK(std::abs(r.yaw - expected.yaw) < 1e-12);
      CHECK(std::abs(r.pitch - expected.pitch) < 1e-12);
    }
  }
}

TEST_CASE("with one noise draw, features differ only through appearance") {
  WorldConfig cfg = noiseless_config(7);
  cfg.feature_noise_sd = 0.1;
  const SynthWorld world(cfg);
  auto profiles = world.sample_subjects();
  REQUIRE(profiles.size() >= 2);
  const GazeAngle t{4.0, -3.0};

  auto rng_a = make_rng(99);
  auto rng_b = make_rng(99);
  const Sample sa = world.generate_sample(profiles[0], t, rng_a);
  const Sample sb = world.generate_sample(profiles[1], t, rng_b);
  // odd block carries no appearance terms, so it cancels exactly
  for (int i = 0; i < world.odd_block_dim(); ++i) {
    CHECK(sa.features[static_cast<std::size_t>(i)] == sb.features[static_cast<std::size_t>(i)]);
  }
  // same appearance, different bias: identical features under the same draw
  SubjectProfile p2 = profiles[1];
  p2.bias = {5.0, -5.0};
  auto rng_c = make_rng(99);
  const Sample sc = world.generate_sample(p2, t, rng_c);
  CHECK(sc.features == sb.features);
}

TEST_CASE("dataset shape and latent presence") {
  WorldConfig cfg = noiseless_config(11);
  cfg.n_subjects = 10;
  cfg.samples_per_subject = 200;
  const auto [data, profiles] = SynthWorld(cfg).generate_dataset();
  CHECK(data.size() == 2000);
  CHECK(data.subjects().size() == 10);
  for (const Sample& s : data.samples()) CHECK(s.latent_visual_axis.has_value());
}

TEST_CASE("per-subject residual mean approaches the bias at the LLN rate") {
  WorldConfig cfg = noiseless_config(13);
  cfg.n_subjects = 10;
  cfg.samples_per_subject = 200;
  cfg.label_noise_sd = 1.0;
  const SynthWorld world(cfg);
  const auto [data, profiles] = world.generate_dataset();
  const double tol = 3.0 * cfg.label_noise_sd / std::sqrt(200.0);
  for (const SubjectProfile& p : profiles) {
    GazeAngle mean{};
    const auto& idx = data.indices_of(p.key);
    for (int i : idx) {
      const Sample& s = data[static_cast<std::size_t>(i)];
      mean += s.gaze - *s.latent_visual_axis;
    }
    mean = (1.0 / static_cast<double>(idx.size())) * mean;
    CHECK(std::abs(mean.yaw - p.bias.yaw) < tol);
    CHECK(std::abs(mean.pitch - p.bias.pitch) < tol);
  }
}

TEST_CASE("double flip returns the original dataset exactly") {
  WorldConfig cfg = noiseless_config(17);
  cfg.feature_noise_sd = 0.05;
  cfg.label_noise_sd = 0.7;
  const auto [data, profiles] = SynthWorld(cfg).generate_dataset();
  const Dataset back = flip_dataset(flip_dataset(data));
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(same_samples(data[i], back[i]));
}

TEST_CASE("flip negates the perfect estimator's yaw output exactly") {
  WorldConfig cfg = noiseless_config(19);
  cfg.feature_noise_sd = 0.05;  // equivariance is exact even with noise
  const SynthWorld world(cfg);
  const auto [data, profiles] = world.generate_dataset();
  const Params oracle = world.perfect_linear_params();
  const Dataset flipped = flip_dataset(data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const GazeAngle a = forward(oracle, data[i].features);
    const GazeAngle b = forward(oracle, flipped[i].features);
    CHECK(std::abs(a.yaw + b.yaw) < 1e-12);
    CHECK(std::abs(a.pitch - b.pitch) < 1e-12);
  }
}

TEST_CASE("offset bias on flipped data is the flipped offset bias") {
  WorldConfig cfg = noiseless_config(23);
  cfg.label_noise_sd = 1.0;
  cfg.feature_noise_sd = 0.05;
  const SynthWorld world(cfg);
  const auto [data, profiles] = world.generate_dataset();
  const Params oracle = world.perfect_linear_params();
  const Dataset flipped = flip_dataset(data);
  for (const SubjectProfile& p : profiles) {
    GazeAngle orig{};
    GazeAngle flip{};
    for (int i : data.indices_of(p.key)) {
      const std::size_t k = static_cast<std::size_t>(i);
      orig += data[k].gaze - forward(oracle, data[k].features);
      flip += flipped[k].gaze - forward(oracle, flipped[k].features);
    }
    CHECK(std::abs(flip.yaw + orig.yaw) < 1e-9);
    CHECK(std::abs(flip.pitch - orig.pitch) < 1e-9);
  }
}

TEST_CASE("flip leaves pitch labels untouched") {
  WorldConfig cfg = noiseless_config(29);
  cfg.label_noise_sd = 1.2;
  const auto [data, profiles] = SynthWorld(cfg).generate_dataset();
  const Dataset flipped = flip_dataset(data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(flipped[i].gaze.pitch == data[i].gaze.pitch);
    CHECK(flipped[i].subject.flipped != data[i].subject.flipped);
  }
}

TEST_CASE("bias is independent of appearance across many subjects") {
  WorldConfig cfg = noiseless_config(31);
  cfg.n_subjects = 1500;
  cfg.bias_sd = 3.0;
  const auto profiles = SynthWorld(cfg).sample_subjects();
  for (int coord = 0; coord < SynthWorld::kAppearanceDim; ++coord) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    const double n = static_cast<double>(profiles.size());
    for (const SubjectProfile& p : profiles) {
      const double a = p.appearance[static_cast<std::size_t>(coord)];
      const double b = p.bias.yaw;
      sa += a;
      sb += b;
      saa += a * a;
      sbb += b * b;
      sab += a * b;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double corr =
        cov / std::sqrt((saa / n - sa * sa / (n * n)) * (sbb / n - sb * sb / (n * n)));
    CHECK(std::abs(corr) < 0.09);  // ~3.5 / sqrt(1500)
  }
}

TEST_CASE("perfect linear params recover the latent axis in the noiseless world") {
  const WorldConfig cfg = noiseless_config(37);
  const SynthWorld world(cfg);
  const auto [data, profiles] = world.generate_dataset();
  const Params oracle = world.perfect_linear_params();
  for (const Sample& s : data.samples()) {
    const GazeAngle pred = forward(oracle, s.features);
    CHECK(std::abs(pred.yaw - s.latent_visual_axis->yaw) < 1e-9);
    CHECK(std::abs(pred.pitch - s.latent_visual_axis->pitch) < 1e-9);
  }
}

TEST_CASE("perfect estimator needs enough feature coordinates") {
  WorldConfig cfg = noiseless_config(41);
  cfg.feature_dim = 8;
  CHECK_THROWS_AS(SynthWorld(cfg).perfect_linear_params(), Error);
}

TEST_CASE("config validation") {
  WorldConfig cfg;
  cfg.feature_dim = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = WorldConfig{};
  cfg.bias_sd = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = WorldConfig{};
  cfg.yaw_min = cfg.yaw_max;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("gaze points outside the range are rejected") {
  const WorldConfig cfg = noiseless_config(43);
  const SynthWorld world(cfg);
  const auto profiles = world.sample_subjects();
  auto rng = make_rng(1);
  CHECK_THROWS_AS(world.generate_sample(profiles[0], {cfg.yaw_max + 1.0, 0.0}, rng), Error);
}

}  // TEST_SUITE
