#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "gazedec/dataset.hpp"
#include "gazedec/errors.hpp"
#include "gazedec/rng.hpp"

using namespace gazedec;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "gazedec_tests";
  fs::create_directories(dir);
  return dir / name;
}

Dataset make_random_dataset(int feature_dim, int subjects, int per_subject, std::uint64_t seed,
                            bool with_latent) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> f(-2.0, 2.0);
  std::uniform_real_distribution<double> a(-25.0, 25.0);
  Dataset d(feature_dim);
  for (int s = 0; s < subjects; ++s) {
    for (int i = 0; i < per_subject; ++i) {
      Sample smp;
      smp.subject = SubjectKey{"p" + std::to_string(s), (s % 2) == 1};
      smp.features.resize(feature_dim);
      for (double& v : smp.features) v = f(rng);
      smp.gaze = {a(rng), a(rng)};
      if (with_latent) smp.latent_visual_axis = GazeAngle{a(rng), a(rng)};
      d.add(std::move(smp));
    }
  }
  return d;
}

bool samples_equal(const Sample& a, const Sample& b) {
  if (!(a.subject == b.subject) || a.features != b.features || !(a.gaze == b.gaze)) return false;
  if (a.latent_visual_axis.has_value() != b.latent_visual_axis.has_value()) return false;
  if (a.latent_visual_axis && !(*a.latent_visual_axis == *b.latent_visual_axis)) return false;
  return true;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.feature_dim() != b.feature_dim() || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!samples_equal(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("load of a small hand-written file") {
  const auto path = temp_file("small.csv");
  {
    std::ofstream out(path);
    out << "feature_dim=3\n";
    out << "alice,0,1.5,-2,0.5,0.25,0.1,0.2,0.3\n";
    out << "bob,1,-4,3,_,_,1,2,3\n";
  }
  const Dataset d = load_dataset(path);
  CHECK(d.size() == 2);
  CHECK(d.feature_dim() == 3);
  CHECK(d[0].subject.id == "alice");
  CHECK_FALSE(d[0].subject.flipped);
  CHECK(d[0].latent_visual_axis.has_value());
  CHECK(d[1].subject.flipped);
  CHECK_FALSE(d[1].latent_visual_axis.has_value());
  CHECK(d.subjects().size() == 2);
}

TEST_CASE("row width mismatch names the line") {
  const auto path = temp_file("badwidth.csv");
  {
    std::ofstream out(path);
    out << "feature_dim=3\n";
    out << "a,0,1,2,_,_,0.1,0.2,0.3\n";
    out << "a,0,1,2,_,_,0.1,0.2\n";
  }
  try {
    load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("empty file reports a missing header") {
  const auto path = temp_file("empty.csv");
  { std::ofstream out(path); }
  try {
    load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("missing header") != std::string::npos);
  }
}

TEST_CASE("non-finite value is rejected with the line number") {
  const auto path = temp_file("nonfinite.csv");
  {
    std::ofstream out(path);
    out << "feature_dim=2\n";
    out << "a,0,1,2,_,_,nan,0.5\n";
  }
  try {
    load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("round trip is exact, with and without latent angles") {
  for (bool with_latent : {true, false}) {
    const Dataset d = make_random_dataset(5, 4, 7, with_latent ? 101 : 102, with_latent);
    const auto path = temp_file("roundtrip.csv");
    save_dataset(d, path);
    const Dataset back = load_dataset(path);
    CHECK(datasets_equal(d, back));
  }
}

TEST_CASE("round trip preserves flipped subject keys") {
  const Dataset d = make_random_dataset(3, 4, 2, 103, true);
  const auto path = temp_file("flipkeys.csv");
  save_dataset(d, path);
  const Dataset back = load_dataset(path);
  REQUIRE(back.subjects().size() == d.subjects().size());
  for (std::size_t i = 0; i < d.subjects().size(); ++i) CHECK(back.subjects()[i] == d.subjects()[i]);
}

TEST_CASE("flipped and non-flipped keys are distinct subjects") {
  Dataset d(2);
  Sample s;
  s.features = {0.0, 0.0};
  s.subject = {"x", false};
  d.add(s);
  s.subject = {"x", true};
  d.add(s);
  CHECK(d.subjects().size() == 2);
  CHECK(d.indices_of({"x", false}) == std::vector<int>{0});
  CHECK(d.indices_of({"x", true}) == std::vector<int>{1});
}

TEST_CASE("splits partition the dataset when no flip pairing applies") {
  const Dataset d = make_random_dataset(4, 5, 6, 104, false);
  const auto folds = leave_one_subject_out_splits(d, false);
  CHECK(folds.size() == d.subjects().size());
  for (const auto& fold : folds) {
    CHECK(fold.train.size() + fold.test.size() == d.size());
    for (const Sample& s : fold.test.samples()) CHECK(s.subject == fold.held_out);
    CHECK_FALSE(fold.train.has_subject(fold.held_out));
  }
}

TEST_CASE("two subjects with 10 samples each give 10/10 folds") {
  Dataset d(2);
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 10; ++i) {
      Sample smp;
      smp.subject = {s == 0 ? "a" : "b", false};
      smp.features = {0.1 * i, 0.2 * s};
      smp.gaze = {1.0 * i, -1.0 * s};
      d.add(smp);
    }
  }
  const auto folds = leave_one_subject_out_splits(d);
  REQUIRE(folds.size() == 2);
  for (const auto& fold : folds) {
    CHECK(fold.train.size() == 10);
    CHECK(fold.test.size() == 10);
  }
}

TEST_CASE("pair_flipped removes both flip variants from training") {
  Dataset d(2);
  for (const char* id : {"p06", "p07", "p08"}) {
    for (bool flipped : {false, true}) {
      for (int i = 0; i < 3; ++i) {
        Sample smp;
        smp.subject = {id, flipped};
        smp.features = {0.5, -0.5};
        smp.gaze = {double(i), 0.0};
        d.add(smp);
      }
    }
  }
  const auto folds = leave_one_subject_out_splits(d, true);
  CHECK(folds.size() == 6);
  for (const auto& fold : folds) {
    if (fold.held_out == SubjectKey{"p06", false}) {
      CHECK_FALSE(fold.train.has_subject({"p06", false}));
      CHECK_FALSE(fold.train.has_subject({"p06", true}));
      CHECK(fold.train.size() == 12);
      CHECK(fold.test.size() == 3);
    }
  }
  // without pairing the sibling stays in training
  const auto unpaired = leave_one_subject_out_splits(d, false);
  for (const auto& fold : unpaired) {
    if (fold.held_out == SubjectKey{"p06", false}) {
      CHECK(fold.train.has_subject({"p06", true}));
      CHECK(fold.train.size() == 15);
    }
  }
}

TEST_CASE("fewer than two subjects cannot be split") {
  const Dataset d = make_random_dataset(2, 1, 4, 105, false);
  CHECK_THROWS_AS(leave_one_subject_out_splits(d), InsufficientDataError);
}

TEST_CASE("dataset rejects inconsistent feature widths") {
  Dataset d(3);
  Sample s;
  s.subject = {"a", false};
  s.features = {1.0, 2.0};
  CHECK_THROWS_AS(d.add(s), DimensionError);
}

}  // TEST_SUITE
