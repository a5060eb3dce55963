#include "gazedec/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gazedec/errors.hpp"
#include "gazedec/format.hpp"

namespace gazedec {

std::string to_string(const SubjectKey& k) {
  return k.flipped ? k.id + "(flipped)" : k.id;
}

Dataset::Dataset(int feature_dim) : feature_dim_(feature_dim) {
  if (feature_dim <= 0) throw DimensionError("feature_dim must be positive");
}

void Dataset::add(Sample s) {
  if (static_cast<int>(s.features.size()) != feature_dim_) {
    throw DimensionError("sample has " + std::to_string(s.features.size()) +
                         " features, dataset feature_dim is " + std::to_string(feature_dim_));
  }
  for (double f : s.features) {
    if (!std::isfinite(f)) throw Error("non-finite feature value");
  }
  if (!gaze_in_valid_range(s.gaze)) throw Error("gaze label outside the valid range");
  if (s.latent_visual_axis && !gaze_in_valid_range(*s.latent_visual_axis)) {
    throw Error("latent visual axis outside the valid range");
  }
  if (s.subject.id.empty() || s.subject.id.find(',') != std::string::npos ||
      s.subject.id.find('\n') != std::string::npos) {
    throw Error("subject id must be nonempty and free of ',' and newlines");
  }
  auto [it, inserted] = by_subject_.try_emplace(s.subject);
  if (inserted) subject_order_.push_back(s.subject);
  it->second.push_back(static_cast<int>(samples_.size()));
  samples_.push_back(std::move(s));
}

const std::vector<int>& Dataset::indices_of(const SubjectKey& k) const {
  auto it = by_subject_.find(k);
  if (it == by_subject_.end()) throw Error("unknown subject: " + to_string(k));
  return it->second;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_number(const std::string& tok, std::size_t line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') parse_fail(line_no, "not a number: '" + tok + "'");
  if (!std::isfinite(v)) parse_fail(line_no, "non-finite value: '" + tok + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream in(line);
  while (std::getline(in, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header");
  ++line_no;
  if (line.rfind("feature_dim=", 0) != 0) parse_fail(line_no, "missing header 'feature_dim=<d>'");
  int dim = 0;
  try {
    dim = std::stoi(line.substr(12));
  } catch (const std::exception&) {
    parse_fail(line_no, "bad feature_dim value");
  }
  if (dim <= 0) parse_fail(line_no, "feature_dim must be positive");

  Dataset d(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tok = split_csv(line);
    const std::size_t expected = 6 + static_cast<std::size_t>(dim);
    if (tok.size() != expected) {
      parse_fail(line_no, "expected " + std::to_string(expected) + " fields, got " +
                              std::to_string(tok.size()));
    }
    Sample s;
    s.subject.id = tok[0];
    if (tok[1] == "0") {
      s.subject.flipped = false;
    } else if (tok[1] == "1") {
      s.subject.flipped = true;
    } else {
      parse_fail(line_no, "flipped flag must be 0 or 1");
    }
    s.gaze.yaw = parse_number(tok[2], line_no);
    s.gaze.pitch = parse_number(tok[3], line_no);
    if (tok[4] == "_" || tok[5] == "_") {
      if (tok[4] != "_" || tok[5] != "_") parse_fail(line_no, "latent fields must both be '_' or both numeric");
    } else {
      s.latent_visual_axis = GazeAngle{parse_number(tok[4], line_no), parse_number(tok[5], line_no)};
    }
    s.features.reserve(dim);
    for (int j = 0; j < dim; ++j) s.features.push_back(parse_number(tok[6 + j], line_no));
    try {
      d.add(std::move(s));
    } catch (const Error& e) {
      parse_fail(line_no, e.what());
    }
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path.string());
  out << "feature_dim=" << d.feature_dim() << '\n';
  for (const Sample& s : d.samples()) {
    out << s.subject.id << ',' << (s.subject.flipped ? '1' : '0') << ',' << g17(s.gaze.yaw)
        << ',' << g17(s.gaze.pitch) << ',';
    if (s.latent_visual_axis) {
      out << g17(s.latent_visual_axis->yaw) << ',' << g17(s.latent_visual_axis->pitch);
    } else {
      out << "_,_";
    }
    for (double f : s.features) out << ',' << g17(f);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SubjectSplit> leave_one_subject_out_splits(const Dataset& d, bool pair_flipped) {
  const auto& keys = d.subjects();
  if (keys.size() < 2) throw InsufficientDataError("leave-one-subject-out needs at least 2 subjects");

  std::vector<SubjectSplit> folds;
  folds.reserve(keys.size());
  for (const SubjectKey& held : keys) {
    const SubjectKey sibling{held.id, !held.flipped};
    Dataset train(d.feature_dim());
    Dataset test(d.feature_dim());
    for (const Sample& s : d.samples()) {
      if (s.subject == held) {
        test.add(s);
      } else if (pair_flipped && s.subject == sibling) {
        continue;  // paper protocol: neither flip variant of the test id trains
      } else {
        train.add(s);
      }
    }
    folds.push_back(SubjectSplit{std::move(train), std::move(test), held});
  }
  return folds;
}

}  // namespace gazedec
