#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazedec/geometry.hpp"

namespace gazedec {

/// Subject identity. A horizontally flipped copy of a subject's data counts
/// as a distinct subject everywhere (grouping, splits, bias tables).
struct SubjectKey {
  std::string id;
  bool flipped = false;

  friend auto operator<=>(const SubjectKey&, const SubjectKey&) = default;
};

std::string to_string(const SubjectKey& k);

struct Sample {
  SubjectKey subject;
  std::vector<double> features;
  GazeAngle gaze;
  std::optional<GazeAngle> latent_visual_axis;  // present only for synthetic data
};

/// Ordered sample container with a fixed feature dimension. Built once via
/// add(); treated as immutable afterwards (reads are thread-safe).
class Dataset {
 public:
  explicit Dataset(int feature_dim);

  void add(Sample s);

  int feature_dim() const { return feature_dim_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  /// Distinct subjects in order of first appearance.
  const std::vector<SubjectKey>& subjects() const { return subject_order_; }
  bool has_subject(const SubjectKey& k) const { return by_subject_.count(k) != 0; }
  /// Sample indices belonging to one subject, in dataset order.
  const std::vector<int>& indices_of(const SubjectKey& k) const;

 private:
  int feature_dim_;
  std::vector<Sample> samples_;
  std::vector<SubjectKey> subject_order_;
  std::map<SubjectKey, std::vector<int>> by_subject_;
};

/// File format, one sample per line after the header:
///   feature_dim=<d>
///   subject_id,flipped(0|1),yaw_deg,pitch_deg,latent_yaw|_,latent_pitch|_,f1,...,fd
/// Numbers are decimal text with enough digits for an exact round trip.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

struct SubjectSplit {
  Dataset train;
  Dataset test;
  SubjectKey held_out;
};

/// One fold per distinct SubjectKey; the fold's test set is exactly that
/// subject's samples. With pair_flipped (the default) the sibling flip
/// variant of the held-out id is excluded from that fold's training set too.
std::vector<SubjectSplit> leave_one_subject_out_splits(const Dataset& d,
                                                       bool pair_flipped = true);

}  // namespace gazedec
