#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gazedec/dataset.hpp"
#include "gazedec/estimator.hpp"

namespace gazedec {

enum class Optimizer { plain_sgd, adaptive_moment };

/// Defaults follow the published schedule: batches of 64, initial rate 1e-3
/// divided by 10 after every ten epochs, 35 epochs, adaptive moments.
struct TrainConfig {
  double lambda = 1e-3;
  int epochs = 35;
  int batch_size = 64;
  double initial_lr = 1e-3;
  int lr_decay_every = 10;
  std::uint64_t seed = 1;
  bool decomposition = true;  // false = train with all per-subject biases frozen at zero
  Optimizer optimizer = Optimizer::adaptive_moment;

  void validate() const;
};

/// Mutable training state: estimator parameters plus one bias parameter pair
/// per training subject. Bias parameters are stored in the same
/// kOutputScaleDeg unit as the output stage; beta_deg() converts.
struct DecompositionState {
  Params params;
  bool decomposition = true;
  double lambda = 0.0;
  std::vector<SubjectKey> subjects;   // fixed order, one entry per training subject
  std::vector<double> beta_values;    // 2 per subject (yaw, pitch), scaled units

  GazeAngle beta_deg(int subject_index) const;
  GazeAngle beta_sum_deg() const;
  /// Index into `subjects`, or -1 when the key owns no bias parameter.
  int beta_index(const SubjectKey& k) const;
};

DecompositionState make_state(const Dataset& train, const Architecture& arch,
                              const TrainConfig& cfg);

/// Sum of squared residuals ||g - t(X) - beta_i||^2 over the batch plus
/// lambda * (|sum_i beta_yaw| + |sum_i beta_pitch|), the regularizer taken
/// over all subjects once. Batch entries index into `data`.
double decomposition_loss(const DecompositionState& state, const Dataset& data,
                          std::span<const int> batch);

struct Gradients {
  std::vector<double> params;  // layout of Params::values
  std::vector<double> betas;   // layout of DecompositionState::beta_values
};

/// Analytic gradients of decomposition_loss. The |.| subgradient is 0 at the
/// kink. reg_scale multiplies only the regularizer term; the training loop
/// passes 1/batches_per_epoch so each epoch applies the regularizer once.
Gradients loss_gradients(const DecompositionState& state, const Dataset& data,
                         std::span<const int> batch, double reg_scale = 1.0);

struct TrainedDecomposition {
  Architecture arch;
  Params params;
  std::map<SubjectKey, GazeAngle> train_biases;  // degrees; empty when decomposition off
  std::vector<double> history;                   // full objective after each epoch
};

/// Seeded mini-batch training. Throws TrainingError on a non-finite loss.
/// After the last epoch the common component of the biases is moved into the
/// output offset (an exact descent step along the objective's flat shift
/// direction), which is what drives |sum beta| to zero.
TrainedDecomposition train(const Dataset& train_data, const Architecture& arch,
                           const TrainConfig& cfg);

struct BetaConsistency {
  struct PerSubject {
    GazeAngle mean;
    GazeAngle sd;
    int folds = 0;
  };
  std::map<SubjectKey, PerSubject> per_subject;
  GazeAngle intra_subject_variance;  // deg^2 per axis, mean over subjects
  GazeAngle inter_subject_variance;  // deg^2 per axis, variance of the means
};

/// Leave-one-subject-out repetition of training; reports the spread of each
/// subject's learned bias across the folds that contain it. Fold tables are
/// first aligned on their common shift — each fold re-references its biases
/// to its own subject set, and that reference is the objective's
/// non-identifiable mode — so the spread measures genuine estimation scatter.
BetaConsistency train_biases_consistency(const Dataset& d, const Architecture& arch,
                                         const TrainConfig& cfg, bool pair_flipped = true);

}  // namespace gazedec
