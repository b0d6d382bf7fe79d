#ifndef KGPATH_EMBEDDING_TRAINING_HPP
#define KGPATH_EMBEDDING_TRAINING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kgpath/akglg_model.hpp"
#include "kgpath/knowledge_graph.hpp"

namespace kgpath {

struct TrainConfig {
  Eigen::Index dim = 100;
  double regularization = 0.01;  // nuclear 3-norm weight
  double learning_rate = 0.1;    // Adagrad initial step
  int epochs = 25;
  Eigen::Index batch_size = 1000;
  std::uint64_t seed = 42;
  double init_scale = 1e-3;
  int workers = 1;

  /// Throws std::invalid_argument on non-positive fields.
  void validate() const;
};

/// Unconstrained training parameters, one column per entity / relation label.
///
/// Row layout by group:
///   sign   : n rows, the composed real vector w o g (DistMult form)
///   circle : 2n rows, real parts then imaginary parts of w o g (ComplEx form)
///   line   : 2n rows, attention w then point g
struct EmbeddingParameters {
  GroupKind kind = GroupKind::circle;
  Eigen::Index dim = 0;
  Eigen::MatrixXd entities;
  Eigen::MatrixXd relations;
};

Eigen::Index parameter_rows(GroupKind kind, Eigen::Index dim);

EmbeddingParameters initial_parameters(GroupKind kind, Eigen::Index dim, Eigen::Index entities, Eigen::Index labels,
                                       double init_scale, std::uint64_t seed);
EmbeddingParameters to_parameters(const AkglgModel& model);
AkglgModel to_model(const EmbeddingParameters& params);

/// Mean full-softmax cross entropy of the tail of every triple in `batch`
/// against all entities, plus `regularization` times the mean nuclear 3-norm
/// of the (h, r, t) parameters of each example. Writes the gradient into
/// `gradient` when non-null. Work is split over `workers` threads with a
/// fixed reduction order, so the result does not depend on `workers`.
double batch_loss(const EmbeddingParameters& params, std::span<const Triple> batch, double regularization,
                  EmbeddingParameters* gradient, int workers = 1);

struct TrainingResult {
  AkglgModel model;
  EmbeddingParameters parameters;
  std::vector<double> epoch_losses;
};

/// Adagrad over shuffled minibatches of the augmented train split. Only
/// tail-prediction queries are asked; head prediction goes through r^-1.
/// Throws NumericError when the loss becomes non-finite.
TrainingResult train_embeddings(const KnowledgeGraph& kg, GroupKind kind, const TrainConfig& config,
                                const std::function<void(int epoch, double loss)>& on_epoch = {});

/// Scores every entity as the tail of (h, r, ?) with one matrix-vector product.
class EmbeddingQueryScorer {
 public:
  explicit EmbeddingQueryScorer(const AkglgModel& model);
  explicit EmbeddingQueryScorer(EmbeddingParameters params);

  Eigen::VectorXd score_tails(EntityId head, RelationId relation) const;
  Eigen::Index entity_count() const { return features_.cols(); }

 private:
  EmbeddingParameters params_;
  Eigen::MatrixXd features_;
};

}  // namespace kgpath

#endif  // KGPATH_EMBEDDING_TRAINING_HPP
