#ifndef KGPATH_PBF_HPP
#define KGPATH_PBF_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "kgpath/knowledge_graph.hpp"
#include "kgpath/rules.hpp"

namespace kgpath {

/// Path-multiplicity features of one query (h, r, ?). Component i of the
/// vector of candidate e is mul(h, e, p_i) / max_e' mul(h, e', p_i), or 0 when
/// p_i never fires from h. Only entities with a nonzero vector are stored.
class QueryFeatures {
 public:
  QueryFeatures() = default;
  QueryFeatures(Eigen::Index path_count, std::vector<EntityId> entities, Eigen::MatrixXd features);

  Eigen::Index path_count() const { return path_count_; }
  /// Entities with a nonzero feature vector, ascending.
  std::span<const EntityId> entities() const { return entities_; }
  /// paths x entities().size()
  const Eigen::MatrixXd& matrix() const { return features_; }

  bool nonzero(EntityId e) const { return column(e) >= 0; }
  Eigen::VectorXd feature(EntityId e) const;
  /// Column of `e` in matrix(), or -1.
  Eigen::Index column(EntityId e) const;

 private:
  Eigen::Index path_count_ = 0;
  std::vector<EntityId> entities_;
  Eigen::MatrixXd features_;
};

QueryFeatures build_query_features(const KnowledgeGraph& kg, EntityId head, std::span<const RelationPath> paths);

/// Feature vectors of `candidates` as columns (paths x candidates).
Eigen::MatrixXd build_features(const KnowledgeGraph& kg, EntityId head, std::span<const EntityId> candidates,
                               std::span<const RelationPath> paths);

/// Uniform sample without replacement of up to `count` entities with a
/// nonzero feature vector, never including `positive`.
std::vector<EntityId> sample_negatives(const QueryFeatures& features, EntityId positive, std::size_t count,
                                       std::mt19937_64& rng);
std::vector<EntityId> sample_negatives(const QueryFeatures& features, EntityId positive, std::size_t count,
                                       std::uint64_t seed);

/// One softmax-regression example: column 0 is the positive candidate, the
/// remaining columns its negatives.
struct RegressionExample {
  Eigen::MatrixXd candidates;
};

/// Mean over `examples` of -log softmax(theta^T v)[0], plus (l2 / 2) |theta|^2.
double softmax_regression_loss(const Eigen::VectorXd& theta, std::span<const RegressionExample> examples, double l2,
                               Eigen::VectorXd* gradient = nullptr);

struct PbfTrainConfig {
  double learning_rate = 0.1;
  double l2 = 0.01;
  std::size_t negatives = 50;
  std::size_t batch_size = 100;
  std::size_t batches = 500;
  std::uint64_t seed = 42;
};

struct RelationModel {
  RelationId relation;
  std::vector<RelationPath> paths;
  Eigen::VectorXd theta;
  bool feature_starved = false;
  std::size_t positives_used = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;

  /// theta^T v for every column of `features`.
  Eigen::VectorXd score(const Eigen::MatrixXd& features) const;
};

struct RelationTraining {
  RelationModel model;
  std::vector<double> batch_losses;
};

/// Minibatch SGD on the softmax-regression loss of `relation` over its train
/// triples. Positives whose own feature vector is zero are skipped; negatives
/// are drawn from nonzero-feature entities. With no usable positive the model
/// keeps theta = 0 and is flagged feature-starved.
RelationTraining train_relation_model(const KnowledgeGraph& kg, RelationId relation, std::vector<RelationPath> paths,
                                      const PbfTrainConfig& config);

/// lambda * softmax(embedding) + (1 - lambda) * p_sr over one query's
/// candidates, where p_sr is the softmax of `regression` restricted to the
/// candidates with `has_features` set and 0 elsewhere.
Eigen::VectorXd combine_scores(const Eigen::VectorXd& embedding, const Eigen::VectorXd& regression,
                               const std::vector<bool>& has_features, double lambda);

/// log of combine_scores, computed in log space so that lambda = 1 and
/// lambda = 0 reproduce the single-model orderings exactly. With a nonempty
/// `normalize_over` mask both softmaxes are normalized over the marked
/// entries only; every entry still gets a score under those normalizers.
Eigen::VectorXd combine_log_scores(const Eigen::VectorXd& embedding, const Eigen::VectorXd& regression,
                                   const std::vector<bool>& has_features, double lambda,
                                   std::span<const std::uint8_t> normalize_over = {});

/// The combination-weight grid {0, 0.1, ..., 1}.
std::vector<double> lambda_grid();
/// Throws std::invalid_argument unless `lambda` is on lambda_grid().
void check_lambda(double lambda);

/// Binary relation-model file (little-endian):
///   magic "KGPRELM1", relation name (u32 length + bytes), u32 flags
///   (bit 0 = feature-starved), f64 learning rate, f64 l2, u64 positives used,
///   u32 path count, each path as u32 length + relation names, then f64 theta
///   per path.
void save_relation_model(const KnowledgeGraph& kg, const RelationModel& model, const std::filesystem::path& path);
RelationModel load_relation_model(const KnowledgeGraph& kg, const std::filesystem::path& path);

/// One file per relation label (`relation_<label index>.bin`) plus summary.tsv.
void save_relation_models(const KnowledgeGraph& kg, const std::vector<RelationModel>& models,
                          const std::filesystem::path& dir);
std::vector<RelationModel> load_relation_models(const KnowledgeGraph& kg, const std::filesystem::path& dir);

}  // namespace kgpath

#endif  // KGPATH_PBF_HPP
