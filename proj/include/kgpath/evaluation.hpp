#ifndef KGPATH_EVALUATION_HPP
#define KGPATH_EVALUATION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgpath/embedding_training.hpp"
#include "kgpath/knowledge_graph.hpp"
#include "kgpath/pbf.hpp"
#include "kgpath/rules.hpp"

namespace kgpath {

enum class Direction { tail = 0, head = 1 };

/// (entity, relation, ?) for tail queries, (?, relation, entity) for head
/// queries.
struct Query {
  Direction direction = Direction::tail;
  EntityId entity = 0;
  RelationId relation;

  /// The equivalent tail query: (?, r, t) becomes (t, r^-1, ?).
  Query as_tail_query() const {
    return direction == Direction::tail ? *this : Query{Direction::tail, entity, relation.inverse()};
  }
};

/// Known answers of every tail query over all splits. Head queries are
/// answered through the inverse label, which the index always covers.
class AnswerIndex {
 public:
  explicit AnswerIndex(const KnowledgeGraph& kg);

  /// Sorted known tails of (head, relation, ?).
  std::span<const EntityId> answers(EntityId head, RelationId relation) const;
  std::span<const EntityId> answers(const Query& query) const;
  std::int32_t entity_count() const { return entity_count_; }

 private:
  static std::uint64_t key(EntityId head, RelationId relation) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(head)) << 32) |
           static_cast<std::uint32_t>(relation.index());
  }

  std::int32_t entity_count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> answers_;
};

/// Candidate mask of `query`: every entity except known answers, with
/// `target` always kept.
std::vector<std::uint8_t> filtered_candidates(const AnswerIndex& index, const Query& query, EntityId target);

/// 1 + #{e: s(e) > s(target)} + #{e != target: s(e) = s(target), e < target}
/// over the entities marked in `candidates` (all entities when empty).
/// A target scored -inf is unranked.
std::optional<std::size_t> rank_of(const Eigen::VectorXd& scores, std::span<const std::uint8_t> candidates,
                                   EntityId target);

/// Scores every entity as the tail of a query. -inf marks an entity the
/// scorer does not rank.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string name() const = 0;
  /// `candidates` is the filtered candidate mask of the query; scorers that
  /// normalize per query do so over it.
  virtual Eigen::VectorXd score(EntityId head, RelationId relation, std::span<const std::uint8_t> candidates) const = 0;
};

class EmbeddingScorer final : public Scorer {
 public:
  explicit EmbeddingScorer(const EmbeddingQueryScorer& embedding) : embedding_(embedding) {}

  std::string name() const override { return "embedding"; }
  Eigen::VectorXd score(EntityId head, RelationId relation, std::span<const std::uint8_t> candidates) const override;

 private:
  const EmbeddingQueryScorer& embedding_;
};

/// Rule-concatenation ranking turned into scores: the entity at position i
/// scores -i, entities no rule reaches score -inf.
class ReeScorer final : public Scorer {
 public:
  /// `ranked_rules` is indexed by head label. Rules with a body longer than
  /// `max_body_length` are ignored (0 keeps all).
  ReeScorer(const KnowledgeGraph& kg, const std::vector<std::vector<Rule>>& ranked_rules, int max_body_length = 0);

  std::string name() const override { return "ree"; }
  Eigen::VectorXd score(EntityId head, RelationId relation, std::span<const std::uint8_t> candidates) const override;

 private:
  const KnowledgeGraph& kg_;
  std::vector<std::vector<Rule>> rules_;
};

/// log(lambda * p_emb + (1 - lambda) * p_sr) with both distributions
/// normalized over the filtered candidates.
class PbfScorer final : public Scorer {
 public:
  /// `models` may list any subset of the labels; a label without a model has
  /// no regression scores.
  PbfScorer(const KnowledgeGraph& kg, const EmbeddingQueryScorer& embedding, std::span<const RelationModel> models,
            double lambda);

  std::string name() const override { return "pbf"; }
  Eigen::VectorXd score(EntityId head, RelationId relation, std::span<const std::uint8_t> candidates) const override;

 private:
  const KnowledgeGraph& kg_;
  const EmbeddingQueryScorer& embedding_;
  std::vector<const RelationModel*> by_label_;
  double lambda_;
};

struct QueryRecord {
  std::size_t triple_index = 0;
  Triple triple;
  Direction direction = Direction::tail;
  std::optional<std::size_t> filtered_rank;
  std::optional<std::size_t> raw_rank;
};

struct RankingReport {
  std::vector<QueryRecord> records;  // ordered by (triple_index, direction)
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t n_queries = 0;
};

/// Aggregates over filtered ranks; unranked queries count as reciprocal
/// rank 0 and miss every HITS@n.
void summarize(RankingReport& report);

/// Two queries per triple (tail, then head through r^-1), ranked in the
/// filtered setting. `triples` must not carry inverse labels.
RankingReport evaluate(const Scorer& scorer, std::span<const Triple> triples, const AnswerIndex& answers,
                       int workers = 1);

/// Triples of `split` without the inverse copies added by augmentation.
std::vector<Triple> original_triples(const KnowledgeGraph& kg, Split split);

struct MetricsDocument {
  std::string dataset;
  std::string scorer;
  std::string config_json;  // serialized JSON object
  std::uint64_t seed = 0;
};

/// {dataset, scorer, mrr, hits1, hits3, hits10, n_queries, config, seed}
std::string metrics_json(const RankingReport& report, const MetricsDocument& doc);
void write_metrics_json(const std::filesystem::path& path, const RankingReport& report, const MetricsDocument& doc);

/// One line per query: head, relation, tail, direction, filtered rank and raw
/// rank ("unranked" when absent).
void write_query_ranks_tsv(const std::filesystem::path& path, const KnowledgeGraph& kg, const RankingReport& report);

struct GridPoint {
  double lambda = 1.0;
  int max_path_length = 3;
  double learning_rate = 0.1;
  double l2 = 0.01;

  auto operator<=>(const GridPoint&) const = default;
};

/// Cartesian product of the four grids, in ascending tie-break order.
std::vector<GridPoint> expand_grid(std::span<const double> lambdas, std::span<const int> path_lengths,
                                   std::span<const double> learning_rates, std::span<const double> l2s);

struct SelectionResult {
  GridPoint best;
  double best_mrr = 0.0;
  std::vector<std::pair<GridPoint, double>> sweep;
};

/// Evaluates `validation_mrr` on every grid point and keeps the maximum;
/// equal MRRs go to the smaller lambda, then the shorter path limit, then
/// the smaller learning rate, then the smaller l2.
SelectionResult select_hyperparameters(std::span<const GridPoint> grid,
                                       const std::function<double(const GridPoint&)>& validation_mrr);

}  // namespace kgpath

#endif  // KGPATH_EVALUATION_HPP
