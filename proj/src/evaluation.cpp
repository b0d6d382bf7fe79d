#include "kgpath/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <stdexcept>

#include "kgpath/grounding.hpp"
#include "kgpath/parallel.hpp"

namespace kgpath {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool marked(std::span<const std::uint8_t> mask, Eigen::Index i) {
  return mask.empty() || mask[static_cast<std::size_t>(i)] != 0;
}

}  // namespace

AnswerIndex::AnswerIndex(const KnowledgeGraph& kg) : entity_count_(kg.entity_count()) {
  auto add = [&](const Triple& t) { answers_[key(t.head, t.relation)].push_back(t.tail); };
  for (Split s : {Split::train, Split::valid, Split::test}) {
    for (const Triple& t : kg.split(s)) {
      add(t);
      if (!kg.augmented()) add(inverted(t));
    }
  }
  for (auto& [k, tails] : answers_) {
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
  }
}

std::span<const EntityId> AnswerIndex::answers(EntityId head, RelationId relation) const {
  auto it = answers_.find(key(head, relation));
  if (it == answers_.end()) return {};
  return it->second;
}

std::span<const EntityId> AnswerIndex::answers(const Query& query) const {
  const Query q = query.as_tail_query();
  return answers(q.entity, q.relation);
}

std::vector<std::uint8_t> filtered_candidates(const AnswerIndex& index, const Query& query, EntityId target) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(index.entity_count()), 1);
  for (EntityId e : index.answers(query)) mask[static_cast<std::size_t>(e)] = 0;
  mask.at(static_cast<std::size_t>(target)) = 1;
  return mask;
}

std::optional<std::size_t> rank_of(const Eigen::VectorXd& scores, std::span<const std::uint8_t> candidates,
                                   EntityId target) {
  if (!candidates.empty() && static_cast<Eigen::Index>(candidates.size()) != scores.size()) {
    throw std::invalid_argument("rank_of: candidate mask and scores differ in size");
  }
  if (target < 0 || target >= scores.size()) throw std::out_of_range("rank_of: target outside the score vector");
  const double s = scores(target);
  if (std::isnan(s)) throw NumericError("rank_of: target score is NaN");
  if (s == kNegInf) return std::nullopt;
  std::size_t rank = 1;
  for (Eigen::Index e = 0; e < scores.size(); ++e) {
    if (e == target || !marked(candidates, e)) continue;
    if (scores(e) > s || (scores(e) == s && e < target)) ++rank;
  }
  return rank;
}

Eigen::VectorXd EmbeddingScorer::score(EntityId head, RelationId relation, std::span<const std::uint8_t>) const {
  return embedding_.score_tails(head, relation);
}

ReeScorer::ReeScorer(const KnowledgeGraph& kg, const std::vector<std::vector<Rule>>& ranked_rules,
                     int max_body_length)
    : kg_(kg), rules_(ranked_rules.size()) {
  for (std::size_t i = 0; i < ranked_rules.size(); ++i) {
    for (const Rule& rule : ranked_rules[i]) {
      if (max_body_length > 0 && static_cast<int>(rule.body.size()) > max_body_length) continue;
      rules_[i].push_back(rule);
    }
  }
}

Eigen::VectorXd ReeScorer::score(EntityId head, RelationId relation, std::span<const std::uint8_t>) const {
  Eigen::VectorXd scores = Eigen::VectorXd::Constant(kg_.entity_count(), kNegInf);
  const auto label = static_cast<std::size_t>(relation.index());
  if (label >= rules_.size()) return scores;
  const auto ranking = ree_rank_entities(kg_, rules_[label], head);
  for (std::size_t i = 0; i < ranking.size(); ++i) scores(ranking[i]) = -static_cast<double>(i);
  return scores;
}

PbfScorer::PbfScorer(const KnowledgeGraph& kg, const EmbeddingQueryScorer& embedding,
                     std::span<const RelationModel> models, double lambda)
    : kg_(kg), embedding_(embedding), by_label_(static_cast<std::size_t>(kg.label_capacity()), nullptr),
      lambda_(lambda) {
  check_lambda(lambda);
  for (const RelationModel& m : models) by_label_.at(static_cast<std::size_t>(m.relation.index())) = &m;
}

Eigen::VectorXd PbfScorer::score(EntityId head, RelationId relation, std::span<const std::uint8_t> candidates) const {
  const Eigen::VectorXd emb = embedding_.score_tails(head, relation);
  const Eigen::Index n = emb.size();
  Eigen::VectorXd sr = Eigen::VectorXd::Zero(n);
  std::vector<bool> has_features(static_cast<std::size_t>(n), false);
  const auto label = static_cast<std::size_t>(relation.index());
  if (label < by_label_.size() && by_label_[label] != nullptr && !by_label_[label]->paths.empty()) {
    const RelationModel& model = *by_label_[label];
    const QueryFeatures features = build_query_features(kg_, head, model.paths);
    const Eigen::VectorXd s = model.score(features.matrix());
    const auto entities = features.entities();
    for (std::size_t i = 0; i < entities.size(); ++i) {
      sr(entities[i]) = s(static_cast<Eigen::Index>(i));
      has_features[static_cast<std::size_t>(entities[i])] = true;
    }
  }
  return combine_log_scores(emb, sr, has_features, lambda_, candidates);
}

void summarize(RankingReport& report) {
  report.n_queries = report.records.size();
  double rr = 0.0;
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  for (const QueryRecord& r : report.records) {
    if (!r.filtered_rank) continue;
    const std::size_t k = *r.filtered_rank;
    rr += 1.0 / static_cast<double>(k);
    h1 += k <= 1;
    h3 += k <= 3;
    h10 += k <= 10;
  }
  const double n = report.n_queries == 0 ? 1.0 : static_cast<double>(report.n_queries);
  report.mrr = rr / n;
  report.hits1 = static_cast<double>(h1) / n;
  report.hits3 = static_cast<double>(h3) / n;
  report.hits10 = static_cast<double>(h10) / n;
}

RankingReport evaluate(const Scorer& scorer, std::span<const Triple> triples, const AnswerIndex& answers,
                       int workers) {
  RankingReport report;
  report.records.resize(2 * triples.size());
  parallel_for_dynamic(report.records.size(), std::max(1, workers), [&](std::size_t, std::size_t i) {
    const std::size_t t = i / 2;
    const Triple& triple = triples[t];
    if (triple.relation.is_inverse()) throw std::invalid_argument("evaluate: triples must use base relations");
    QueryRecord& rec = report.records[i];
    rec.triple_index = t;
    rec.triple = triple;
    rec.direction = i % 2 == 0 ? Direction::tail : Direction::head;
    const Query query = rec.direction == Direction::tail ? Query{Direction::tail, triple.head, triple.relation}
                                                         : Query{Direction::head, triple.tail, triple.relation};
    const EntityId target = rec.direction == Direction::tail ? triple.tail : triple.head;
    const Query q = query.as_tail_query();
    const auto mask = filtered_candidates(answers, q, target);
    const Eigen::VectorXd scores = scorer.score(q.entity, q.relation, mask);
    if (scores.size() != answers.entity_count()) throw std::logic_error("scorer returned the wrong number of scores");
    rec.filtered_rank = rank_of(scores, mask, target);
    rec.raw_rank = rank_of(scores, {}, target);
  });
  summarize(report);
  return report;
}

std::vector<Triple> original_triples(const KnowledgeGraph& kg, Split split) {
  std::vector<Triple> out;
  for (const Triple& t : kg.split(split)) {
    if (!t.relation.is_inverse()) out.push_back(t);
  }
  return out;
}

std::string metrics_json(const RankingReport& report, const MetricsDocument& doc) {
  nlohmann::ordered_json j;
  j["dataset"] = doc.dataset;
  j["scorer"] = doc.scorer;
  j["mrr"] = report.mrr;
  j["hits1"] = report.hits1;
  j["hits3"] = report.hits3;
  j["hits10"] = report.hits10;
  j["n_queries"] = report.n_queries;
  j["config"] = doc.config_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(doc.config_json);
  j["seed"] = doc.seed;
  return j.dump(2) + "\n";
}

void write_metrics_json(const std::filesystem::path& path, const RankingReport& report, const MetricsDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << metrics_json(report, doc);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_query_ranks_tsv(const std::filesystem::path& path, const KnowledgeGraph& kg, const RankingReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto rank = [](const std::optional<std::size_t>& r) { return r ? std::to_string(*r) : std::string("unranked"); };
  out << "head\trelation\ttail\tdirection\tfiltered_rank\traw_rank\n";
  for (const QueryRecord& r : report.records) {
    out << kg.entities().name(r.triple.head) << '\t' << kg.relation_name(r.triple.relation) << '\t'
        << kg.entities().name(r.triple.tail) << '\t' << (r.direction == Direction::tail ? "tail" : "head") << '\t'
        << rank(r.filtered_rank) << '\t' << rank(r.raw_rank) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<GridPoint> expand_grid(std::span<const double> lambdas, std::span<const int> path_lengths,
                                   std::span<const double> learning_rates, std::span<const double> l2s) {
  std::vector<GridPoint> grid;
  for (double lambda : lambdas) {
    for (int len : path_lengths) {
      for (double lr : learning_rates) {
        for (double l2 : l2s) grid.push_back({lambda, len, lr, l2});
      }
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SelectionResult select_hyperparameters(std::span<const GridPoint> grid,
                                       const std::function<double(const GridPoint&)>& validation_mrr) {
  if (grid.empty()) throw std::invalid_argument("select_hyperparameters: empty grid");
  SelectionResult result;
  bool first = true;
  for (const GridPoint& point : grid) {
    const double mrr = validation_mrr(point);
    if (std::isnan(mrr)) throw NumericError("validation MRR is NaN");
    result.sweep.emplace_back(point, mrr);
    if (first || mrr > result.best_mrr || (mrr == result.best_mrr && point < result.best)) {
      result.best = point;
      result.best_mrr = mrr;
      first = false;
    }
  }
  return result;
}

}  // namespace kgpath
