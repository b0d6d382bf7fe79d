#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <map>
#include <mutex>
#include <random>

#include "fixtures.hpp"
#include "kgpath/evaluation.hpp"

namespace kgpath {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Scores from a callback, recording the queries it was asked.
class FunctionScorer final : public Scorer {
 public:
  using Fn = std::function<Eigen::VectorXd(EntityId, RelationId)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}
  std::string name() const override { return "function"; }
  Eigen::VectorXd score(EntityId head, RelationId relation, std::span<const std::uint8_t>) const override {
    return fn_(head, relation);
  }

 private:
  Fn fn_;
};

// e0 -r0-> e1, e0 -r0-> e2 (valid), e3 -r0-> e1 (test)
KnowledgeGraph small_graph() { return oracle::make_graph(5, 1, {{0, 0, 1}}, {{0, 0, 2}}, {{3, 0, 1}}); }

TEST(AnswerIndexTest, CoversAllSplitsAndInverses) {
  for (bool augmented : {false, true}) {
    const auto raw = small_graph();
    const auto kg = augmented ? augment_inverses(raw) : raw;
    const AnswerIndex index(kg);
    const RelationId r(0, false);
    EXPECT_EQ(std::vector<EntityId>(index.answers(0, r).begin(), index.answers(0, r).end()),
              (std::vector<EntityId>{1, 2}));
    const auto back = index.answers(1, r.inverse());
    EXPECT_EQ(std::vector<EntityId>(back.begin(), back.end()), (std::vector<EntityId>{0, 3}));
    EXPECT_TRUE(index.answers(4, r).empty());
    const Query head{Direction::head, 1, r};
    EXPECT_EQ(index.answers(head).size(), 2u);
  }
}

TEST(FilterTest, RemovesOtherAnswersKeepsTarget) {
  const AnswerIndex index(small_graph());
  const Query q{Direction::tail, 0, RelationId(0, false)};
  EXPECT_EQ(filtered_candidates(index, q, 1), (std::vector<std::uint8_t>{1, 1, 0, 1, 1}));
  EXPECT_EQ(filtered_candidates(index, q, 2), (std::vector<std::uint8_t>{1, 0, 1, 1, 1}));
  const Query h{Direction::head, 1, RelationId(0, false)};
  EXPECT_EQ(filtered_candidates(index, h, 3), (std::vector<std::uint8_t>{0, 1, 1, 1, 1}));
}

TEST(RankTest, WorkedExamples) {
  const Eigen::VectorXd s = (Eigen::VectorXd(5) << 0.1, 0.9, 0.5, 0.9, 0.2).finished();
  EXPECT_EQ(rank_of(s, {}, 1), 1u);
  EXPECT_EQ(rank_of(s, {}, 3), 2u);  // tie with a smaller id
  EXPECT_EQ(rank_of(s, {}, 2), 3u);
  EXPECT_EQ(rank_of(s, {}, 0), 5u);
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 1};
  EXPECT_EQ(rank_of(s, mask, 3), 1u);
  EXPECT_EQ(rank_of(s, mask, 2), 2u);
}

TEST(RankTest, UnrankedAndInvalid) {
  Eigen::VectorXd s = Eigen::VectorXd::Constant(3, kNegInf);
  s(0) = 1.0;
  EXPECT_FALSE(rank_of(s, {}, 1));
  EXPECT_EQ(rank_of(s, {}, 0), 1u);
  s(2) = std::nan("");
  EXPECT_THROW(rank_of(s, {}, 2), NumericError);
  EXPECT_THROW(rank_of(s, std::vector<std::uint8_t>{1, 1}, 0), std::invalid_argument);
  EXPECT_THROW(rank_of(s, {}, 3), std::out_of_range);
}

TEST(RankTest, MatchesSortOracle) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    // few distinct values so that ties are common
    Eigen::VectorXd s = Eigen::VectorXd::NullaryExpr(n, [&] { return static_cast<double>(rng() % 5); });
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
    for (auto& m : mask) m = rng() % 4 != 0;
    const int target = static_cast<int>(rng() % static_cast<unsigned>(n));
    mask[static_cast<std::size_t>(target)] = 1;
    if (trial % 7 == 0) s(target) = kNegInf;
    EXPECT_EQ(rank_of(s, mask, target), oracle::rank(s, mask, target));
    EXPECT_EQ(rank_of(s, {}, target), oracle::rank(s, {}, target));
  }
}

TEST(SummaryTest, Arithmetic) {
  RankingReport report;
  for (std::optional<std::size_t> r : {std::optional<std::size_t>{1}, {2}, {4}, {20}, {}}) {
    QueryRecord rec;
    rec.filtered_rank = r;
    report.records.push_back(rec);
  }
  summarize(report);
  EXPECT_EQ(report.n_queries, 5u);
  EXPECT_DOUBLE_EQ(report.mrr, (1.0 + 0.5 + 0.25 + 0.05) / 5.0);
  EXPECT_DOUBLE_EQ(report.hits1, 0.2);
  EXPECT_DOUBLE_EQ(report.hits3, 0.4);
  EXPECT_DOUBLE_EQ(report.hits10, 0.6);
  RankingReport empty;
  summarize(empty);
  EXPECT_EQ(empty.mrr, 0.0);
}

TEST(EvaluateTest, HeadQueriesUseInverseLabel) {
  const auto kg = augment_inverses(small_graph());
  const AnswerIndex index(kg);
  std::vector<std::pair<EntityId, RelationId>> asked;
  std::mutex mu;
  const FunctionScorer scorer([&](EntityId h, RelationId r) {
    std::lock_guard lock(mu);
    asked.emplace_back(h, r);
    return Eigen::VectorXd::LinSpaced(5, 5, 1);  // prefers small ids
  });
  const auto test = original_triples(kg, Split::test);
  ASSERT_EQ(test.size(), 1u);
  const auto report = evaluate(scorer, test, index);
  ASSERT_EQ(report.records.size(), 2u);
  EXPECT_EQ(report.records[0].direction, Direction::tail);
  EXPECT_EQ(report.records[1].direction, Direction::head);
  EXPECT_EQ(asked[0], std::make_pair(EntityId{3}, RelationId(0, false)));
  EXPECT_EQ(asked[1], std::make_pair(EntityId{1}, RelationId(0, true)));
  // tail: target 1 beats everything but e0
  EXPECT_EQ(report.records[0].filtered_rank, 2u);
  // head (?, r0, e1): e0 is another answer and is filtered; target e3 is behind e1, e2
  EXPECT_EQ(report.records[1].filtered_rank, 3u);
  EXPECT_EQ(report.records[1].raw_rank, 4u);
  EXPECT_THROW(evaluate(scorer, std::vector<Triple>{{1, RelationId(0, true), 3}}, index), std::invalid_argument);
}

TEST(EvaluateTest, FilteredNeverWorseThanRawAndWorkerInvariant) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 20);
    const auto kg = augment_inverses(oracle::make_graph(n, 2, oracle::random_triples(rng, n, 2, 3 * n),
                                                        oracle::random_triples(rng, n, 2, n),
                                                        oracle::random_triples(rng, n, 2, n)));
    const AnswerIndex index(kg);
    const std::uint64_t salt = rng();
    const FunctionScorer scorer([&](EntityId h, RelationId r) {
      std::mt19937_64 local(salt ^ static_cast<std::uint64_t>(h * 131 + r.index()));
      return Eigen::VectorXd::NullaryExpr(n, [&] { return static_cast<double>(local() % 4); }).eval();
    });
    const auto test = original_triples(kg, Split::test);
    const auto one = evaluate(scorer, test, index, 1);
    const auto four = evaluate(scorer, test, index, 4);
    ASSERT_EQ(one.records.size(), 2 * test.size());
    for (std::size_t i = 0; i < one.records.size(); ++i) {
      EXPECT_LE(*one.records[i].filtered_rank, *one.records[i].raw_rank);
      EXPECT_EQ(one.records[i].filtered_rank, four.records[i].filtered_rank);
      EXPECT_EQ(one.records[i].triple_index, i / 2);
    }
    EXPECT_EQ(one.mrr, four.mrr);
    RankingReport copy{one.records};
    summarize(copy);
    EXPECT_EQ(copy.mrr, one.mrr);
    EXPECT_EQ(copy.hits10, one.hits10);
  }
}

TEST(EvaluateTest, UnrankedTargetsCountAsZero) {
  const auto kg = augment_inverses(small_graph());
  const FunctionScorer scorer([](EntityId, RelationId) { return Eigen::VectorXd::Constant(5, kNegInf).eval(); });
  const auto report = evaluate(scorer, original_triples(kg, Split::test), AnswerIndex(kg));
  EXPECT_EQ(report.mrr, 0.0);
  EXPECT_FALSE(report.records[0].filtered_rank);
  EXPECT_FALSE(report.records[0].raw_rank);
}

TEST(ScorerTest, EmbeddingScorerIsTheQueryScorer) {
  const auto kg = augment_inverses(small_graph());
  const EmbeddingQueryScorer q(initial_parameters(GroupKind::circle, 3, 5, 2, 0.5, 1));
  const EmbeddingScorer scorer(q);
  EXPECT_EQ(scorer.name(), "embedding");
  EXPECT_EQ(scorer.score(0, RelationId(0, true), {}), q.score_tails(0, RelationId(0, true)));
}

TEST(ScorerTest, ReeScorerPositions) {
  const auto kg = augment_inverses(oracle::make_graph(4, 1, {{0, 0, 1}, {1, 0, 2}, {0, 0, 3}}));
  std::vector<std::vector<Rule>> rules(2);
  rules[0] = {{{RelationId(0, false), RelationId(0, false)}, RelationId(0, false), 0.9},
              {{RelationId(0, false)}, RelationId(0, false), 0.5}};
  const ReeScorer all(kg, rules);
  const auto s = all.score(0, RelationId(0, false), {});
  EXPECT_EQ(s(2), 0.0);
  EXPECT_EQ(s(1), -1.0);
  EXPECT_EQ(s(3), -2.0);
  EXPECT_EQ(s(0), kNegInf);
  const ReeScorer short_only(kg, rules, 1);
  const auto t = short_only.score(0, RelationId(0, false), {});
  EXPECT_EQ(t(1), 0.0);
  EXPECT_EQ(t(2), kNegInf);
  EXPECT_EQ(all.score(0, RelationId(0, true), {}), Eigen::VectorXd::Constant(4, kNegInf));
}

TEST(ScorerTest, PbfEndpoints) {
  const auto kg = augment_inverses(oracle::make_graph(4, 1, {{0, 0, 1}, {1, 0, 2}, {0, 0, 3}}));
  const EmbeddingQueryScorer q(initial_parameters(GroupKind::circle, 3, 4, 2, 0.5, 7));
  const RelationModel model{RelationId(0, false), {{RelationId(0, false), RelationId(0, false)}},
                            Eigen::VectorXd::Ones(1), false, 1, 0.1, 0.1};
  const std::vector<RelationModel> models{model};
  const std::vector<std::uint8_t> mask{1, 1, 1, 1};
  const Eigen::VectorXd emb = q.score_tails(0, RelationId(0, false));
  const auto one = PbfScorer(kg, q, models, 1.0).score(0, RelationId(0, false), mask);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(one(i) > one(j), emb(i) > emb(j));
  }
  const auto zero = PbfScorer(kg, q, models, 0.0).score(0, RelationId(0, false), mask);
  EXPECT_EQ(zero(2), 0.0);  // the only featured entity carries all the mass
  EXPECT_EQ(zero(1), kNegInf);
  EXPECT_THROW(PbfScorer(kg, q, models, 0.25), std::invalid_argument);
}

TEST(MetricsTest, JsonLayout) {
  RankingReport report;
  report.mrr = 0.5;
  report.hits1 = 0.25;
  report.n_queries = 4;
  const std::string text = metrics_json(report, {"toy", "pbf", R"({"lambda":0.3})", 7});
  const auto j = nlohmann::ordered_json::parse(text);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"dataset", "scorer", "mrr", "hits1", "hits3", "hits10", "n_queries",
                                            "config", "seed"}));
  EXPECT_EQ(j["config"]["lambda"], 0.3);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(text.back(), '\n');
}

TEST(MetricsTest, QueryTsv) {
  const auto kg = augment_inverses(small_graph());
  const FunctionScorer scorer([](EntityId, RelationId) { return Eigen::VectorXd::LinSpaced(5, 5, 1).eval(); });
  const auto report = evaluate(scorer, original_triples(kg, Split::test), AnswerIndex(kg));
  fixtures::TempDir dir("metrics");
  write_query_ranks_tsv(dir.path() / "q.tsv", kg, report);
  EXPECT_EQ(fixtures::read_file(dir.path() / "q.tsv"),
            "head\trelation\ttail\tdirection\tfiltered_rank\traw_rank\n"
            "e3\tr0\te1\ttail\t2\t2\n"
            "e3\tr0\te1\thead\t3\t4\n");
}

TEST(SelectionTest, GridExpansionOrder) {
  const std::vector<double> lambdas{0.5, 0.0}, lrs{0.1}, l2s{0.01, 0.001};
  const std::vector<int> lens{2, 1, 2};
  const auto grid = expand_grid(lambdas, lens, lrs, l2s);
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(grid.front(), (GridPoint{0.0, 1, 0.1, 0.001}));
}

TEST(SelectionTest, TiesGoToSmallerPoint) {
  const std::vector<double> lambdas{0.0, 0.5, 1.0}, lrs{0.1}, l2s{0.1};
  const std::vector<int> lens{1, 2};
  const auto grid = expand_grid(lambdas, lens, lrs, l2s);
  const auto result = select_hyperparameters(grid, [](const GridPoint& p) { return p.lambda == 0.0 ? 0.2 : 0.4; });
  EXPECT_EQ(result.best, (GridPoint{0.5, 1, 0.1, 0.1}));
  EXPECT_EQ(result.best_mrr, 0.4);
  EXPECT_EQ(result.sweep.size(), grid.size());
  EXPECT_THROW(select_hyperparameters({}, [](const GridPoint&) { return 0.0; }), std::invalid_argument);
  EXPECT_THROW(select_hyperparameters(grid, [](const GridPoint&) { return std::nan(""); }), NumericError);
}

TEST(SelectionTest, ExhaustiveSweepAgreesWithOracle) {
  std::mt19937_64 rng(37);
  const auto lambdas = lambda_grid();
  const std::vector<int> lens{1, 2, 3};
  const std::vector<double> lrs{0.001, 0.01, 0.1}, l2s{0.001, 0.01};
  const auto grid = expand_grid(lambdas, lens, lrs, l2s);
  for (int trial = 0; trial < 20; ++trial) {
    std::map<GridPoint, double> mrr;
    for (const auto& p : grid) mrr[p] = static_cast<double>(rng() % 6) / 5.0;
    const auto result = select_hyperparameters(grid, [&](const GridPoint& p) { return mrr.at(p); });
    double best = -1.0;
    for (const auto& [p, m] : mrr) best = std::max(best, m);
    GridPoint expected{};
    for (const auto& [p, m] : mrr) {
      if (m == best) {
        expected = p;  // std::map iterates ascending
        break;
      }
    }
    EXPECT_EQ(result.best, expected);
    EXPECT_EQ(result.best_mrr, best);
  }
}

}  // namespace
}  // namespace kgpath
