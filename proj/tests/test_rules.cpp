#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fixtures.hpp"
#include "kgpath/rules.hpp"

namespace kgpath {
namespace {

using cd = std::complex<double>;

RelationId label(int index) { return RelationId::from_index(index); }

TEST(PathTest, ReversedPathInvertsAndReverses) {
  const RelationPath p{label(0), label(3), label(4)};
  EXPECT_EQ(reversed_path(p), (RelationPath{label(5), label(2), label(1)}));
  EXPECT_EQ(reversed_path(reversed_path(p)), p);
  const Rule r{p, label(6), 0.5};
  const Rule inv = inverse_form(r);
  EXPECT_EQ(inv.head, label(7));
  EXPECT_FALSE(inv.confidence);
}

TEST(PathTest, CirclePathEmbeddingComposes) {
  auto m = CircleEmbedding::identity(1, 1, 4);
  m.relation_points(0, 0) = cd(0, 1);
  m.relation_points(0, 2) = cd(0, 1);
  const RelationPath p{label(0), label(2)};
  EXPECT_NEAR(std::abs(path_embedding(m, p)(0) - cd(-1, 0)), 0.0, 1e-15);
  EXPECT_EQ(path_embedding(m, RelationPath{})(0), cd(1, 0));
}

TEST(PathTest, LinePathEmbeddingAdds) {
  auto m = LineEmbedding::identity(2, 1, 3);
  m.relation_points.col(0) << 1.0, -2.0;
  m.relation_points.col(2) << 0.5, 0.5;
  const auto g = path_embedding(m, RelationPath{label(0), label(2), label(0)});
  EXPECT_DOUBLE_EQ(g(0), 2.5);
  EXPECT_DOUBLE_EQ(g(1), -3.5);
}

TEST(PathAttentionTest, GeometricMeanNormalized) {
  auto m = SignEmbedding::identity(2, 1, 2);
  m.relation_attention.col(0) << 4.0, 1.0;
  m.relation_attention.col(1) << 1.0, 1.0;
  const auto w = path_attention(m, RelationPath{label(0), label(1)});
  // geometric means (2, 1), normalized by sqrt(5)
  EXPECT_NEAR(w(0), 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(w(1), 1.0 / std::sqrt(5.0), 1e-15);
}

TEST(PathAttentionTest, ZeroAttentionStaysZero) {
  auto m = SignEmbedding::identity(3, 1, 2);
  m.relation_attention.col(0).setZero();
  const auto w = path_attention(m, RelationPath{label(0), label(1)});
  EXPECT_EQ(w.norm(), 0.0);
}

TEST(PathAttentionTest, UnitNormOnRandomModels) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = CircleEmbedding::identity(6, 1, 4);
    m.relation_attention = Eigen::MatrixXd::NullaryExpr(6, 4, [&] { return u(rng); });
    const auto w = path_attention(m, RelationPath{label(trial % 4), label((trial + 1) % 4)});
    EXPECT_NEAR(w.norm(), 1.0, 1e-12);
    EXPECT_GE(w.minCoeff(), 0.0);
  }
}

TEST(ConfidenceTest, IdentityRuleOnTwoCoordinates) {
  const auto m = CircleEmbedding::identity(2, 1, 4);
  EXPECT_NEAR(rule_confidence(m, RelationPath{label(0)}, label(2)), std::sqrt(2.0), 1e-15);
}

TEST(ConfidenceTest, ZeroHeadAttentionAnnihilates) {
  auto m = CircleEmbedding::identity(3, 1, 4);
  m.relation_attention.col(2).setZero();
  EXPECT_EQ(rule_confidence(m, RelationPath{label(0), label(1)}, label(2)), 0.0);
}

TEST(ConfidenceTest, MatchesIndependentComputation) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 2.0), angle(-3.1, 3.1);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = CircleEmbedding::identity(5, 1, 6);
    m.relation_attention = Eigen::MatrixXd::NullaryExpr(5, 6, [&] { return u(rng); });
    m.relation_points = Eigen::MatrixXcd::NullaryExpr(5, 6, [&] { return std::polar(1.0, angle(rng)); });
    const int n = 1 + trial % 3;
    RelationPath body;
    for (int i = 0; i < n; ++i) body.push_back(label(static_cast<int>(rng() % 6)));
    const RelationId head = label(static_cast<int>(rng() % 6));

    // angles add, attentions multiply in log space
    double expected = 0.0;
    std::vector<double> w(5);
    double norm2 = 0.0;
    for (int i = 0; i < 5; ++i) {
      double log_w = 0.0;
      for (RelationId r : body) log_w += std::log(m.relation_attention(i, r.index()));
      w[i] = std::exp(log_w / n);
      norm2 += w[i] * w[i];
    }
    for (int i = 0; i < 5; ++i) {
      double phase = 0.0;
      for (RelationId r : body) phase += std::arg(m.relation_points(i, r.index()));
      const double d = std::cos(phase - std::arg(m.relation_points(i, head.index())));
      expected += w[i] / std::sqrt(norm2) * m.relation_attention(i, head.index()) * d;
    }
    EXPECT_NEAR(rule_confidence(m, body, head), expected, 1e-12);
  }
}

TEST(ConfidenceTest, ModelOverloadAgreesWithTemplate) {
  const auto params = initial_parameters(GroupKind::line, 4, 3, 6, 0.5, 2);
  const auto model = to_model(params);
  const Rule rule{{label(1), label(4)}, label(2), std::nullopt};
  const auto& m = std::get<LineEmbedding>(model.embedding());
  EXPECT_EQ(rule_confidence(model, rule), rule_confidence(m, rule.body, rule.head));
  std::vector<Rule> rules{rule, rule};
  score_rules(model, rules, 2);
  EXPECT_EQ(rules[1].confidence, rule_confidence(model, rule));
}

TEST(SelectTopTest, OrdersByConfidenceThenLengthThenBody) {
  const auto model = to_model(initial_parameters(GroupKind::circle, 2, 2, 4, 0.5, 1));
  std::vector<Rule> rules{
      {{label(2)}, label(0), 0.5},
      {{label(2), label(3)}, label(0), 0.9},
      {{label(1)}, label(0), 0.5},
      {{label(3)}, label(0), 0.9},
      {{label(0)}, label(1), 0.1},
  };
  const auto top = select_top_rules(rules, model, 3);
  ASSERT_EQ(top.size(), 4u);
  ASSERT_EQ(top[0].size(), 3u);
  EXPECT_EQ(top[0][0].body, (RelationPath{label(3)}));
  EXPECT_EQ(top[0][1].body, (RelationPath{label(2), label(3)}));
  EXPECT_EQ(top[0][2].body, (RelationPath{label(1)}));
  ASSERT_EQ(top[1].size(), 1u);
  EXPECT_TRUE(top[2].empty());
  EXPECT_THROW(select_top_rules(rules, model, 0), std::invalid_argument);
}

TEST(SelectTopTest, ScoresMissingConfidences) {
  const auto model = to_model(initial_parameters(GroupKind::sign, 3, 2, 4, 0.5, 4));
  std::vector<Rule> rules{{{label(2)}, label(0), std::nullopt}};
  const auto top = select_top_rules(rules, model, 5);
  ASSERT_TRUE(top[0][0].confidence);
  EXPECT_EQ(*top[0][0].confidence, rule_confidence(model, rules[0]));
}

TEST(RulesTsvTest, RoundTripIsExact) {
  const auto kg = fixtures::five_triple_graph();
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<Rule>> ranked(static_cast<std::size_t>(kg.label_capacity()));
  for (int h = 0; h < kg.label_capacity(); ++h) {
    for (int k = 0; k < 3; ++k) {
      RelationPath body;
      for (int i = 0; i <= k; ++i) body.push_back(label(static_cast<int>(rng() % 4)));
      ranked[static_cast<std::size_t>(h)].push_back({body, label(h), n(rng)});
    }
  }
  fixtures::TempDir dir("rules");
  write_rules_tsv(kg, ranked, dir.path() / "rules.tsv");
  const auto back = read_rules_tsv(kg, dir.path() / "rules.tsv");
  ASSERT_EQ(back.size(), ranked.size());
  for (std::size_t h = 0; h < ranked.size(); ++h) {
    ASSERT_EQ(back[h].size(), ranked[h].size());
    for (std::size_t i = 0; i < ranked[h].size(); ++i) {
      EXPECT_TRUE(back[h][i].same_rule(ranked[h][i]));
      EXPECT_EQ(back[h][i].confidence, ranked[h][i].confidence);
    }
  }
  const std::string text = fixtures::read_file(dir.path() / "rules.tsv");
  EXPECT_EQ(text.rfind("head_relation\tbody\tconfidence\n", 0), 0u);
  EXPECT_NE(text.find("INV:r"), std::string::npos);
}

TEST(RulesTsvTest, MalformedLinesRejected) {
  const auto kg = fixtures::five_triple_graph();
  fixtures::TempDir dir("rules");
  fixtures::write_file(dir.path() / "a.tsv", "r0\tr9\t0.5\n");
  EXPECT_THROW(read_rules_tsv(kg, dir.path() / "a.tsv"), ParseError);
  fixtures::write_file(dir.path() / "b.tsv", "r0\tr1\n");
  EXPECT_THROW(read_rules_tsv(kg, dir.path() / "b.tsv"), ParseError);
  fixtures::write_file(dir.path() / "c.tsv", "r0\tr1\tabc\n");
  EXPECT_THROW(read_rules_tsv(kg, dir.path() / "c.tsv"), ParseError);
  EXPECT_THROW(read_rules_tsv(kg, dir.path() / "missing.tsv"), std::runtime_error);
}

}  // namespace
}  // namespace kgpath
