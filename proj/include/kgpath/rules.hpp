#ifndef KGPATH_RULES_HPP
#define KGPATH_RULES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "kgpath/akglg_model.hpp"
#include "kgpath/knowledge_graph.hpp"

namespace kgpath {

/// Body of a path rule: r1(x1,x2) ^ ... ^ rn(xn,xn+1).
using RelationPath = std::vector<RelationId>;

/// (r1, ..., rn) => head, read as a tail-prediction rule for `head`.
struct Rule {
  RelationPath body;
  RelationId head;
  std::optional<double> confidence;

  bool same_rule(const Rule& other) const { return head == other.head && body == other.body; }
};

/// (rn^-1, ..., r1^-1): the path walked backwards.
RelationPath reversed_path(std::span<const RelationId> path);
/// (rn^-1, ..., r1^-1) => head^-1, the head-prediction form of `rule`.
Rule inverse_form(const Rule& rule);

/// Ordering used for rule lists: confidence descending, then shorter body,
/// then lexicographically smaller body label indexes.
bool rank_before(const Rule& a, const Rule& b);

/// g_{r1} +_G ... +_G g_{rn}, coordinate-wise.
template <class Group>
Eigen::Matrix<typename Group::Element, Eigen::Dynamic, 1> path_embedding(const GroupEmbedding<Group>& m,
                                                                         std::span<const RelationId> path) {
  using Vector = Eigen::Matrix<typename Group::Element, Eigen::Dynamic, 1>;
  Vector g = Vector::Constant(m.dim(), Group::identity());
  for (RelationId r : path) {
    for (Eigen::Index i = 0; i < m.dim(); ++i) g(i) = Group::compose(g(i), m.relation_points(i, r.index()));
  }
  return g;
}

/// Element-wise geometric mean of the body attentions, scaled to unit
/// Euclidean norm; the zero vector stays zero.
template <class Group>
Eigen::Matrix<typename Group::Scalar, Eigen::Dynamic, 1> path_attention(const GroupEmbedding<Group>& m,
                                                                        std::span<const RelationId> path) {
  using Scalar = typename Group::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector w = Vector::Ones(m.dim());
  if (path.empty()) return w.normalized();
  for (RelationId r : path) w = w.cwiseProduct(m.relation_attention.col(r.index()));
  const Scalar exponent = Scalar(1) / static_cast<Scalar>(path.size());
  w = w.unaryExpr([exponent](Scalar x) { return std::pow(x, exponent); });
  const Scalar norm = w.norm();
  if (norm == Scalar(0)) return Vector::Zero(m.dim());
  return w / norm;
}

/// (w_p o w_head) . d_G(g_p, g_head).
template <class Group>
typename Group::Scalar rule_confidence(const GroupEmbedding<Group>& m, std::span<const RelationId> body,
                                       RelationId head) {
  using Scalar = typename Group::Scalar;
  const auto g = path_embedding(m, body);
  const auto w = path_attention(m, body);
  Scalar total(0);
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    total += w(i) * m.relation_attention(i, head.index()) *
             Group::similarity(g(i), m.relation_points(i, head.index()));
  }
  return total;
}

double rule_confidence(const AkglgModel& model, const Rule& rule);

/// Fills in `confidence` for every rule.
void score_rules(const AkglgModel& model, std::vector<Rule>& rules, int workers = 1);

/// Rules grouped by head label index (inverse heads are distinct), each
/// group holding at most `per_head_limit` rules in rank order. Rules without
/// a confidence are scored with `model` first.
std::vector<std::vector<Rule>> select_top_rules(std::vector<Rule> rules, const AkglgModel& model,
                                                std::size_t per_head_limit, int workers = 1);

/// TSV with header `head_relation<TAB>body<TAB>confidence`; body relation names
/// are comma-joined with inverses prefixed "INV:". Rows are grouped by head
/// label index, then in rank order.
void write_rules_tsv(const KnowledgeGraph& kg, const std::vector<std::vector<Rule>>& ranked,
                     const std::filesystem::path& path);
/// Inverse of write_rules_tsv; unknown relation names raise ParseError.
std::vector<std::vector<Rule>> read_rules_tsv(const KnowledgeGraph& kg, const std::filesystem::path& path);

}  // namespace kgpath

#endif  // KGPATH_RULES_HPP
