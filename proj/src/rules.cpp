#include "kgpath/rules.hpp"

#include <algorithm>
#include <limits>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kgpath/parallel.hpp"

namespace kgpath {

RelationPath reversed_path(std::span<const RelationId> path) {
  RelationPath out;
  out.reserve(path.size());
  for (auto it = path.rbegin(); it != path.rend(); ++it) out.push_back(it->inverse());
  return out;
}

Rule inverse_form(const Rule& rule) { return {reversed_path(rule.body), rule.head.inverse(), std::nullopt}; }

bool rank_before(const Rule& a, const Rule& b) {
  const double ca = a.confidence.value_or(-std::numeric_limits<double>::infinity());
  const double cb = b.confidence.value_or(-std::numeric_limits<double>::infinity());
  if (ca != cb) return ca > cb;
  if (a.body.size() != b.body.size()) return a.body.size() < b.body.size();
  return a.body < b.body;
}

double rule_confidence(const AkglgModel& model, const Rule& rule) {
  return model.visit([&](const auto& m) { return static_cast<double>(rule_confidence(m, rule.body, rule.head)); });
}

void score_rules(const AkglgModel& model, std::vector<Rule>& rules, int workers) {
  parallel_chunks(rules.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) rules[i].confidence = rule_confidence(model, rules[i]);
  });
}

std::vector<std::vector<Rule>> select_top_rules(std::vector<Rule> rules, const AkglgModel& model,
                                                std::size_t per_head_limit, int workers) {
  if (per_head_limit == 0) throw std::invalid_argument("per-head rule limit must be at least 1");
  std::vector<Rule> unscored;
  std::vector<std::size_t> unscored_at;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!rules[i].confidence) {
      unscored.push_back(rules[i]);
      unscored_at.push_back(i);
    }
  }
  score_rules(model, unscored, workers);
  for (std::size_t k = 0; k < unscored.size(); ++k) rules[unscored_at[k]].confidence = unscored[k].confidence;

  std::vector<std::vector<Rule>> by_head(static_cast<std::size_t>(model.label_count()));
  for (auto& rule : rules) {
    const auto h = static_cast<std::size_t>(rule.head.index());
    if (h >= by_head.size()) throw std::out_of_range("rule head outside the model's relation labels");
    by_head[h].push_back(std::move(rule));
  }
  for (auto& group : by_head) {
    const auto keep = std::min(per_head_limit, group.size());
    std::partial_sort(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(keep), group.end(), rank_before);
    group.resize(keep);
  }
  return by_head;
}

void write_rules_tsv(const KnowledgeGraph& kg, const std::vector<std::vector<Rule>>& ranked,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "head_relation\tbody\tconfidence\n";
  char buf[64];
  for (const auto& group : ranked) {
    for (const Rule& rule : group) {
      out << kg.relation_name(rule.head) << '\t';
      for (std::size_t i = 0; i < rule.body.size(); ++i) {
        if (i > 0) out << ',';
        out << kg.relation_name(rule.body[i]);
      }
      std::snprintf(buf, sizeof(buf), "%.17g", rule.confidence.value_or(0.0));
      out << '\t' << buf << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::vector<Rule>> read_rules_tsv(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rules file " + path.string());
  std::vector<std::vector<Rule>> by_head(static_cast<std::size_t>(kg.label_capacity()));
  std::string line;
  std::size_t line_no = 0;
  auto relation = [&](std::string_view name) {
    auto r = kg.parse_relation(name);
    if (!r) throw ParseError(path.string(), line_no, "unknown relation '" + std::string(name) + "'");
    return *r;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.starts_with("head_relation"))) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError(path.string(), line_no, "expected 3 tab-separated fields");
    }
    Rule rule;
    rule.head = relation(std::string_view(line).substr(0, t1));
    std::string_view body = std::string_view(line).substr(t1 + 1, t2 - t1 - 1);
    while (!body.empty()) {
      const auto comma = body.find(',');
      rule.body.push_back(relation(body.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    if (rule.body.empty()) throw ParseError(path.string(), line_no, "empty rule body");
    const std::string conf = line.substr(t2 + 1);
    try {
      std::size_t used = 0;
      rule.confidence = std::stod(conf, &used);
      if (used != conf.size()) throw std::invalid_argument(conf);
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "bad confidence '" + conf + "'");
    }
    by_head[static_cast<std::size_t>(rule.head.index())].push_back(std::move(rule));
  }
  return by_head;
}

}  // namespace kgpath
