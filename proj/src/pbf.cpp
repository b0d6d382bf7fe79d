#include "kgpath/pbf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <stdexcept>

#include "kgpath/binary_io.hpp"
#include "kgpath/grounding.hpp"

namespace kgpath {

QueryFeatures::QueryFeatures(Eigen::Index path_count, std::vector<EntityId> entities, Eigen::MatrixXd features)
    : path_count_(path_count), entities_(std::move(entities)), features_(std::move(features)) {}

Eigen::Index QueryFeatures::column(EntityId e) const {
  auto it = std::lower_bound(entities_.begin(), entities_.end(), e);
  if (it == entities_.end() || *it != e) return -1;
  return it - entities_.begin();
}

Eigen::VectorXd QueryFeatures::feature(EntityId e) const {
  const auto c = column(e);
  if (c < 0) return Eigen::VectorXd::Zero(path_count_);
  return features_.col(c);
}

QueryFeatures build_query_features(const KnowledgeGraph& kg, EntityId head, std::span<const RelationPath> paths) {
  std::vector<MultiplicityTable> tables;
  tables.reserve(paths.size());
  std::vector<EntityId> entities;
  for (const auto& p : paths) {
    tables.push_back(path_targets(kg, head, p));
    for (const auto& entry : tables.back().entries()) entities.push_back(entry.entity);
  }
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());

  const auto n_paths = static_cast<Eigen::Index>(paths.size());
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n_paths, static_cast<Eigen::Index>(entities.size()));
  for (Eigen::Index i = 0; i < n_paths; ++i) {
    const auto& table = tables[static_cast<std::size_t>(i)];
    if (table.max_count() == 0) continue;
    const double m = static_cast<double>(table.max_count());
    for (const auto& entry : table.entries()) {
      const auto col = std::lower_bound(entities.begin(), entities.end(), entry.entity) - entities.begin();
      features(i, col) = static_cast<double>(entry.count) / m;
    }
  }
  return QueryFeatures(n_paths, std::move(entities), std::move(features));
}

Eigen::MatrixXd build_features(const KnowledgeGraph& kg, EntityId head, std::span<const EntityId> candidates,
                               std::span<const RelationPath> paths) {
  const auto query = build_query_features(kg, head, paths);
  Eigen::MatrixXd out(query.path_count(), static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t j = 0; j < candidates.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = query.feature(candidates[j]);
  return out;
}

std::vector<EntityId> sample_negatives(const QueryFeatures& features, EntityId positive, std::size_t count,
                                       std::mt19937_64& rng) {
  std::vector<EntityId> pool;
  pool.reserve(features.entities().size());
  for (EntityId e : features.entities()) {
    if (e != positive) pool.push_back(e);
  }
  if (pool.size() <= count) return pool;
  std::vector<EntityId> out;
  out.reserve(count);
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), count, rng);
  return out;
}

std::vector<EntityId> sample_negatives(const QueryFeatures& features, EntityId positive, std::size_t count,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_negatives(features, positive, count, rng);
}

double softmax_regression_loss(const Eigen::VectorXd& theta, std::span<const RegressionExample> examples, double l2,
                               Eigen::VectorXd* gradient) {
  if (gradient) *gradient = Eigen::VectorXd::Zero(theta.size());
  double loss = 0.0;
  if (!examples.empty()) {
    const double inv = 1.0 / static_cast<double>(examples.size());
    for (const auto& ex : examples) {
      Eigen::VectorXd s = ex.candidates.transpose() * theta;
      const double max = s.maxCoeff();
      const double target = s(0) - max;
      s = (s.array() - max).exp();
      const double z = s.sum();
      loss += inv * (std::log(z) - target);
      if (gradient) {
        s /= z;
        s(0) -= 1.0;
        *gradient += inv * (ex.candidates * s);
      }
    }
  }
  loss += 0.5 * l2 * theta.squaredNorm();
  if (gradient) *gradient += l2 * theta;
  return loss;
}

Eigen::VectorXd RelationModel::score(const Eigen::MatrixXd& features) const { return features.transpose() * theta; }

RelationTraining train_relation_model(const KnowledgeGraph& kg, RelationId relation, std::vector<RelationPath> paths,
                                      const PbfTrainConfig& config) {
  RelationTraining out;
  RelationModel& model = out.model;
  model.relation = relation;
  model.paths = std::move(paths);
  model.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.paths.size()));
  model.learning_rate = config.learning_rate;
  model.l2 = config.l2;

  std::map<EntityId, QueryFeatures> by_head;
  std::vector<Triple> usable;
  if (!model.paths.empty()) {
    for (const Triple& t : kg.triples_with(relation)) {
      auto it = by_head.find(t.head);
      if (it == by_head.end()) it = by_head.emplace(t.head, build_query_features(kg, t.head, model.paths)).first;
      if (it->second.nonzero(t.tail)) usable.push_back(t);
    }
  }
  model.positives_used = usable.size();
  if (usable.empty()) {
    model.feature_starved = true;
    return out;
  }

  std::mt19937_64 rng(config.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(relation.index() + 1)));
  std::shuffle(usable.begin(), usable.end(), rng);
  std::size_t cursor = 0;
  std::vector<RegressionExample> batch(config.batch_size);
  Eigen::VectorXd grad;
  out.batch_losses.reserve(config.batches);
  for (std::size_t b = 0; b < config.batches; ++b) {
    for (auto& ex : batch) {
      if (cursor == usable.size()) {
        std::shuffle(usable.begin(), usable.end(), rng);
        cursor = 0;
      }
      const Triple& pos = usable[cursor++];
      const QueryFeatures& f = by_head.at(pos.head);
      const auto negatives = sample_negatives(f, pos.tail, config.negatives, rng);
      ex.candidates.resize(f.path_count(), static_cast<Eigen::Index>(negatives.size()) + 1);
      ex.candidates.col(0) = f.feature(pos.tail);
      for (std::size_t k = 0; k < negatives.size(); ++k) {
        ex.candidates.col(static_cast<Eigen::Index>(k) + 1) = f.matrix().col(f.column(negatives[k]));
      }
    }
    const double loss = softmax_regression_loss(model.theta, batch, config.l2, &grad);
    if (!std::isfinite(loss)) throw NumericError("softmax regression diverged for relation " + kg.relation_name(relation));
    model.theta -= config.learning_rate * grad;
    out.batch_losses.push_back(loss);
  }
  return out;
}

Eigen::VectorXd combine_scores(const Eigen::VectorXd& embedding, const Eigen::VectorXd& regression,
                               const std::vector<bool>& has_features, double lambda) {
  const Eigen::Index n = embedding.size();
  if (regression.size() != n || static_cast<Eigen::Index>(has_features.size()) != n) {
    throw std::invalid_argument("combine_scores: score vectors cover different candidate sets");
  }
  Eigen::VectorXd combined = Eigen::VectorXd::Zero(n);
  if (n == 0) return combined;

  const double emb_max = embedding.maxCoeff();
  Eigen::VectorXd p_emb = (embedding.array() - emb_max).exp();
  p_emb /= p_emb.sum();

  Eigen::VectorXd p_sr = Eigen::VectorXd::Zero(n);
  double sr_max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (has_features[static_cast<std::size_t>(i)]) sr_max = std::max(sr_max, regression(i));
  }
  if (std::isfinite(sr_max)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (has_features[static_cast<std::size_t>(i)]) p_sr(i) = std::exp(regression(i) - sr_max);
    }
    p_sr /= p_sr.sum();
  }
  combined = lambda * p_emb + (1.0 - lambda) * p_sr;
  return combined;
}

Eigen::VectorXd combine_log_scores(const Eigen::VectorXd& embedding, const Eigen::VectorXd& regression,
                                   const std::vector<bool>& has_features, double lambda,
                                   std::span<const std::uint8_t> normalize_over) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const Eigen::Index n = embedding.size();
  if (regression.size() != n || static_cast<Eigen::Index>(has_features.size()) != n) {
    throw std::invalid_argument("combine_log_scores: score vectors cover different candidate sets");
  }
  if (!normalize_over.empty() && static_cast<Eigen::Index>(normalize_over.size()) != n) {
    throw std::invalid_argument("combine_log_scores: normalization mask has the wrong size");
  }
  auto in_set = [&](Eigen::Index i) { return normalize_over.empty() || normalize_over[static_cast<std::size_t>(i)] != 0; };
  auto featured = [&](Eigen::Index i) { return has_features[static_cast<std::size_t>(i)]; };

  // log sum exp of v over the entries accepted by `keep`; -inf when none
  auto log_norm = [&](const Eigen::VectorXd& v, auto keep) {
    double max = kNegInf;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (keep(i)) max = std::max(max, v(i));
    }
    if (max == kNegInf) return kNegInf;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (keep(i)) acc += std::exp(v(i) - max);
    }
    return max + std::log(acc);
  };
  const double emb_norm = log_norm(embedding, in_set);
  const double sr_norm = log_norm(regression, [&](Eigen::Index i) { return in_set(i) && featured(i); });

  const double log_lambda = lambda > 0.0 ? std::log(lambda) : kNegInf;
  const double log_rest = lambda < 1.0 ? std::log1p(-lambda) : kNegInf;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = emb_norm == kNegInf ? kNegInf : log_lambda + (embedding(i) - emb_norm);
    const double b = (featured(i) && sr_norm != kNegInf) ? log_rest + (regression(i) - sr_norm) : kNegInf;
    const double hi = std::max(a, b);
    out(i) = hi == kNegInf ? kNegInf : hi + std::log1p(std::exp(std::min(a, b) - hi));
  }
  return out;
}

std::vector<double> lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

void check_lambda(double lambda) {
  for (double g : lambda_grid()) {
    if (std::abs(g - lambda) < 1e-9) return;
  }
  throw std::invalid_argument("combination weight must be one of 0, 0.1, ..., 1");
}

namespace {

constexpr char kRelationMagic[8] = {'K', 'G', 'P', 'R', 'E', 'L', 'M', '1'};

}  // namespace

void save_relation_model(const KnowledgeGraph& kg, const RelationModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kRelationMagic, sizeof(kRelationMagic));
  binary::write_string(out, kg.relation_name(model.relation));
  binary::write_u32(out, model.feature_starved ? 1u : 0u);
  binary::write_f64(out, model.learning_rate);
  binary::write_f64(out, model.l2);
  binary::write_u64(out, model.positives_used);
  binary::write_u32(out, static_cast<std::uint32_t>(model.paths.size()));
  for (const auto& p : model.paths) {
    binary::write_u32(out, static_cast<std::uint32_t>(p.size()));
    for (RelationId r : p) binary::write_string(out, kg.relation_name(r));
  }
  binary::write_f64s(out, std::span<const double>(model.theta.data(), static_cast<std::size_t>(model.theta.size())));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

RelationModel load_relation_model(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open relation model " + path.string());
  char magic[sizeof(kRelationMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kRelationMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path.string() + " is not a relation-model file");
  }
  auto relation = [&](const std::string& name) {
    auto r = kg.parse_relation(name);
    if (!r) throw std::runtime_error(path.string() + ": unknown relation '" + name + "'");
    return *r;
  };
  RelationModel model;
  model.relation = relation(binary::read_string(in));
  model.feature_starved = (binary::read_u32(in) & 1u) != 0;
  model.learning_rate = binary::read_f64(in);
  model.l2 = binary::read_f64(in);
  model.positives_used = binary::read_u64(in);
  const auto n_paths = binary::read_u32(in);
  model.paths.resize(n_paths);
  for (auto& p : model.paths) {
    const auto len = binary::read_u32(in);
    for (std::uint32_t i = 0; i < len; ++i) p.push_back(relation(binary::read_string(in)));
  }
  model.theta.resize(n_paths);
  binary::read_f64s(in, std::span<double>(model.theta.data(), n_paths));
  return model;
}

void save_relation_models(const KnowledgeGraph& kg, const std::vector<RelationModel>& models,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream summary(dir / "summary.tsv");
  if (!summary) throw std::runtime_error("cannot write " + (dir / "summary.tsv").string());
  summary << "relation\tpaths\tpositives_used\tfeature_starved\n";
  for (const auto& m : models) {
    save_relation_model(kg, m, dir / ("relation_" + std::to_string(m.relation.index()) + ".bin"));
    summary << kg.relation_name(m.relation) << '\t' << m.paths.size() << '\t' << m.positives_used << '\t'
            << (m.feature_starved ? "yes" : "no") << '\n';
  }
}

std::vector<RelationModel> load_relation_models(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("relation-model directory not found: " + dir.string());
  std::vector<RelationModel> models;
  for (std::int32_t r = 0; r < kg.label_capacity(); ++r) {
    const auto path = dir / ("relation_" + std::to_string(r) + ".bin");
    if (std::filesystem::exists(path)) models.push_back(load_relation_model(kg, path));
  }
  return models;
}

}  // namespace kgpath
