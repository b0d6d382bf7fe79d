#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "kgpath/binary_io.hpp"
#include "kgpath/cli.hpp"
#include "kgpath/embedding_training.hpp"
#include "kgpath/evaluation.hpp"
#include "kgpath/model_io.hpp"
#include "kgpath/parallel.hpp"
#include "kgpath/pbf.hpp"
#include "kgpath/rule_mining.hpp"
#include "kgpath/rules.hpp"
#include "kgpath/run_config.hpp"

namespace kgpath {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Missing, malformed or stale input; exits with kExitUsage.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t file_hash(const fs::path& path) { return binary::fnv1a(read_bytes(path)); }

/// Hash over the names and contents of the regular files of `dir`, in name order.
std::uint64_t directory_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = binary::fnv1a("");
  for (const auto& f : files) {
    h = binary::fnv1a(f.filename().string(), h);
    h = binary::fnv1a(read_bytes(f), h);
  }
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

struct Paths {
  fs::path model, model_meta, train_log, rules, rules_meta, pbf_dir, pbf_meta;

  explicit Paths(const fs::path& out)
      : model(out / "model.bin"),
        model_meta(out / "model.meta.json"),
        train_log(out / "train_log.tsv"),
        rules(out / "rules.tsv"),
        rules_meta(out / "rules.meta.json"),
        pbf_dir(out / "relation_models"),
        pbf_meta(out / "relation_models.meta.json") {}
};

struct Dataset {
  KnowledgeGraph kg;
  std::string name;
  std::string hash;
};

Dataset load_input(const RunConfig& config) {
  if (config.dataset.empty()) throw InputError("no dataset directory given (--dataset)");
  if (!fs::is_directory(config.dataset)) throw InputError("dataset directory not found: " + config.dataset.string());
  Dataset d;
  std::uint64_t h = binary::fnv1a("");
  for (const char* file : {"train.txt", "valid.txt", "test.txt"}) {
    const auto path = config.dataset / file;
    if (!fs::exists(path)) throw InputError("missing dataset file " + path.string());
    h = binary::fnv1a(read_bytes(path), binary::fnv1a(file, h));
  }
  d.hash = hex(h);
  d.kg = augment_inverses(load_dataset_dir(config.dataset));
  fs::path p = config.dataset.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  d.name = p.filename().string();
  return d;
}

fs::path require_out(const RunConfig& config) {
  if (config.out.empty()) throw InputError("no output directory given (--out)");
  fs::create_directories(config.out);
  return config.out;
}

Json make_meta(const std::string& stage, const Dataset& data, const Json& inputs, const Json& settings) {
  Json meta;
  meta["stage"] = stage;
  meta["dataset_hash"] = data.hash;
  meta["inputs"] = inputs;
  meta["config"] = settings;
  std::string canonical = stage + "\n" + data.hash + "\n" + inputs.dump() + "\n" + settings.dump();
  meta["config_hash"] = hex(binary::fnv1a(canonical));
  return meta;
}

void finish_meta(Json& meta, std::uint64_t output_hash, const fs::path& path) {
  meta["output_hash"] = hex(output_hash);
  write_text(path, meta.dump(2) + "\n");
}

/// Reads the sidecar of an upstream artifact and checks that it was built
/// from the current dataset and that the artifact is unchanged since.
Json check_stage(const fs::path& meta_path, const std::string& stage, const std::string& command,
                 std::uint64_t artifact_hash, const Dataset& data) {
  if (!fs::exists(meta_path)) throw InputError("missing " + meta_path.string() + "; run `kgpath " + command + "` first");
  Json meta;
  try {
    meta = Json::parse(read_bytes(meta_path));
  } catch (const Json::exception& e) {
    throw InputError("malformed metadata " + meta_path.string() + ": " + e.what());
  }
  if (meta.value("stage", "") != stage) throw InputError(meta_path.string() + " does not describe a " + stage + " stage");
  if (meta.value("dataset_hash", "") != data.hash) {
    throw InputError("stale " + stage + " output: built from a different dataset; rerun `kgpath " + command + "`");
  }
  if (meta.value("output_hash", "") != hex(artifact_hash)) {
    throw InputError("stale " + stage + " output: artifact changed after its metadata was written; rerun `kgpath " +
                     command + "`");
  }
  return meta;
}

struct Upstream {
  Json model_meta, rules_meta, pbf_meta;
  std::optional<ModelFile> model;
};

Json check_model(const Paths& paths, const Dataset& data, Upstream& up) {
  if (!fs::exists(paths.model)) throw InputError("missing model file " + paths.model.string() + "; run `kgpath train-embeddings` first");
  up.model_meta = check_stage(paths.model_meta, "embeddings", "train-embeddings", file_hash(paths.model), data);
  try {
    up.model = load_model(paths.model);
  } catch (const std::runtime_error& e) {
    throw InputError(std::string("cannot load model: ") + e.what());
  }
  if (up.model->entity_names != data.kg.entities().names() ||
      up.model->relation_names != data.kg.relations().names()) {
    throw InputError("model id maps do not match the dataset");
  }
  if (hex(up.model->fingerprint) != up.model_meta.value("config_hash", "")) {
    throw InputError("model fingerprint does not match its metadata");
  }
  return up.model_meta;
}

void check_rules(const Paths& paths, const Dataset& data, Upstream& up) {
  if (!fs::exists(paths.rules)) throw InputError("missing rules file " + paths.rules.string() + "; run `kgpath mine-rules` first");
  up.rules_meta = check_stage(paths.rules_meta, "rules", "mine-rules", file_hash(paths.rules), data);
  if (up.rules_meta["inputs"].value("model", "") != up.model_meta.value("output_hash", "")) {
    throw InputError("stale rules: mined against a different model; rerun `kgpath mine-rules`");
  }
}

void check_pbf(const Paths& paths, const Dataset& data, Upstream& up) {
  if (!fs::is_directory(paths.pbf_dir)) {
    throw InputError("missing relation-model directory " + paths.pbf_dir.string() + "; run `kgpath train-pbf` first");
  }
  up.pbf_meta = check_stage(paths.pbf_meta, "pbf", "train-pbf", directory_hash(paths.pbf_dir), data);
  if (up.pbf_meta["inputs"].value("rules", "") != up.rules_meta.value("output_hash", "")) {
    throw InputError("stale relation models: trained on a different rules file; rerun `kgpath train-pbf`");
  }
}

int mined_length(const Upstream& up) { return up.rules_meta["config"].value("max_path_len", 0); }

std::vector<RelationPath> select_paths(const std::vector<Rule>& ranked, int max_length, std::size_t limit) {
  std::vector<RelationPath> paths;
  for (const Rule& rule : ranked) {
    if (paths.size() == limit) break;
    if (static_cast<int>(rule.body.size()) <= max_length) paths.push_back(rule.body);
  }
  return paths;
}

std::vector<RelationModel> train_all(const KnowledgeGraph& kg, const std::vector<std::vector<Rule>>& ranked,
                                     const RunConfig& config, const GridPoint& point) {
  PbfTrainConfig pc;
  pc.learning_rate = point.learning_rate;
  pc.l2 = point.l2;
  pc.negatives = config.negatives;
  pc.batch_size = config.pbf_batch_size;
  pc.batches = config.pbf_batches;
  pc.seed = config.seed;
  std::vector<RelationModel> models(static_cast<std::size_t>(kg.label_capacity()));
  parallel_for_dynamic(models.size(), config.workers, [&](std::size_t, std::size_t label) {
    const auto r = RelationId::from_index(static_cast<std::int32_t>(label));
    auto paths = label < ranked.size() ? select_paths(ranked[label], point.max_path_length, config.paths_per_relation)
                                       : std::vector<RelationPath>{};
    models[label] = train_relation_model(kg, r, std::move(paths), pc).model;
  });
  return models;
}

Json sweep_json(const SelectionResult& sel, bool lambda, bool path, bool optimizer) {
  Json arr = Json::array();
  for (const auto& [p, mrr] : sel.sweep) {
    Json e;
    if (lambda) e["lambda"] = p.lambda;
    if (path) e["max_path_length"] = p.max_path_length;
    if (optimizer) {
      e["learning_rate"] = p.learning_rate;
      e["l2"] = p.l2;
    }
    e["validation_mrr"] = mrr;
    arr.push_back(std::move(e));
  }
  return arr;
}

int cmd_train_embeddings(const RunConfig& config, std::ostream& out) {
  const Dataset data = load_input(config);
  const Paths paths(require_out(config));

  TrainConfig tc;
  tc.dim = config.dim;
  tc.learning_rate = config.learning_rate;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.seed = config.seed;
  tc.init_scale = config.init_scale;
  tc.workers = config.workers;
  tc.validate();

  Json settings;
  settings["group"] = std::string(to_string(config.group));
  settings["dim"] = config.dim;
  settings["epochs"] = config.epochs;
  settings["learning_rate"] = config.learning_rate;
  settings["regularization"] = config.regularization;
  settings["batch_size"] = config.batch_size;
  settings["init_scale"] = config.init_scale;
  settings["seed"] = config.seed;
  Json meta = make_meta("embeddings", data, Json::object(), settings);

  // One model per regularization weight; the best validation MRR is kept.
  const AnswerIndex answers(data.kg);
  const auto valid = original_triples(data.kg, Split::valid);
  std::ostringstream log;
  log << "regularization\tepoch\tloss\n";
  std::optional<AkglgModel> best;
  double best_mrr = 0.0;
  const std::vector<double> one{1.0};
  const std::vector<int> unused{0};
  const auto grid = expand_grid(one, unused, one, config.regularization);
  const auto selection = select_hyperparameters(grid, [&](const GridPoint& point) {
    tc.regularization = point.l2;
    const std::string reg = format_double(point.l2);
    auto result = train_embeddings(data.kg, config.group, tc, [&](int epoch, double loss) {
      log << reg << '\t' << epoch << '\t' << format_double(loss) << '\n';
      out << "regularization " << reg << " epoch " << epoch << " loss " << format_double(loss) << '\n';
    });
    const EmbeddingQueryScorer embedding(result.model);
    const double mrr = evaluate(EmbeddingScorer(embedding), valid, answers, config.workers).mrr;
    out << "regularization " << reg << ": validation MRR " << format_double(mrr) << '\n';
    // grid points arrive in ascending order, so strict improvement keeps ties on the smaller weight
    if (!best || mrr > best_mrr) {
      best = std::move(result.model);
      best_mrr = mrr;
    }
    return mrr;
  });
  meta["selected"] = {{"regularization", selection.best.l2}, {"validation_mrr", selection.best_mrr}};
  meta["sweep"] = Json::array();
  for (const auto& [p, mrr] : selection.sweep) meta["sweep"].push_back({{"regularization", p.l2}, {"validation_mrr", mrr}});
  write_text(paths.train_log, log.str());

  ModelFile file{std::move(*best), data.kg.entities().names(), data.kg.relations().names(),
                 std::stoull(meta["config_hash"].get<std::string>(), nullptr, 16)};
  save_model(file, paths.model);
  finish_meta(meta, file_hash(paths.model), paths.model_meta);
  out << "selected regularization " << format_double(selection.best.l2) << "\n";
  out << "wrote " << paths.model.string() << '\n';
  return kExitOk;
}

int cmd_mine_rules(const RunConfig& config, std::ostream& out) {
  const Dataset data = load_input(config);
  const Paths paths(require_out(config));
  Upstream up;
  check_model(paths, data, up);

  MiningConfig mc;
  mc.max_body_length = config.max_path_len;
  mc.expansion_cap = config.expansion_cap;
  mc.workers = config.workers;
  const MiningResult mined = mine_candidate_rules(data.kg, mc);
  const std::size_t candidates = mined.rules.size();
  const auto ranked = select_top_rules(mined.rules, up.model->model, config.rules_per_relation, config.workers);

  Json inputs;
  inputs["model"] = up.model_meta["output_hash"];
  Json settings;
  settings["max_path_len"] = config.max_path_len;
  settings["rules_per_relation"] = config.rules_per_relation;
  settings["expansion_cap"] = config.expansion_cap;
  Json meta = make_meta("rules", data, inputs, settings);
  meta["stats"] = {{"candidate_rules", candidates},
                   {"entity_cycles", mined.stats.entity_cycles},
                   {"multi_label_edges", mined.stats.multi_label_edges},
                   {"skipped_cycles", mined.stats.skipped_cycles}};

  write_rules_tsv(data.kg, ranked, paths.rules);
  finish_meta(meta, file_hash(paths.rules), paths.rules_meta);
  out << "mined " << candidates << " candidate rules (" << mined.stats.skipped_cycles << " cycles over the expansion cap)\n";
  out << "wrote " << paths.rules.string() << '\n';
  return kExitOk;
}

int cmd_train_pbf(const RunConfig& config, std::ostream& out) {
  const Dataset data = load_input(config);
  const Paths paths(require_out(config));
  Upstream up;
  check_model(paths, data, up);
  check_rules(paths, data, up);
  const auto ranked = read_rules_tsv(data.kg, paths.rules);

  const auto lengths = config.effective_path_lengths(mined_length(up));
  const double zero = 0.0;
  const auto grid = expand_grid(std::span(&zero, 1), lengths, config.pbf_learning_rates, config.pbf_l2s);
  const EmbeddingQueryScorer embedding(up.model->model);
  const AnswerIndex answers(data.kg);
  const auto valid = original_triples(data.kg, Split::valid);

  const auto selection = select_hyperparameters(grid, [&](const GridPoint& point) {
    const auto models = train_all(data.kg, ranked, config, point);
    const PbfScorer scorer(data.kg, embedding, models, 0.0);
    const double mrr = evaluate(scorer, valid, answers, config.workers).mrr;
    out << "path length " << point.max_path_length << " lr " << format_double(point.learning_rate) << " l2 "
        << format_double(point.l2) << ": validation MRR " << format_double(mrr) << '\n';
    return mrr;
  });
  const auto models = train_all(data.kg, ranked, config, selection.best);

  Json inputs;
  inputs["model"] = up.model_meta["output_hash"];
  inputs["rules"] = up.rules_meta["output_hash"];
  Json settings;
  settings["path_lengths"] = lengths;
  settings["paths_per_relation"] = config.paths_per_relation;
  settings["pbf_learning_rates"] = config.pbf_learning_rates;
  settings["pbf_l2s"] = config.pbf_l2s;
  settings["negatives"] = config.negatives;
  settings["pbf_batch_size"] = config.pbf_batch_size;
  settings["pbf_batches"] = config.pbf_batches;
  settings["seed"] = config.seed;
  Json meta = make_meta("pbf", data, inputs, settings);
  meta["selected"] = {{"max_path_length", selection.best.max_path_length},
                      {"learning_rate", selection.best.learning_rate},
                      {"l2", selection.best.l2},
                      {"validation_mrr", selection.best_mrr}};
  meta["sweep"] = sweep_json(selection, false, true, true);
  std::size_t starved = 0;
  for (const auto& m : models) starved += m.feature_starved;
  meta["feature_starved_relations"] = starved;

  fs::remove_all(paths.pbf_dir);
  save_relation_models(data.kg, models, paths.pbf_dir);
  finish_meta(meta, directory_hash(paths.pbf_dir), paths.pbf_meta);
  out << "selected path length " << selection.best.max_path_length << " lr "
      << format_double(selection.best.learning_rate) << " l2 " << format_double(selection.best.l2) << "; "
      << starved << " feature-starved relation labels\n";
  out << "wrote " << paths.pbf_dir.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
  const Dataset data = load_input(config);
  const Paths paths(require_out(config));
  Upstream up;
  check_model(paths, data, up);
  const EmbeddingQueryScorer embedding(up.model->model);
  const AnswerIndex answers(data.kg);
  const Split split = config.eval_split == "valid" ? Split::valid : Split::test;
  const auto triples = original_triples(data.kg, split);
  const auto valid = original_triples(data.kg, Split::valid);

  Json settings;
  settings["split"] = config.eval_split;
  settings["group"] = up.model_meta["config"]["group"];
  settings["dim"] = up.model_meta["config"]["dim"];
  settings["model_hash"] = up.model_meta["output_hash"];

  RankingReport report;
  if (config.scorer == "embedding") {
    const EmbeddingScorer scorer(embedding);
    report = evaluate(scorer, triples, answers, config.workers);
  } else if (config.scorer == "ree") {
    check_rules(paths, data, up);
    const auto ranked = read_rules_tsv(data.kg, paths.rules);
    const std::vector<double> none{1.0};
    const std::vector<double> unused{0.0};
    const auto grid = expand_grid(none, config.effective_path_lengths(mined_length(up)), unused, unused);
    const auto selection = select_hyperparameters(grid, [&](const GridPoint& point) {
      return evaluate(ReeScorer(data.kg, ranked, point.max_path_length), valid, answers, config.workers).mrr;
    });
    report = evaluate(ReeScorer(data.kg, ranked, selection.best.max_path_length), triples, answers, config.workers);
    settings["rules_hash"] = up.rules_meta["output_hash"];
    settings["rules_per_relation"] = up.rules_meta["config"]["rules_per_relation"];
    settings["max_path_length"] = selection.best.max_path_length;
    settings["validation_mrr"] = selection.best_mrr;
    settings["sweep"] = sweep_json(selection, false, true, false);
  } else {
    check_rules(paths, data, up);
    check_pbf(paths, data, up);
    const auto models = load_relation_models(data.kg, paths.pbf_dir);
    const std::vector<int> one{0};
    const std::vector<double> unused{0.0};
    const auto grid = expand_grid(config.lambdas, one, unused, unused);
    const auto selection = select_hyperparameters(grid, [&](const GridPoint& point) {
      return evaluate(PbfScorer(data.kg, embedding, models, point.lambda), valid, answers, config.workers).mrr;
    });
    report = evaluate(PbfScorer(data.kg, embedding, models, selection.best.lambda), triples, answers, config.workers);
    settings["rules_hash"] = up.rules_meta["output_hash"];
    settings["relation_models_hash"] = up.pbf_meta["output_hash"];
    settings["max_path_length"] = up.pbf_meta["selected"]["max_path_length"];
    settings["pbf_learning_rate"] = up.pbf_meta["selected"]["learning_rate"];
    settings["pbf_l2"] = up.pbf_meta["selected"]["l2"];
    settings["lambda"] = selection.best.lambda;
    settings["validation_mrr"] = selection.best_mrr;
    settings["sweep"] = sweep_json(selection, true, false, false);
  }

  MetricsDocument doc{data.name, config.scorer, settings.dump(), config.seed};
  const fs::path metrics = config.out / ("metrics_" + config.scorer + ".json");
  write_metrics_json(metrics, report, doc);
  if (config.per_query) write_query_ranks_tsv(config.out / ("queries_" + config.scorer + ".tsv"), data.kg, report);
  out << config.scorer << " on " << config.eval_split << ": MRR " << format_double(report.mrr) << " HITS@1 "
      << format_double(report.hits1) << " HITS@3 " << format_double(report.hits3) << " HITS@10 "
      << format_double(report.hits10) << " (" << report.n_queries << " queries)\n";
  out << "wrote " << metrics.string() << '\n';
  return kExitOk;
}

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> values;  // key, value in flag order
  bool per_query = false;
};

void add_value_flag(CLI::App* sub, Flags& flags, const std::string& flag, const std::string& key,
                    const std::string& help) {
  sub->add_option_function<std::string>(
      flag, [&flags, key](const std::string& v) { flags.values.emplace_back(key, v); }, help);
}

void add_common(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config_file, "flat key = value config file");
  add_value_flag(sub, flags, "--dataset", "dataset", "directory with train.txt, valid.txt, test.txt");
  add_value_flag(sub, flags, "--out", "out", "output directory shared by all stages");
  add_value_flag(sub, flags, "--seed", "seed", "random seed");
  add_value_flag(sub, flags, "--workers", "workers", "worker threads");
  sub->add_option("--set", flags.sets, "override any config key (key=value)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph link prediction with Lie-group embeddings, embedding-scored rules and path features",
               "kgpath"};
  app.require_subcommand(1);
  Flags flags;

  auto* train = app.add_subcommand("train-embeddings", "train an AKGLG model");
  add_common(train, flags);
  add_value_flag(train, flags, "--group", "group", "sign, circle or line");
  add_value_flag(train, flags, "--dim", "dim", "embedding dimension");

  auto* mine = app.add_subcommand("mine-rules", "mine cycle rules and rank them by embedding confidence");
  add_common(mine, flags);
  add_value_flag(mine, flags, "--max-path-len", "max_path_len", "maximum rule body length");

  auto* pbf = app.add_subcommand("train-pbf", "train per-relation softmax-regression models");
  add_common(pbf, flags);
  add_value_flag(pbf, flags, "--max-path-len", "max_path_len", "upper bound on the path-length grid");

  auto* eval = app.add_subcommand("evaluate", "filtered link-prediction metrics");
  add_common(eval, flags);
  add_value_flag(eval, flags, "--max-path-len", "max_path_len", "upper bound on the path-length grid");
  add_value_flag(eval, flags, "--lambda", "lambdas", "combination weight (pbf scorer)");
  add_value_flag(eval, flags, "--scorer", "scorer", "embedding, ree or pbf");
  eval->add_flag("--per-query", flags.per_query, "also write per-query ranks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config;
    if (!flags.config_file.empty()) apply_config_file(config, flags.config_file);
    for (const auto& s : flags.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flags.values) config.set(key, value);
    if (flags.per_query) config.per_query = true;

    if (train->parsed()) return cmd_train_embeddings(config, out);
    if (mine->parsed()) return cmd_mine_rules(config, out);
    if (pbf->parsed()) return cmd_train_pbf(config, out);
    return cmd_evaluate(config, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace kgpath
