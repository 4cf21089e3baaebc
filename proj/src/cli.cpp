#include "caasr/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include "caasr/baselines.hpp"
#include "caasr/checkpoint.hpp"
#include "caasr/errors.hpp"
#include "caasr/eval.hpp"
#include "caasr/fsio.hpp"
#include "caasr/graph.hpp"
#include "caasr/model.hpp"
#include "caasr/rng.hpp"
#include "caasr/synth.hpp"

namespace caasr {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE ||
      value.front() == '-') {
    throw UsageError("config key " + key + " expects a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE ||
      !std::isfinite(v)) {
    throw UsageError("config key " + key + " expects a finite number, got '" + value + "'");
  }
  return v;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key " + key + " expects true or false, got '" + value + "'");
}

std::vector<std::size_t> parse_cutoffs(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::string token;
  for (std::size_t pos = 0; pos <= value.size(); ++pos) {
    if (pos == value.size() || value[pos] == ',') {
      std::size_t k = parse_size(key, trim(token));
      if (k == 0) throw UsageError("config key " + key + " expects cutoffs of at least 1");
      out.push_back(k);
      token.clear();
    } else {
      token += value[pos];
    }
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool known_model(const std::string& model) {
  return model == "caasr" || model == "gru4rec" || model == "bpr" || model == "bpr_knn" ||
         model == "p_cofactor" || model == "p_graphae";
}

ModelConfig session_model_config(const RunConfig& config) {
  ModelConfig mc;
  mc.latent_dim = config.latent_dim;
  mc.cheb_order = config.cheb_order;
  mc.batch_size = config.batch_size;
  mc.max_epochs = config.max_epochs;
  mc.learning_rate = resolve_learning_rate(config);
  mc.dropout = config.dropout;
  mc.l2_lambda = config.l2_lambda;
  mc.neg_per_pos = config.neg_per_pos;
  return mc;
}

SequenceDataset load_split(const std::filesystem::path& out_dir, const std::string& name) {
  std::vector<std::string> items = read_vocab(out_dir / "items.vocab");
  return read_dataset(out_dir / (name + ".tsv"), items.size());
}

void write_effective_config(const RunConfig& config, const std::filesystem::path& out_dir,
                            const std::string& command) {
  write_file_atomic(out_dir / (command + ".config"), dump_config(config));
}

std::unique_ptr<Predictor> build_predictor(const std::string& model, const ParamStore& params,
                                           const RunConfig& config,
                                           const std::filesystem::path& out_dir) {
  auto need = [&](const std::string& name) {
    if (!params.has(name)) {
      throw DataError("checkpoint does not fit model " + model + ": missing tensor " + name);
    }
  };
  if (model == "caasr") {
    need("theta.0");
    need("gru.W.c");
    ChebyshevBasis basis = read_basis(out_dir / "basis", config.cheb_order);
    return std::make_unique<GruPredictor>(compute_embeddings(&basis, params), params, "gru.");
  }
  if (model == "gru4rec") {
    need("theta.0");
    need("gru.W.c");
    return std::make_unique<GruPredictor>(params.value("theta.0"), params, "gru.");
  }
  if (model == "p_cofactor") {
    need("cof.z_seq");
    need("cof.gru.W.c");
    return std::make_unique<GruPredictor>(params.value("cof.z_seq"), params, "cof.gru.");
  }
  if (model == "p_graphae") {
    need("gae.z_seq");
    need("gae.gru.W.c");
    return std::make_unique<GruPredictor>(params.value("gae.z_seq"), params, "gae.gru.");
  }
  if (model == "bpr") {
    need("bpr.item_factors");
    return std::make_unique<BprPredictor>(params.value("bpr.item_factors"));
  }
  if (model == "bpr_knn") {
    need("bpr.item_factors");
    return std::make_unique<BprKnnPredictor>(params.value("bpr.item_factors"),
                                             config.knn_mean_history);
  }
  throw UsageError("unknown model '" + model +
                   "' (expected caasr, gru4rec, bpr, bpr_knn, p_cofactor, or p_graphae)");
}

}  // namespace

void set_config_key(RunConfig& config, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::string value = trim(raw_value);
  if (key == "data.input") {
    config.data_input = value;
  } else if (key == "data.min_user_events") {
    config.min_user_events = parse_size(key, value);
  } else if (key == "data.min_item_events") {
    config.min_item_events = parse_size(key, value);
  } else if (key == "data.max_user_events") {
    config.max_user_events = parse_size(key, value);
  } else if (key == "data.min_unique_items") {
    config.min_unique_items = parse_size(key, value);
  } else if (key == "data.split_ratio") {
    config.split_ratio = parse_real(key, value);
  } else if (key == "graph.threshold") {
    config.graph_threshold = parse_size(key, value);
  } else if (key == "graph.sppmi_shift") {
    config.sppmi_shift = parse_real(key, value);
  } else if (key == "model.name") {
    if (!known_model(value)) throw UsageError("unknown model '" + value + "'");
    config.model = value;
  } else if (key == "model.latent_dim") {
    config.latent_dim = parse_size(key, value);
  } else if (key == "model.cheb_order") {
    config.cheb_order = parse_size(key, value);
  } else if (key == "model.batch_size") {
    config.batch_size = parse_size(key, value);
  } else if (key == "model.max_epochs") {
    config.max_epochs = parse_size(key, value);
  } else if (key == "model.learning_rate") {
    config.learning_rate = parse_real(key, value);
  } else if (key == "model.dropout") {
    config.dropout = parse_real(key, value);
  } else if (key == "model.l2_lambda") {
    config.l2_lambda = parse_real(key, value);
  } else if (key == "model.neg_per_pos") {
    config.neg_per_pos = parse_size(key, value);
  } else if (key == "bpr.reg") {
    config.bpr_reg = parse_real(key, value);
  } else if (key == "cofactor.weight") {
    config.factorization_weight = parse_real(key, value);
  } else if (key == "graphae.bce_weight") {
    config.bce_weight = parse_real(key, value);
  } else if (key == "graphae.embed_reg_weight") {
    config.embed_reg_weight = parse_real(key, value);
  } else if (key == "graphae.neg_multiplier") {
    config.link_neg_multiplier = parse_size(key, value);
  } else if (key == "knn.mean_history") {
    config.knn_mean_history = parse_flag(key, value);
  } else if (key == "eval.ks") {
    config.eval_ks = parse_cutoffs(key, value);
  } else if (key == "eval.exclude_seen") {
    config.exclude_seen = parse_flag(key, value);
  } else if (key == "synth.n_items") {
    config.synth_n_items = parse_size(key, value);
  } else if (key == "synth.n_sequences") {
    config.synth_n_sequences = parse_size(key, value);
  } else if (key == "synth.min_len") {
    config.synth_min_len = parse_size(key, value);
  } else if (key == "synth.max_len") {
    config.synth_max_len = parse_size(key, value);
  } else if (key == "synth.n_bundles") {
    config.synth_n_bundles = parse_size(key, value);
  } else if (key == "synth.bundle_size") {
    config.synth_bundle_size = parse_size(key, value);
  } else if (key == "synth.markov_weight") {
    config.synth_markov_weight = parse_real(key, value);
  } else if (key == "seed") {
    config.seed = parse_u64(key, value);
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_key(config, line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

std::string dump_config(const RunConfig& c) {
  std::string out;
  auto put = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  put("data.input", c.data_input);
  put("data.min_user_events", std::to_string(c.min_user_events));
  put("data.min_item_events", std::to_string(c.min_item_events));
  put("data.max_user_events", std::to_string(c.max_user_events));
  put("data.min_unique_items", std::to_string(c.min_unique_items));
  put("data.split_ratio", format_real(c.split_ratio));
  put("graph.threshold", std::to_string(c.graph_threshold));
  put("graph.sppmi_shift", format_real(c.sppmi_shift));
  put("model.name", c.model);
  put("model.latent_dim", std::to_string(c.latent_dim));
  put("model.cheb_order", std::to_string(c.cheb_order));
  put("model.batch_size", std::to_string(c.batch_size));
  put("model.max_epochs", std::to_string(c.max_epochs));
  put("model.learning_rate", format_real(c.learning_rate));
  put("model.dropout", format_real(c.dropout));
  put("model.l2_lambda", format_real(c.l2_lambda));
  put("model.neg_per_pos", std::to_string(c.neg_per_pos));
  put("bpr.reg", format_real(c.bpr_reg));
  put("cofactor.weight", format_real(c.factorization_weight));
  put("graphae.bce_weight", format_real(c.bce_weight));
  put("graphae.embed_reg_weight", format_real(c.embed_reg_weight));
  put("graphae.neg_multiplier", std::to_string(c.link_neg_multiplier));
  put("knn.mean_history", c.knn_mean_history ? "true" : "false");
  std::string ks;
  for (std::size_t k : c.eval_ks) {
    if (!ks.empty()) ks += ',';
    ks += std::to_string(k);
  }
  put("eval.ks", ks);
  put("eval.exclude_seen", c.exclude_seen ? "true" : "false");
  put("synth.n_items", std::to_string(c.synth_n_items));
  put("synth.n_sequences", std::to_string(c.synth_n_sequences));
  put("synth.min_len", std::to_string(c.synth_min_len));
  put("synth.max_len", std::to_string(c.synth_max_len));
  put("synth.n_bundles", std::to_string(c.synth_n_bundles));
  put("synth.bundle_size", std::to_string(c.synth_bundle_size));
  put("synth.markov_weight", format_real(c.synth_markov_weight));
  put("seed", std::to_string(c.seed));
  return out;
}

double resolve_learning_rate(const RunConfig& config) {
  if (config.learning_rate > 0.0) return config.learning_rate;
  if (config.model == "caasr" || config.model == "p_graphae") return 0.001;
  return 0.01;
}

void cmd_synth(const RunConfig& config, const std::filesystem::path& out_dir) {
  SynthConfig sc;
  sc.n_items = config.synth_n_items;
  sc.n_sequences = config.synth_n_sequences;
  sc.min_seq_len = config.synth_min_len;
  sc.max_seq_len = config.synth_max_len;
  sc.n_bundles = config.synth_n_bundles;
  sc.bundle_size = config.synth_bundle_size;
  sc.markov_weight = config.synth_markov_weight;
  sc.seed = config.seed;
  SequenceDataset dataset = generate_synthetic(sc);
  std::filesystem::path path = out_dir / "synthetic.tsv";
  write_interactions_tsv(path, dataset);
  write_effective_config(config, out_dir, "synth");
  std::size_t interactions = 0;
  for (const Sequence& seq : dataset.sequences) interactions += seq.items.size();
  std::printf("wrote %s\n", path.string().c_str());
  std::printf("sequences\t%zu\n", dataset.sequences.size());
  std::printf("items\t%zu\n", dataset.n_items);
  std::printf("interactions\t%zu\n", interactions);
}

void cmd_prepare(const RunConfig& config, const std::filesystem::path& out_dir) {
  if (config.data_input.empty()) {
    throw UsageError("prepare needs data.input (path to the raw interaction TSV)");
  }
  InteractionLog log = load_interactions(config.data_input);
  log = filter_dataset(log, config.min_user_events, config.min_item_events,
                       config.max_user_events, config.min_unique_items);
  SequenceDataset all = build_sequences(log);
  SplitResult split = split_train_test(all, config.split_ratio, derive_seed(config.seed, "split"));
  write_dataset(out_dir / "train.tsv", split.train);
  write_dataset(out_dir / "test.tsv", split.test);
  write_vocab(out_dir / "items.vocab", log.item_vocab);
  write_vocab(out_dir / "users.vocab", log.user_vocab);
  write_effective_config(config, out_dir, "prepare");

  std::size_t users = log.user_vocab.size();
  std::size_t items = log.item_vocab.size();
  std::size_t events = log.events.size();
  double sparsity =
      100.0 * (1.0 - static_cast<double>(events) /
                         (static_cast<double>(users) * static_cast<double>(items)));
  std::printf("users\t%zu\n", users);
  std::printf("items\t%zu\n", items);
  std::printf("interactions\t%zu\n", events);
  std::printf("sparsity\t%.2f%%\n", sparsity);
  std::printf("train_sequences\t%zu\n", split.train.sequences.size());
  std::printf("test_sequences\t%zu\n", split.test.sequences.size());
}

void cmd_build_graph(const RunConfig& config, const std::filesystem::path& out_dir) {
  SequenceDataset train = load_split(out_dir, "train");
  CooccurrenceCounts counts = count_cooccurrence(train);
  SparseMatrix adjacency = build_adjacency(counts, config.graph_threshold);
  write_graph(out_dir / "graph.tsv", adjacency);
  ChebyshevBasis basis = chebyshev_from_adjacency(adjacency, config.cheb_order);
  write_basis(out_dir / "basis", basis);
  SparseMatrix sppmi = build_sppmi(counts, config.sppmi_shift);
  write_sppmi(out_dir / "sppmi.tsv", sppmi);
  write_effective_config(config, out_dir, "build-graph");

  std::size_t n = adjacency.dim();
  std::size_t edges = adjacency.nnz() / 2;
  double density = n > 1 ? static_cast<double>(adjacency.nnz()) /
                               (static_cast<double>(n) * static_cast<double>(n - 1))
                         : 0.0;
  std::printf("nodes\t%zu\n", n);
  std::printf("edges\t%zu\n", edges);
  std::printf("density\t%.6g\n", density);
  std::printf("associations\t%zu\n", sppmi.nnz());
}

void cmd_train(const RunConfig& config, const std::filesystem::path& out_dir) {
  if (!known_model(config.model)) {
    throw UsageError("unknown model '" + config.model +
                     "' (expected caasr, gru4rec, bpr, bpr_knn, p_cofactor, or p_graphae)");
  }
  SequenceDataset train = load_split(out_dir, "train");
  ParamStore params;
  TrainResult result;
  ModelConfig mc = session_model_config(config);
  if (config.model == "caasr") {
    ChebyshevBasis basis = read_basis(out_dir / "basis", config.cheb_order);
    result = train_caasr(train, basis, mc, config.seed, params);
  } else if (config.model == "gru4rec") {
    result = train_gru4rec(train, mc, config.seed, params);
  } else if (config.model == "bpr" || config.model == "bpr_knn") {
    BprConfig bc;
    bc.latent_dim = config.latent_dim;
    bc.batch_size = config.batch_size;
    bc.max_epochs = config.max_epochs;
    bc.learning_rate = resolve_learning_rate(config);
    bc.reg = config.bpr_reg;
    result = bpr_train(train, bc, config.seed, params);
  } else if (config.model == "p_cofactor") {
    SparseMatrix sppmi = read_sppmi(out_dir / "sppmi.tsv", train.n_items);
    CofactorConfig cc;
    cc.model = mc;
    cc.factorization_weight = config.factorization_weight;
    result = cofactor_train(train, sppmi, cc, config.seed, params);
  } else {
    SparseMatrix adjacency = read_graph(out_dir / "graph.tsv");
    ChebyshevBasis basis = read_basis(out_dir / "basis", config.cheb_order);
    GraphAeConfig gc;
    gc.model = mc;
    gc.bce_weight = config.bce_weight;
    gc.embed_reg_weight = config.embed_reg_weight;
    gc.neg_multiplier = config.link_neg_multiplier;
    result = graphae_train(train, basis, adjacency, gc, config.seed, params);
  }

  std::filesystem::path ckpt = out_dir / (config.model + ".ckpt");
  save_checkpoint(ckpt, params);
  std::string trace = "epoch\tmean_bpr_loss\n";
  for (std::size_t i = 0; i < result.epoch_mean_loss.size(); ++i) {
    trace += std::to_string(i + 1);
    trace += '\t';
    trace += format_real(result.epoch_mean_loss[i]);
    trace += '\n';
  }
  std::filesystem::path trace_path = out_dir / (config.model + ".loss.tsv");
  write_file_atomic(trace_path, trace);
  write_effective_config(config, out_dir, "train");

  for (std::size_t i = 0; i < result.epoch_mean_loss.size(); ++i) {
    std::printf("epoch\t%zu\tloss\t%.6f\n", i + 1, result.epoch_mean_loss[i]);
  }
  std::printf("wrote %s\n", ckpt.string().c_str());
  std::printf("wrote %s\n", trace_path.string().c_str());
}

void cmd_evaluate(const RunConfig& config, const std::filesystem::path& out_dir,
                  const std::string& checkpoint_path) {
  SequenceDataset test = load_split(out_dir, "test");
  std::filesystem::path ckpt = checkpoint_path.empty()
                                   ? out_dir / (config.model + ".ckpt")
                                   : std::filesystem::path(checkpoint_path);
  ParamStore params;
  load_checkpoint(ckpt, params);
  std::unique_ptr<Predictor> predictor = build_predictor(config.model, params, config, out_dir);
  EvalReport report = evaluate(*predictor, test, config.eval_ks, config.exclude_seen);
  std::filesystem::path report_path = out_dir / (config.model + ".report.tsv");
  write_report(report_path, report);
  write_effective_config(config, out_dir, "evaluate");

  for (const auto& [k, value] : report.recall) std::printf("recall\t%zu\t%.17g\n", k, value);
  for (const auto& [k, value] : report.mrr) std::printf("mrr\t%zu\t%.17g\n", k, value);
  std::printf("events\t%zu\n", report.n_events);
  std::printf("wrote %s\n", report_path.string().c_str());
}

void cmd_compare(const RunConfig& config, const std::filesystem::path& out_dir,
                 const std::string& side_a, const std::string& side_b) {
  auto parse_side = [](const std::string& side) {
    std::size_t colon = side.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= side.size()) {
      throw UsageError("compare operands use the form model:checkpoint, got '" + side + "'");
    }
    return std::pair<std::string, std::string>(side.substr(0, colon), side.substr(colon + 1));
  };
  auto [model_a, ckpt_a] = parse_side(side_a);
  auto [model_b, ckpt_b] = parse_side(side_b);

  SequenceDataset test = load_split(out_dir, "test");
  auto run_side = [&](const std::string& model, const std::string& ckpt) {
    ParamStore params;
    load_checkpoint(ckpt, params);
    std::unique_ptr<Predictor> predictor = build_predictor(model, params, config, out_dir);
    return evaluate(*predictor, test, config.eval_ks, config.exclude_seen);
  };
  EvalReport report_a = run_side(model_a, ckpt_a);
  EvalReport report_b = run_side(model_b, ckpt_b);

  if (report_a.n_events != report_b.n_events) {
    throw DataError("comparison sides scored different event counts");
  }
  for (std::size_t i = 0; i < report_a.n_events; ++i) {
    const RankEvent& ea = report_a.per_event[i];
    const RankEvent& eb = report_b.per_event[i];
    if (ea.sequence_id != eb.sequence_id || ea.step != eb.step ||
        ea.target_item != eb.target_item) {
      throw DataError("comparison sides scored different event sets");
    }
  }

  double p = paired_ttest(reciprocal_ranks(report_b.per_event),
                          reciprocal_ranks(report_a.per_event));
  std::string marker = significance_marker(p);
  auto print_metric = [&](const char* name, std::size_t k, double a, double b) {
    double delta = b - a;
    char relative[32];
    if (a != 0.0) {
      std::snprintf(relative, sizeof(relative), "%+.2f%%", 100.0 * delta / a);
    } else {
      std::snprintf(relative, sizeof(relative), "n/a");
    }
    std::printf("%s\t%zu\t%.17g\t%.17g\t%.17g\t%s\t%s\n", name, k, a, b, delta, relative,
                marker.c_str());
  };
  for (std::size_t k : config.eval_ks) {
    print_metric("recall", k, report_a.recall.at(k), report_b.recall.at(k));
  }
  for (std::size_t k : config.eval_ks) {
    print_metric("mrr", k, report_a.mrr.at(k), report_b.mrr.at(k));
  }
  std::printf("ttest_p\t%.17g\n", p);
  write_effective_config(config, out_dir, "compare");
}

}  // namespace caasr
