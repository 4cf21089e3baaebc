#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "caasr/checkpoint.hpp"
#include "caasr/cli.hpp"
#include "caasr/errors.hpp"
#include "caasr/fsio.hpp"
#include "caasr/ingest.hpp"
#include "caasr/tensor.hpp"

using namespace caasr;

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args, const fs::path& capture = {}) {
  std::string cmd = std::string(CAASR_BIN_PATH) + " " + args;
  if (capture.empty()) {
    cmd += " > /dev/null 2>&1";
  } else {
    cmd += " > " + capture.string() + " 2>&1";
  }
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// synth -> prepare -> build-graph with tiny, fast settings.
void seed_pipeline(const fs::path& dir, const std::string& extra_graph_args = "") {
  REQUIRE(run_cli("synth --out-dir " + dir.string() +
                  " --set synth.n_items=30 --set synth.n_sequences=60"
                  " --set synth.min_len=4 --set synth.max_len=8"
                  " --set synth.n_bundles=4 --set synth.bundle_size=3 --seed 3") == 0);
  REQUIRE(run_cli("prepare --out-dir " + dir.string() + " --set data.input=" +
                  (dir / "synthetic.tsv").string() + " --set data.min_user_events=2 --seed 3") ==
          0);
  REQUIRE(run_cli("build-graph --out-dir " + dir.string() + " --seed 3 " + extra_graph_args) == 0);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string token;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  fields.push_back(token);
  return fields;
}

}  // namespace

TEST_CASE("config keys parse, validate, and reject the unknown") {
  RunConfig cfg;
  set_config_key(cfg, "model.latent_dim", "32");
  CHECK(cfg.latent_dim == 32);
  set_config_key(cfg, " model.dropout ", " 0.5 ");
  CHECK(cfg.dropout == 0.5);
  set_config_key(cfg, "eval.ks", "5, 10,50");
  CHECK(cfg.eval_ks == std::vector<std::size_t>{5, 10, 50});
  set_config_key(cfg, "knn.mean_history", "true");
  CHECK(cfg.knn_mean_history);
  set_config_key(cfg, "data.input", "corpus.tsv");
  CHECK(cfg.data_input == "corpus.tsv");
  set_config_key(cfg, "seed", "123456789012345");
  CHECK(cfg.seed == 123456789012345ULL);

  CHECK_THROWS_AS(set_config_key(cfg, "no.such.key", "1"), UsageError);
  CHECK_THROWS_AS(set_config_key(cfg, "model.latent_dim", "abc"), UsageError);
  CHECK_THROWS_AS(set_config_key(cfg, "model.latent_dim", "-3"), UsageError);
  CHECK_THROWS_AS(set_config_key(cfg, "model.dropout", "lots"), UsageError);
  CHECK_THROWS_AS(set_config_key(cfg, "knn.mean_history", "maybe"), UsageError);
  CHECK_THROWS_AS(set_config_key(cfg, "eval.ks", "10,0"), UsageError);
  CHECK_THROWS_AS(set_config_key(cfg, "model.name", "svd"), UsageError);
}

TEST_CASE("config text handles comments, blanks, and malformed lines") {
  RunConfig cfg = parse_config_text(
      "# experiment settings\n"
      "\n"
      "model.name = gru4rec   # tail comment\n"
      "model.batch_size=25\n");
  CHECK(cfg.model == "gru4rec");
  CHECK(cfg.batch_size == 25);
  CHECK(cfg.latent_dim == 64);  // untouched default

  CHECK_THROWS_WITH_AS(parse_config_text("model.name=caasr\njust words\n"),
                       doctest::Contains("line 2"), UsageError);
}

TEST_CASE("a dumped config reparses to the same dump") {
  RunConfig cfg;
  cfg.data_input = "raw.tsv";
  cfg.min_user_events = 15;
  cfg.split_ratio = 0.75;
  cfg.graph_threshold = 3;
  cfg.sppmi_shift = 2.5;
  cfg.model = "p_graphae";
  cfg.latent_dim = 48;
  cfg.cheb_order = 4;
  cfg.learning_rate = 0.02;
  cfg.dropout = 0.35;
  cfg.eval_ks = {5, 15};
  cfg.exclude_seen = true;
  cfg.synth_markov_weight = 0.25;
  cfg.seed = 99;

  std::string text = dump_config(cfg);
  RunConfig round = parse_config_text(text);
  CHECK(dump_config(round) == text);
  CHECK(round.eval_ks == cfg.eval_ks);
  CHECK(round.model == cfg.model);
  CHECK(round.split_ratio == cfg.split_ratio);
}

TEST_CASE("unset learning rates fall back to per-model defaults") {
  RunConfig cfg;
  for (const char* model : {"caasr", "p_graphae"}) {
    cfg.model = model;
    CHECK(resolve_learning_rate(cfg) == 0.001);
  }
  for (const char* model : {"gru4rec", "bpr", "bpr_knn", "p_cofactor"}) {
    cfg.model = model;
    CHECK(resolve_learning_rate(cfg) == 0.01);
  }
  cfg.learning_rate = 0.05;
  CHECK(resolve_learning_rate(cfg) == 0.05);
}

TEST_CASE("the binary drives the whole experiment pipeline") {
  fs::path dir = fresh_dir("caasr_cli_pipeline");
  fs::path out = dir / "stdout.txt";
  seed_pipeline(dir);

  SUBCASE("prepared artifacts and summary") {
    CHECK(fs::exists(dir / "train.tsv"));
    CHECK(fs::exists(dir / "test.tsv"));
    CHECK(fs::exists(dir / "items.vocab"));
    CHECK(fs::exists(dir / "users.vocab"));
  }

  SUBCASE("graph density line matches its definition") {
    fs::path graph_out = dir / "graph_stdout.txt";
    REQUIRE(run_cli("build-graph --out-dir " + dir.string() + " --seed 3", graph_out) == 0);
    std::size_t nodes = 0, edges = 0;
    std::string density_text;
    for (const std::string& line : read_lines(graph_out)) {
      std::vector<std::string> fields = split_fields(line);
      if (fields.size() != 2) continue;
      if (fields[0] == "nodes") nodes = std::stoull(fields[1]);
      if (fields[0] == "edges") edges = std::stoull(fields[1]);
      if (fields[0] == "density") density_text = fields[1];
    }
    REQUIRE(nodes > 1);
    REQUIRE(!density_text.empty());
    char want[64];
    std::snprintf(want, sizeof(want), "%.6g",
                  2.0 * static_cast<double>(edges) /
                      (static_cast<double>(nodes) * static_cast<double>(nodes - 1)));
    CHECK(density_text == want);
  }

  REQUIRE(run_cli("train --out-dir " + dir.string() +
                  " --set model.name=gru4rec --set model.max_epochs=2"
                  " --set model.latent_dim=8 --set model.batch_size=16 --seed 3") == 0);
  REQUIRE(fs::exists(dir / "gru4rec.ckpt"));

  SUBCASE("loss trace format") {
    std::vector<std::string> lines = read_lines(dir / "gru4rec.loss.tsv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "epoch\tmean_bpr_loss");
    CHECK(split_fields(lines[1])[0] == "1");
    CHECK(split_fields(lines[2])[0] == "2");
    double first = std::stod(split_fields(lines[1])[1]);
    CHECK(std::isfinite(first));
    CHECK(first > 0.0);
  }

  SUBCASE("the dumped effective config reparses identically") {
    std::string stored = read_file(dir / "train.config");
    CHECK(dump_config(parse_config_text(stored)) == stored);
  }

  SUBCASE("evaluation prints one line per metric and cutoff") {
    REQUIRE(run_cli("evaluate --out-dir " + dir.string() + " --set model.name=gru4rec", out) == 0);
    std::size_t metric_lines = 0;
    for (const std::string& line : read_lines(out)) {
      std::vector<std::string> fields = split_fields(line);
      if (fields[0] == "recall" || fields[0] == "mrr") {
        ++metric_lines;
        double value = std::stod(fields[2]);
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
      }
    }
    CHECK(metric_lines == 4);  // recall and mrr at the default cutoffs 10 and 20
    CHECK(fs::exists(dir / "gru4rec.report.tsv"));

    SUBCASE("re-evaluation is byte-identical") {
      std::string first = read_file(dir / "gru4rec.report.tsv");
      REQUIRE(run_cli("evaluate --out-dir " + dir.string() + " --set model.name=gru4rec") == 0);
      CHECK(read_file(dir / "gru4rec.report.tsv") == first);
    }
  }

  SUBCASE("self-comparison is a wash") {
    std::string ckpt = (dir / "gru4rec.ckpt").string();
    REQUIRE(run_cli("compare --out-dir " + dir.string() + " gru4rec:" + ckpt + " gru4rec:" + ckpt,
                    out) == 0);
    std::size_t rows = 0;
    for (const std::string& line : read_lines(out)) {
      std::vector<std::string> fields = split_fields(line);
      if (fields[0] == "recall" || fields[0] == "mrr") {
        ++rows;
        REQUIRE(fields.size() == 7);
        CHECK(fields[2] == fields[3]);   // same value on both sides
        CHECK(fields[4] == "0");         // delta
        CHECK(fields[5] == "+0.00%");    // relative improvement
        CHECK(fields[6] == "−");    // no significance
      }
      if (fields[0] == "ttest_p") CHECK(fields[1] == "1");
    }
    CHECK(rows == 4);
  }
}

TEST_CASE("training reruns are byte-identical and the graph term is inert at order zero") {
  fs::path dir_a = fresh_dir("caasr_cli_rerun_a");
  fs::path dir_b = fresh_dir("caasr_cli_rerun_b");
  std::string train_args =
      " --set model.name=caasr --set model.cheb_order=0 --set model.max_epochs=2"
      " --set model.latent_dim=8 --set model.batch_size=16"
      " --set model.learning_rate=0.01 --seed 3";
  for (const fs::path& dir : {dir_a, dir_b}) {
    seed_pipeline(dir, "--set model.cheb_order=0");
    REQUIRE(run_cli("train --out-dir " + dir.string() + train_args) == 0);
  }
  CHECK(read_file(dir_a / "caasr.ckpt") == read_file(dir_b / "caasr.ckpt"));
  CHECK(read_file(dir_a / "caasr.loss.tsv") == read_file(dir_b / "caasr.loss.tsv"));

  // With no graph terms and the same learning rate, the plain sequential model
  // reproduces the identical loss trajectory.
  REQUIRE(run_cli("train --out-dir " + dir_a.string() +
                  " --set model.name=gru4rec --set model.max_epochs=2"
                  " --set model.latent_dim=8 --set model.batch_size=16"
                  " --set model.learning_rate=0.01 --seed 3") == 0);
  std::vector<std::string> caasr_lines = read_lines(dir_a / "caasr.loss.tsv");
  std::vector<std::string> gru_lines = read_lines(dir_a / "gru4rec.loss.tsv");
  REQUIRE(caasr_lines.size() == gru_lines.size());
  for (std::size_t i = 1; i < caasr_lines.size(); ++i) {
    CHECK(split_fields(caasr_lines[i])[1] == split_fields(gru_lines[i])[1]);
  }
}

TEST_CASE("failures map to the documented exit codes") {
  fs::path dir = fresh_dir("caasr_cli_errors");

  SUBCASE("usage errors exit 1") {
    CHECK(run_cli("train --out-dir " + dir.string() + " --set bogus.key=1") == 1);
    CHECK(run_cli("prepare --out-dir " + dir.string()) == 1);  // data.input unset
    CHECK(run_cli("definitely-not-a-command") == 1);
    CHECK(run_cli("compare --out-dir " + dir.string() + " justonepath otherpath") == 1);
  }

  SUBCASE("data errors exit 2") {
    // Nothing prepared in the directory.
    CHECK(run_cli("train --out-dir " + dir.string() + " --set model.name=gru4rec") == 2);
    CHECK(run_cli("prepare --out-dir " + dir.string() + " --set data.input=" +
                  (dir / "missing.tsv").string()) == 2);
  }

  SUBCASE("checkpoint and model disagreeing exits 2") {
    seed_pipeline(dir);
    REQUIRE(run_cli("train --out-dir " + dir.string() +
                    " --set model.name=bpr --set model.max_epochs=1"
                    " --set model.latent_dim=4 --seed 3") == 0);
    CHECK(run_cli("evaluate --out-dir " + dir.string() + " --set model.name=caasr " +
                  (dir / "bpr.ckpt").string()) == 2);
  }

  SUBCASE("numeric failures exit 3") {
    seed_pipeline(dir);
    std::size_t n_items = read_vocab(dir / "items.vocab").size();
    ParamStore params;
    double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k <= 3; ++k) {
      DenseTensor& t = params.create("theta." + std::to_string(k), {n_items, 4});
      for (double& v : t.data) v = nan;
    }
    for (const char* gate : {"c", "r", "h"}) {
      params.create(std::string("gru.W.") + gate, {4, 4});
      params.create(std::string("gru.U.") + gate, {4, 4});
    }
    fs::path bad = dir / "poisoned.ckpt";
    save_checkpoint(bad, params);
    CHECK(run_cli("evaluate --out-dir " + dir.string() + " --set model.name=caasr " +
                  bad.string()) == 3);
  }
}
