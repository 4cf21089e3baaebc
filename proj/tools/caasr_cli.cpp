#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "caasr/cli.hpp"
#include "caasr/errors.hpp"

namespace {

std::uint64_t parse_seed(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE ||
      text.front() == '-') {
    throw caasr::UsageError("--seed expects a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential recommendation experiments over item co-occurrence graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  std::string seed_text;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--set", overrides, "override one config key, as key=value (repeatable)")
        ->allow_extra_args(false);
    sub->add_option("--out-dir", out_dir, "directory for all artifacts (default .)");
    sub->add_option("--seed", seed_text, "root seed for every random stream");
  };

  CLI::App* cmd_prepare =
      app.add_subcommand("prepare", "load, filter, sequence, and split raw interactions");
  CLI::App* cmd_graph = app.add_subcommand(
      "build-graph", "build the co-occurrence graph, spectral basis, and association matrix");
  CLI::App* cmd_train = app.add_subcommand("train", "train the configured model");
  CLI::App* cmd_evaluate =
      app.add_subcommand("evaluate", "rank every test event and report recall and mrr");
  std::string checkpoint;
  cmd_evaluate->add_option("checkpoint", checkpoint,
                           "checkpoint to score (default <out-dir>/<model>.ckpt)");
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "paired significance comparison of two trained models");
  std::string side_a, side_b;
  cmd_compare->add_option("baseline", side_a, "model:checkpoint")->required();
  cmd_compare->add_option("candidate", side_b, "model:checkpoint")->required();
  CLI::App* cmd_synth =
      app.add_subcommand("synth", "generate a corpus with planted sequential and bundle structure");

  for (CLI::App* sub : {cmd_prepare, cmd_graph, cmd_train, cmd_evaluate, cmd_compare, cmd_synth}) {
    add_common(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    caasr::RunConfig config;
    if (!config_path.empty()) config = caasr::load_config_file(config_path);
    for (const std::string& kv : overrides) {
      std::size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw caasr::UsageError("--set expects key=value, got '" + kv + "'");
      }
      caasr::set_config_key(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed_text.empty()) config.seed = parse_seed(seed_text);

    std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    if (cmd_prepare->parsed()) {
      caasr::cmd_prepare(config, out);
    } else if (cmd_graph->parsed()) {
      caasr::cmd_build_graph(config, out);
    } else if (cmd_train->parsed()) {
      caasr::cmd_train(config, out);
    } else if (cmd_evaluate->parsed()) {
      caasr::cmd_evaluate(config, out, checkpoint);
    } else if (cmd_compare->parsed()) {
      caasr::cmd_compare(config, out, side_a, side_b);
    } else if (cmd_synth->parsed()) {
      caasr::cmd_synth(config, out);
    }
    return 0;
  } catch (const caasr::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const caasr::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const caasr::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
