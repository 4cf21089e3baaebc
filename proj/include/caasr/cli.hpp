#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace caasr {

// Flat experiment configuration. Every field has a default so a run needs no
// config file at all; the file format is one `key=value` per line with `#`
// comments. Unknown keys are rejected.
struct RunConfig {
  // raw interaction data and filtering
  std::string data_input;
  std::size_t min_user_events = 5;
  std::size_t min_item_events = 5;
  std::size_t max_user_events = 0;  // 0 = uncapped
  std::size_t min_unique_items = 2;
  double split_ratio = 0.8;

  // item graph construction
  std::size_t graph_threshold = 2;
  double sppmi_shift = 1.0;

  // model selection and shared hyperparameters
  std::string model = "caasr";
  std::size_t latent_dim = 64;
  std::size_t cheb_order = 3;
  std::size_t batch_size = 50;
  std::size_t max_epochs = 30;
  double learning_rate = 0.0;  // 0 = model-specific default
  double dropout = 0.2;
  double l2_lambda = 0.0;
  std::size_t neg_per_pos = 0;  // 0 = every in-batch negative

  // baseline-specific knobs
  double bpr_reg = 0.01;
  double factorization_weight = 1.0;
  double bce_weight = 1.0;
  double embed_reg_weight = 1.0;
  std::size_t link_neg_multiplier = 5;
  bool knn_mean_history = false;

  // evaluation
  std::vector<std::size_t> eval_ks = {10, 20};
  bool exclude_seen = false;

  // synthetic corpus generation
  std::size_t synth_n_items = 200;
  std::size_t synth_n_sequences = 1000;
  std::size_t synth_min_len = 8;
  std::size_t synth_max_len = 16;
  std::size_t synth_n_bundles = 10;
  std::size_t synth_bundle_size = 4;
  double synth_markov_weight = 0.5;

  // root seed; every random stream (split, init, dropout, sampling) derives
  // a named sub-seed from it
  std::uint64_t seed = 7;
};

// Applies one `key=value` assignment. Throws UsageError for unknown keys or
// unparsable values.
void set_config_key(RunConfig& config, const std::string& key, const std::string& value);

// Parses the flat config format: `key = value` lines, `#` comments, blank
// lines ignored.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::filesystem::path& path);

// Serializes every key in a fixed order; feeding the dump back reproduces the
// configuration exactly.
std::string dump_config(const RunConfig& config);

// The learning rate actually used for the configured model when the config
// leaves it at 0: graph-convolution models train at 0.001, the rest at 0.01.
double resolve_learning_rate(const RunConfig& config);

// Commands. All write into out_dir with atomic renames and report progress on
// stdout; failures surface as UsageError / DataError / NumericError.
void cmd_synth(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_prepare(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_build_graph(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_train(const RunConfig& config, const std::filesystem::path& out_dir);
void cmd_evaluate(const RunConfig& config, const std::filesystem::path& out_dir,
                  const std::string& checkpoint_path = "");

// Comparison operands name the model and its checkpoint as "model:path".
void cmd_compare(const RunConfig& config, const std::filesystem::path& out_dir,
                 const std::string& side_a, const std::string& side_b);

}  // namespace caasr
