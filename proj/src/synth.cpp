#include "caasr/synth.hpp"

#include <string>

#include "caasr/errors.hpp"
#include "caasr/fsio.hpp"
#include "caasr/rng.hpp"

namespace caasr {

namespace {

void validate(const SynthConfig& config) {
  if (config.n_items < 2) throw DataError("synthetic corpus needs at least 2 items");
  if (config.n_sequences == 0) throw DataError("synthetic corpus needs at least one sequence");
  if (config.min_seq_len < 2 || config.min_seq_len > config.max_seq_len) {
    throw DataError("sequence length range must satisfy 2 <= min <= max");
  }
  if (config.bundle_size < 2) throw DataError("bundles need at least two items");
  if (config.n_bundles * config.bundle_size > config.n_items) {
    throw DataError("bundles exceed the item vocabulary");
  }
  if (config.markov_weight < 0.0 || config.markov_weight > 1.0) {
    throw DataError("markov weight must lie in [0, 1]");
  }
}

}  // namespace

std::vector<std::array<std::size_t, 2>> markov_successors(const SynthConfig& config) {
  validate(config);
  Rng rng(derive_seed(config.seed, "synth.chain"));
  std::vector<std::array<std::size_t, 2>> successors(config.n_items);
  for (std::size_t i = 0; i < config.n_items; ++i) {
    std::size_t first = rng.uniform_int(config.n_items);
    while (first == i) first = rng.uniform_int(config.n_items);
    std::size_t second = first;
    if (config.n_items > 2) {
      while (second == i || second == first) second = rng.uniform_int(config.n_items);
    }
    successors[i] = {first, second};
  }
  return successors;
}

SequenceDataset generate_synthetic(const SynthConfig& config) {
  validate(config);
  std::vector<std::array<std::size_t, 2>> successors = markov_successors(config);
  Rng rng(derive_seed(config.seed, "synth.walk"));

  SequenceDataset dataset;
  dataset.n_items = config.n_items;
  std::size_t bundled_items = config.n_bundles * config.bundle_size;
  std::size_t len_span = config.max_seq_len - config.min_seq_len + 1;
  for (std::size_t u = 0; u < config.n_sequences; ++u) {
    std::size_t len = config.min_seq_len + rng.uniform_int(len_span);
    std::vector<std::size_t> items;
    items.reserve(len);
    items.push_back(rng.uniform_int(config.n_items));
    while (items.size() < len) {
      std::size_t cur = items.back();
      bool chain_step = rng.uniform() < config.markov_weight || cur >= bundled_items;
      if (chain_step) {
        items.push_back(successors[cur][rng.uniform_int(2)]);
      } else {
        std::size_t base = (cur / config.bundle_size) * config.bundle_size;
        std::size_t offset = rng.uniform_int(config.bundle_size - 1);
        if (offset >= cur - base) ++offset;  // never repeat the current item
        items.push_back(base + offset);
      }
    }
    dataset.sequences.push_back({u, std::move(items)});
  }
  return dataset;
}

void write_interactions_tsv(const std::filesystem::path& path, const SequenceDataset& dataset) {
  std::string out;
  for (const Sequence& seq : dataset.sequences) {
    for (std::size_t t = 0; t < seq.items.size(); ++t) {
      out += "u" + std::to_string(seq.user);
      out += '\t';
      out += "i" + std::to_string(seq.items[t]);
      out += '\t';
      out += std::to_string(t);
      out += '\n';
    }
  }
  write_file_atomic(path, out);
}

}  // namespace caasr
