#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "caasr/ingest.hpp"

namespace caasr {

// Generator for corpora with planted structure: a fixed random first-order
// chain provides the sequential signal, and disjoint item bundles provide an
// order-free association signal.
struct SynthConfig {
  std::size_t n_items = 200;
  std::size_t n_sequences = 1000;
  std::size_t min_seq_len = 8;
  std::size_t max_seq_len = 16;
  std::size_t n_bundles = 10;   // bundles cover consecutive index blocks from 0
  std::size_t bundle_size = 4;
  double markov_weight = 0.5;   // probability of a chain step at each position
  std::uint64_t seed = 7;
};

// The fixed chain underlying the sequential component: every item gets two
// successors taken with equal probability, distinct from the item and (when
// the vocabulary allows) from each other. Deterministic in the config seed.
std::vector<std::array<std::size_t, 2>> markov_successors(const SynthConfig& config);

// Draws sequences whose steps follow the chain with probability markov_weight
// and otherwise move uniformly inside the current item's bundle. Items outside
// every bundle always follow the chain. The first item of each sequence is
// uniform and lengths are uniform over the configured range.
SequenceDataset generate_synthetic(const SynthConfig& config);

// Writes "u<user><TAB>i<item><TAB><step>" interaction rows, with the step
// index standing in for a timestamp.
void write_interactions_tsv(const std::filesystem::path& path, const SequenceDataset& dataset);

}  // namespace caasr
