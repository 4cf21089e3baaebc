#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace caasr {

// One user-item interaction, remapped to dense indices. file_order preserves
// the input line position for stable timestamp tie-breaking.
struct InteractionEvent {
  std::size_t user;
  std::size_t item;
  double timestamp;
  std::size_t file_order;
};

struct InteractionLog {
  std::vector<InteractionEvent> events;
  std::vector<std::string> user_vocab;  // dense index -> opaque id
  std::vector<std::string> item_vocab;
};

struct Sequence {
  std::size_t user;
  std::vector<std::size_t> items;
};

struct SequenceDataset {
  std::vector<Sequence> sequences;
  std::size_t n_items = 0;  // item vocabulary size; indices are < n_items
};

// Parses TSV lines "user<TAB>item<TAB>timestamp". Vocabularies are assigned in
// first-appearance order. Throws DataError with the 1-based line number on any
// malformed line.
InteractionLog load_interactions(const std::filesystem::path& path);

// Alternating item/user passes until a fixed point:
//   - items with fewer than min_item_events interactions are dropped;
//   - users with fewer than min_user_events, more than max_user_events
//     (0 = uncapped), or fewer than min_unique_items distinct items are dropped.
// Vocabularies are re-densified (surviving entities keep their relative order).
// Throws DataError if nothing survives.
InteractionLog filter_dataset(const InteractionLog& log, std::size_t min_user_events,
                              std::size_t min_item_events, std::size_t max_user_events,
                              std::size_t min_unique_items);

// Groups events per user and orders each sequence by ascending timestamp,
// breaking ties by input file order. Sequences shorter than 2 are dropped.
SequenceDataset build_sequences(const InteractionLog& log);

struct SplitResult {
  SequenceDataset train;
  SequenceDataset test;
};

// Whole-sequence split: a seeded shuffle assigns floor(ratio * count) sequences
// to train. Items absent from the training fold are removed from test
// sequences; test sequences shrinking below length 2 are dropped.
SplitResult split_train_test(const SequenceDataset& dataset, double ratio, std::uint64_t seed);

// Dataset file: one line per sequence, "user_index<TAB>item,item,...".
void write_dataset(const std::filesystem::path& path, const SequenceDataset& dataset);
SequenceDataset read_dataset(const std::filesystem::path& path, std::size_t n_items);

// Vocabulary sidecar: "dense_index<TAB>opaque_id" per line.
void write_vocab(const std::filesystem::path& path, const std::vector<std::string>& vocab);
std::vector<std::string> read_vocab(const std::filesystem::path& path);

}  // namespace caasr
