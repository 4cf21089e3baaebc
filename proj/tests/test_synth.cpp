#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "caasr/errors.hpp"
#include "caasr/graph.hpp"
#include "caasr/synth.hpp"

using namespace caasr;

TEST_CASE("generation respects the configured shape and is seed-deterministic") {
  SynthConfig cfg;
  cfg.n_items = 30;
  cfg.n_sequences = 50;
  cfg.min_seq_len = 5;
  cfg.max_seq_len = 9;
  cfg.n_bundles = 4;
  cfg.bundle_size = 3;
  cfg.seed = 11;

  SequenceDataset ds = generate_synthetic(cfg);
  CHECK(ds.n_items == 30);
  REQUIRE(ds.sequences.size() == 50);
  bool saw_min = false, saw_max = false;
  for (const Sequence& seq : ds.sequences) {
    CHECK(seq.items.size() >= 5);
    CHECK(seq.items.size() <= 9);
    saw_min |= seq.items.size() == 5;
    saw_max |= seq.items.size() == 9;
    for (std::size_t item : seq.items) CHECK(item < 30);
  }
  CHECK(saw_min);
  CHECK(saw_max);

  SequenceDataset again = generate_synthetic(cfg);
  REQUIRE(again.sequences.size() == ds.sequences.size());
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    CHECK(again.sequences[i].items == ds.sequences[i].items);
  }

  SynthConfig other = cfg;
  other.seed = 12;
  SequenceDataset different = generate_synthetic(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < ds.sequences.size() && !any_diff; ++i) {
    any_diff = different.sequences[i].items != ds.sequences[i].items;
  }
  CHECK(any_diff);
}

TEST_CASE("invalid configurations are rejected") {
  SynthConfig cfg;
  SynthConfig bad = cfg;
  bad.n_items = 1;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  bad = cfg;
  bad.bundle_size = 1;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  bad = cfg;
  bad.n_bundles = 1000;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  bad = cfg;
  bad.min_seq_len = 1;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  bad = cfg;
  bad.min_seq_len = 10;
  bad.max_seq_len = 5;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  bad = cfg;
  bad.markov_weight = 1.5;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  bad = cfg;
  bad.n_sequences = 0;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
}

TEST_CASE("pure chain walks reproduce the planted transition kernel") {
  SynthConfig cfg;
  cfg.n_items = 50;
  cfg.n_sequences = 2000;
  cfg.min_seq_len = 8;
  cfg.max_seq_len = 16;
  cfg.n_bundles = 5;
  cfg.bundle_size = 4;
  cfg.markov_weight = 1.0;
  cfg.seed = 3;

  std::vector<std::array<std::size_t, 2>> chain = markov_successors(cfg);
  SequenceDataset ds = generate_synthetic(cfg);

  // Count empirical bigrams.
  std::map<std::size_t, std::map<std::size_t, std::size_t>> bigrams;
  std::size_t total_steps = 0;
  for (const Sequence& seq : ds.sequences) {
    for (std::size_t t = 0; t + 1 < seq.items.size(); ++t) {
      bigrams[seq.items[t]][seq.items[t + 1]]++;
      ++total_steps;
    }
  }
  CHECK(total_steps > 10000);

  for (const auto& [item, nexts] : bigrams) {
    std::size_t outgoing = 0;
    for (const auto& [next, count] : nexts) {
      // Every observed transition is one of the two planted successors.
      CHECK((next == chain[item][0] || next == chain[item][1]));
      outgoing += count;
    }
    if (outgoing < 200) continue;
    // Both successors are taken about half the time.
    double first_freq =
        static_cast<double>(nexts.count(chain[item][0]) ? nexts.at(chain[item][0]) : 0) /
        static_cast<double>(outgoing);
    CHECK(first_freq > 0.4);
    CHECK(first_freq < 0.6);
  }
}

TEST_CASE("pure bundle walks leave the bundles as disjoint cliques") {
  SynthConfig cfg;
  cfg.n_items = 20;
  cfg.n_sequences = 300;
  cfg.min_seq_len = 8;
  cfg.max_seq_len = 16;
  cfg.n_bundles = 5;
  cfg.bundle_size = 4;  // every item is bundled
  cfg.markov_weight = 0.0;
  cfg.seed = 21;

  SequenceDataset ds = generate_synthetic(cfg);
  SparseMatrix adjacency = build_adjacency(count_cooccurrence(ds), 2);

  std::vector<std::vector<bool>> linked(20, std::vector<bool>(20, false));
  for (const SparseMatrix::Entry& e : adjacency.entries()) linked[e.row][e.col] = true;
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) {
      if (i == j) continue;
      bool same_bundle = i / 4 == j / 4;
      CHECK(linked[i][j] == same_bundle);
    }
  }
}

TEST_CASE("a single two-item bundle forces alternating sequences") {
  SynthConfig cfg;
  cfg.n_items = 2;
  cfg.n_sequences = 20;
  cfg.min_seq_len = 6;
  cfg.max_seq_len = 6;
  cfg.n_bundles = 1;
  cfg.bundle_size = 2;
  cfg.markov_weight = 0.5;  // both step kinds can only pick the other item
  cfg.seed = 9;

  SequenceDataset ds = generate_synthetic(cfg);
  for (const Sequence& seq : ds.sequences) {
    for (std::size_t t = 0; t + 1 < seq.items.size(); ++t) {
      CHECK(seq.items[t + 1] == 1 - seq.items[t]);
    }
  }
}

TEST_CASE("items outside every bundle always follow the chain") {
  SynthConfig cfg;
  cfg.n_items = 10;
  cfg.n_sequences = 400;
  cfg.min_seq_len = 6;
  cfg.max_seq_len = 10;
  cfg.n_bundles = 1;
  cfg.bundle_size = 2;  // items 0 and 1 bundled, 2..9 free
  cfg.markov_weight = 0.0;
  cfg.seed = 33;

  std::vector<std::array<std::size_t, 2>> chain = markov_successors(cfg);
  SequenceDataset ds = generate_synthetic(cfg);
  std::size_t free_transitions = 0;
  for (const Sequence& seq : ds.sequences) {
    for (std::size_t t = 0; t + 1 < seq.items.size(); ++t) {
      std::size_t cur = seq.items[t], next = seq.items[t + 1];
      if (cur < 2) {
        CHECK(next == 1 - cur);  // the only other bundle member
      } else {
        CHECK((next == chain[cur][0] || next == chain[cur][1]));
        ++free_transitions;
      }
    }
  }
  CHECK(free_transitions > 100);
}

TEST_CASE("interaction rows round-trip through the loader") {
  SynthConfig cfg;
  cfg.n_items = 12;
  cfg.n_sequences = 8;
  cfg.min_seq_len = 4;
  cfg.max_seq_len = 7;
  cfg.n_bundles = 2;
  cfg.bundle_size = 3;
  cfg.seed = 2;

  SequenceDataset ds = generate_synthetic(cfg);
  std::filesystem::path path =
      std::filesystem::temp_directory_path() / "caasr_synth_roundtrip.tsv";
  write_interactions_tsv(path, ds);

  InteractionLog log = load_interactions(path);
  SequenceDataset loaded = build_sequences(log);
  REQUIRE(loaded.sequences.size() == ds.sequences.size());
  for (const Sequence& seq : loaded.sequences) {
    // Map the loader's dense ids back through the vocabularies.
    std::size_t original_user = std::strtoull(log.user_vocab[seq.user].c_str() + 1, nullptr, 10);
    const std::vector<std::size_t>& want = ds.sequences[original_user].items;
    REQUIRE(seq.items.size() == want.size());
    for (std::size_t t = 0; t < seq.items.size(); ++t) {
      std::size_t original_item =
          std::strtoull(log.item_vocab[seq.items[t]].c_str() + 1, nullptr, 10);
      CHECK(original_item == want[t]);
    }
  }
  std::filesystem::remove(path);
}
