#include "caasr/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "caasr/errors.hpp"
#include "caasr/fsio.hpp"
#include "caasr/rng.hpp"

namespace caasr {

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double_strict(const std::string& s, bool& ok) {
  if (s.empty()) {
    ok = false;
    return 0.0;
  }
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  ok = end == s.c_str() + s.size() && std::isfinite(v);
  return v;
}

std::size_t parse_index_strict(const std::string& s, bool& ok) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    ok = false;
    return 0;
  }
  ok = true;
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

InteractionLog load_interactions(const std::filesystem::path& path) {
  InteractionLog log;
  std::unordered_map<std::string, std::size_t> user_index, item_index;
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i], '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw DataError("malformed interaction line " + std::to_string(i + 1) + " in " +
                      path.string());
    }
    bool ok = false;
    double ts = parse_double_strict(fields[2], ok);
    if (!ok) {
      throw DataError("bad timestamp on line " + std::to_string(i + 1) + " in " + path.string());
    }
    auto [uit, unew] = user_index.try_emplace(fields[0], log.user_vocab.size());
    if (unew) log.user_vocab.push_back(fields[0]);
    auto [iit, inew] = item_index.try_emplace(fields[1], log.item_vocab.size());
    if (inew) log.item_vocab.push_back(fields[1]);
    log.events.push_back({uit->second, iit->second, ts, i});
  }
  if (log.events.empty()) throw DataError("no interactions in " + path.string());
  return log;
}

InteractionLog filter_dataset(const InteractionLog& log, std::size_t min_user_events,
                              std::size_t min_item_events, std::size_t max_user_events,
                              std::size_t min_unique_items) {
  std::vector<char> user_alive(log.user_vocab.size(), 1);
  std::vector<char> item_alive(log.item_vocab.size(), 1);

  bool changed = true;
  while (changed) {
    changed = false;

    std::vector<std::size_t> item_count(log.item_vocab.size(), 0);
    for (const InteractionEvent& e : log.events) {
      if (user_alive[e.user] && item_alive[e.item]) item_count[e.item]++;
    }
    for (std::size_t i = 0; i < item_alive.size(); ++i) {
      if (item_alive[i] && item_count[i] < min_item_events) {
        item_alive[i] = 0;
        changed = true;
      }
    }

    std::vector<std::size_t> user_count(log.user_vocab.size(), 0);
    std::vector<std::set<std::size_t>> user_items(log.user_vocab.size());
    for (const InteractionEvent& e : log.events) {
      if (user_alive[e.user] && item_alive[e.item]) {
        user_count[e.user]++;
        user_items[e.user].insert(e.item);
      }
    }
    for (std::size_t u = 0; u < user_alive.size(); ++u) {
      if (!user_alive[u]) continue;
      bool drop = user_count[u] < min_user_events ||
                  (max_user_events > 0 && user_count[u] > max_user_events) ||
                  user_items[u].size() < min_unique_items;
      if (drop) {
        user_alive[u] = 0;
        changed = true;
      }
    }
  }

  std::vector<std::size_t> user_remap(log.user_vocab.size(), 0);
  std::vector<std::size_t> item_remap(log.item_vocab.size(), 0);
  InteractionLog out;
  for (std::size_t u = 0; u < user_alive.size(); ++u) {
    if (user_alive[u]) {
      user_remap[u] = out.user_vocab.size();
      out.user_vocab.push_back(log.user_vocab[u]);
    }
  }
  for (std::size_t i = 0; i < item_alive.size(); ++i) {
    if (item_alive[i]) {
      item_remap[i] = out.item_vocab.size();
      out.item_vocab.push_back(log.item_vocab[i]);
    }
  }
  for (const InteractionEvent& e : log.events) {
    if (user_alive[e.user] && item_alive[e.item]) {
      out.events.push_back({user_remap[e.user], item_remap[e.item], e.timestamp, e.file_order});
    }
  }
  if (out.events.empty()) throw DataError("filtering removed all interactions");
  return out;
}

SequenceDataset build_sequences(const InteractionLog& log) {
  std::vector<std::vector<const InteractionEvent*>> per_user(log.user_vocab.size());
  for (const InteractionEvent& e : log.events) per_user[e.user].push_back(&e);

  SequenceDataset dataset;
  dataset.n_items = log.item_vocab.size();
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& events = per_user[u];
    if (events.size() < 2) continue;
    std::sort(events.begin(), events.end(),
              [](const InteractionEvent* a, const InteractionEvent* b) {
                if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
                return a->file_order < b->file_order;
              });
    Sequence seq;
    seq.user = u;
    seq.items.reserve(events.size());
    for (const InteractionEvent* e : events) seq.items.push_back(e->item);
    dataset.sequences.push_back(std::move(seq));
  }
  return dataset;
}

SplitResult split_train_test(const SequenceDataset& dataset, double ratio, std::uint64_t seed) {
  if (ratio <= 0.0 || ratio > 1.0) throw DataError("split ratio must be in (0, 1]");
  std::vector<std::size_t> order(dataset.sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::size_t n_train =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(order.size())));
  SplitResult result;
  result.train.n_items = dataset.n_items;
  result.test.n_items = dataset.n_items;
  std::vector<char> in_train(dataset.n_items, 0);
  for (std::size_t i = 0; i < n_train; ++i) {
    const Sequence& seq = dataset.sequences[order[i]];
    result.train.sequences.push_back(seq);
    for (std::size_t item : seq.items) in_train[item] = 1;
  }
  if (result.train.sequences.empty()) throw DataError("empty training split");
  for (std::size_t i = n_train; i < order.size(); ++i) {
    Sequence seq = dataset.sequences[order[i]];
    std::erase_if(seq.items, [&](std::size_t item) { return !in_train[item]; });
    if (seq.items.size() >= 2) result.test.sequences.push_back(std::move(seq));
  }
  return result;
}

void write_dataset(const std::filesystem::path& path, const SequenceDataset& dataset) {
  std::ostringstream out;
  for (const Sequence& seq : dataset.sequences) {
    out << seq.user << '\t';
    for (std::size_t i = 0; i < seq.items.size(); ++i) {
      if (i) out << ',';
      out << seq.items[i];
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

SequenceDataset read_dataset(const std::filesystem::path& path, std::size_t n_items) {
  SequenceDataset dataset;
  dataset.n_items = n_items;
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i], '\t');
    if (fields.size() != 2) {
      throw DataError("malformed dataset line " + std::to_string(i + 1) + " in " + path.string());
    }
    bool ok = false;
    Sequence seq;
    seq.user = parse_index_strict(fields[0], ok);
    if (!ok) {
      throw DataError("bad user index on line " + std::to_string(i + 1) + " in " + path.string());
    }
    for (const std::string& field : split_fields(fields[1], ',')) {
      std::size_t item = parse_index_strict(field, ok);
      if (!ok || item >= n_items) {
        throw DataError("bad item index on line " + std::to_string(i + 1) + " in " +
                        path.string());
      }
      seq.items.push_back(item);
    }
    if (seq.items.size() < 2) {
      throw DataError("sequence shorter than 2 on line " + std::to_string(i + 1) + " in " +
                      path.string());
    }
    dataset.sequences.push_back(std::move(seq));
  }
  return dataset;
}

void write_vocab(const std::filesystem::path& path, const std::vector<std::string>& vocab) {
  std::ostringstream out;
  for (std::size_t i = 0; i < vocab.size(); ++i) out << i << '\t' << vocab[i] << '\n';
  write_file_atomic(path, out.str());
}

std::vector<std::string> read_vocab(const std::filesystem::path& path) {
  std::vector<std::string> vocab;
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<std::string> fields = split_fields(lines[i], '\t');
    bool ok = false;
    if (fields.size() != 2 || parse_index_strict(fields[0], ok) != i || !ok) {
      throw DataError("malformed vocab line " + std::to_string(i + 1) + " in " + path.string());
    }
    vocab.push_back(fields[1]);
  }
  return vocab;
}

}  // namespace caasr
