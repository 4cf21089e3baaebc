#include "caasr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "caasr/errors.hpp"
#include "caasr/rng.hpp"

namespace caasr {

namespace {

struct Transition {
  std::size_t seq = 0;
  std::size_t step = 0;  // prefix is items[0..step], target is items[step + 1]
};

std::vector<Transition> collect_transitions(const SequenceDataset& train) {
  std::vector<Transition> events;
  for (std::size_t s = 0; s < train.sequences.size(); ++s) {
    const std::vector<std::size_t>& items = train.sequences[s].items;
    for (std::size_t t = 0; t + 1 < items.size(); ++t) events.push_back({s, t});
  }
  return events;
}

double row_norm(const DenseTensor& m, std::size_t row) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) s += m.at(row, j) * m.at(row, j);
  return std::sqrt(s);
}

}  // namespace

Tape::ValueRef history_profiles(Tape& tape, Tape::ValueRef factors,
                                const std::vector<std::vector<std::size_t>>& prefixes) {
  std::vector<std::size_t> flat, offsets;
  offsets.reserve(prefixes.size() + 1);
  for (const std::vector<std::size_t>& prefix : prefixes) {
    offsets.push_back(flat.size());
    flat.insert(flat.end(), prefix.begin(), prefix.end());
  }
  offsets.push_back(flat.size());
  return tape.segment_mean(factors, std::move(flat), std::move(offsets));
}

TrainResult bpr_train(const SequenceDataset& train, const BprConfig& cfg, std::uint64_t seed,
                      ParamStore& params) {
  if (train.n_items < 2) throw DataError("pairwise training needs at least two items");
  if (cfg.latent_dim == 0) throw DataError("latent_dim must be positive");
  if (cfg.batch_size == 0) throw DataError("batch size must be positive");
  std::vector<Transition> events = collect_transitions(train);
  if (events.empty()) throw DataError("no training transitions");

  params.create("bpr.item_factors", {train.n_items, cfg.latent_dim});
  {
    Rng init_rng(derive_seed(seed, "init"));
    params.init_uniform(-0.1, 0.1, init_rng);
  }
  OptimizerConfig opt{cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon};
  Rng neg_rng(derive_seed(seed, "negsample"));

  std::vector<std::size_t> order(events.size());
  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng(derive_seed(seed, "order", epoch));
    order_rng.shuffle(order);

    double epoch_sum = 0.0;
    std::size_t epoch_events = 0;
    std::vector<double> batch_losses;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<std::size_t>> prefixes;
      std::vector<std::size_t> targets, negatives;
      for (std::size_t i = start; i < stop; ++i) {
        const Transition& e = events[order[i]];
        const std::vector<std::size_t>& items = train.sequences[e.seq].items;
        prefixes.emplace_back(items.begin(), items.begin() + e.step + 1);
        std::size_t target = items[e.step + 1];
        targets.push_back(target);
        std::size_t neg = target;
        while (neg == target) neg = neg_rng.uniform_int(train.n_items);
        negatives.push_back(neg);
      }

      Tape tape;
      Tape::ValueRef factors = tape.leaf(params.value("bpr.item_factors"));
      Tape::ValueRef profiles = history_profiles(tape, factors, prefixes);
      Tape::ValueRef diff =
          tape.sub(tape.gather(factors, targets), tape.gather(factors, negatives));
      Tape::ValueRef scores = tape.row_dot(profiles, diff);
      std::size_t n_batch = stop - start;
      Tape::ValueRef loss = tape.scale(tape.sum(tape.softplus(tape.neg(scores))),
                                       1.0 / static_cast<double>(n_batch));
      loss = tape.add(loss, tape.scale(tape.sum(tape.mul(factors, factors)), cfg.reg / 2.0));
      tape.backward(loss);
      params.accumulate_grad("bpr.item_factors", tape.grad(factors));
      double loss_value = tape.value(loss).data[0];
      rmsprop_step(params, opt);
      batch_losses.push_back(loss_value);
      epoch_sum += loss_value * static_cast<double>(n_batch);
      epoch_events += n_batch;
    }
    double epoch_mean = epoch_sum / static_cast<double>(epoch_events);
    if (!std::isfinite(epoch_mean)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_mean_loss.push_back(epoch_mean);
    result.batch_losses.push_back(std::move(batch_losses));
  }
  return result;
}

std::vector<double> knn_scores(const DenseTensor& factors,
                               const std::vector<std::size_t>& history, bool mean_history) {
  if (history.empty()) throw DataError("history must be non-empty");
  std::size_t n = factors.rows(), d = factors.cols();
  for (std::size_t item : history) {
    if (item >= n) throw DataError("history item out of range");
  }
  std::vector<double> query(d, 0.0);
  if (mean_history) {
    for (std::size_t item : history) {
      for (std::size_t j = 0; j < d; ++j) query[j] += factors.at(item, j);
    }
    for (double& v : query) v /= static_cast<double>(history.size());
  } else {
    for (std::size_t j = 0; j < d; ++j) query[j] = factors.at(history.back(), j);
  }
  double qn = 0.0;
  for (double v : query) qn += v * v;
  qn = std::sqrt(qn);

  std::vector<double> scores(n, -2.0);
  if (qn == 0.0) return scores;
  for (std::size_t i = 0; i < n; ++i) {
    double fn = row_norm(factors, i);
    if (fn == 0.0) continue;  // keep the below-cosine sentinel
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += query[j] * factors.at(i, j);
    scores[i] = dot / (qn * fn);
  }
  return scores;
}

std::vector<std::size_t> bpr_knn_predict(const std::vector<std::size_t>& history,
                                         const DenseTensor& factors, std::size_t top_m,
                                         bool mean_history) {
  return predict_topk(knn_scores(factors, history, mean_history), top_m);
}

Tape::ValueRef association_reconstruction_loss(Tape& tape, Tape::ValueRef z_con,
                                               Tape::ValueRef z_seq,
                                               const SparseMatrix& sppmi) {
  if (sppmi.nnz() == 0) throw DataError("association matrix has no stored entries");
  std::vector<std::size_t> rows, cols;
  DenseTensor values = DenseTensor::zeros({sppmi.nnz(), 1});
  for (const SparseMatrix::Entry& e : sppmi.entries()) {
    values.data[rows.size()] = e.value;
    rows.push_back(e.row);
    cols.push_back(e.col);
  }
  Tape::ValueRef predicted = tape.row_dot(tape.gather(z_con, std::move(rows)),
                                          tape.gather(z_seq, std::move(cols)));
  Tape::ValueRef diff = tape.sub(tape.constant(std::move(values)), predicted);
  return tape.sum(tape.mul(diff, diff));
}

Tape::ValueRef link_bce_loss(Tape& tape, Tape::ValueRef z,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                             const std::vector<std::pair<std::size_t, std::size_t>>& non_edges) {
  if (edges.empty()) throw DataError("link reconstruction needs at least one edge");
  auto pair_scores = [&](const std::vector<std::pair<std::size_t, std::size_t>>& links) {
    std::vector<std::size_t> li, lj;
    li.reserve(links.size());
    lj.reserve(links.size());
    for (const auto& [i, j] : links) {
      li.push_back(i);
      lj.push_back(j);
    }
    return tape.row_dot(tape.gather(z, std::move(li)), tape.gather(z, std::move(lj)));
  };
  Tape::ValueRef bce = tape.sum(tape.softplus(tape.neg(pair_scores(edges))));
  if (!non_edges.empty()) {
    bce = tape.add(bce, tape.sum(tape.softplus(pair_scores(non_edges))));
  }
  return bce;
}

TrainResult cofactor_train(const SequenceDataset& train, const SparseMatrix& sppmi,
                           const CofactorConfig& cfg, std::uint64_t seed,
                           ParamStore& params) {
  if (sppmi.dim() != train.n_items) {
    throw DataError("association matrix dimension does not match the item count");
  }
  std::size_t n = train.n_items, d = cfg.model.latent_dim;
  if (n == 0) throw DataError("dataset has no items");
  if (d == 0) throw DataError("latent_dim must be positive");

  // cof.gru.* and cof.z_seq consume the init stream in the same order the
  // plain sequential model draws gru.* and theta.0, so an empty association
  // matrix reproduces that model exactly; the context table has its own
  // stream.
  for (const char* gate : {"c", "r", "h"}) {
    params.create(std::string("cof.gru.W.") + gate, {d, d});
    params.create(std::string("cof.gru.U.") + gate, {d, d});
  }
  params.create("cof.z_seq", {n, d});
  {
    Rng init_rng(derive_seed(seed, "init"));
    params.init_uniform(-0.1, 0.1, init_rng);
  }
  {
    DenseTensor& z_con = params.create("cof.z_con", {n, d});
    Rng con_rng(derive_seed(seed, "init.context"));
    for (double& v : z_con.data) v = con_rng.uniform_range(-0.1, 0.1);
  }

  ExtraLossBuilder extra = [&](Tape& tape, const std::map<std::string, Tape::ValueRef>& leaves,
                               std::size_t) -> std::optional<Tape::ValueRef> {
    if (sppmi.nnz() == 0) return std::nullopt;
    Tape::ValueRef term = association_reconstruction_loss(tape, leaves.at("cof.z_con"),
                                                          leaves.at("cof.z_seq"), sppmi);
    return tape.scale(term, cfg.factorization_weight);
  };
  EmbedBuilder embed = [](Tape&, const std::map<std::string, Tape::ValueRef>& leaves) {
    return leaves.at("cof.z_seq");
  };
  return train_session_loop(train, cfg.model, seed, params, "cof.gru.", embed, extra);
}

std::vector<std::pair<std::size_t, std::size_t>> sample_non_edges(
    const SparseMatrix& adjacency, std::size_t count, Rng& rng) {
  std::size_t n = adjacency.dim();
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    if (e.row < e.col) edges.insert({e.row, e.col});
  }
  std::size_t total = n * (n - 1) / 2;
  std::size_t available = total - edges.size();
  std::size_t take = std::min(count, available);

  if (take * 2 >= available) {
    // Dense graph: enumerate the complement and draw without replacement.
    std::vector<std::pair<std::size_t, std::size_t>> pool;
    pool.reserve(available);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!edges.count({i, j})) pool.push_back({i, j});
      }
    }
    for (std::size_t k = 0; k < take; ++k) {
      std::swap(pool[k], pool[k + rng.uniform_int(pool.size() - k)]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  std::set<std::pair<std::size_t, std::size_t>> chosen;
  while (chosen.size() < take) {
    std::size_t i = rng.uniform_int(n), j = rng.uniform_int(n);
    if (i == j) continue;
    std::pair<std::size_t, std::size_t> link{std::min(i, j), std::max(i, j)};
    if (edges.count(link)) continue;
    chosen.insert(link);
  }
  return {chosen.begin(), chosen.end()};
}

TrainResult graphae_train(const SequenceDataset& train, const ChebyshevBasis& basis,
                          const SparseMatrix& adjacency, const GraphAeConfig& cfg,
                          std::uint64_t seed, ParamStore& params) {
  std::size_t n = train.n_items, d = cfg.model.latent_dim;
  if (adjacency.dim() != n) throw DataError("adjacency dimension does not match item count");
  if (basis.terms.empty() || basis.terms[0].dim() != n) {
    throw DataError("basis dimension does not match the item count");
  }
  if (cfg.neg_multiplier < 1) throw DataError("neg_multiplier must be at least 1");

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    if (e.row < e.col) edges.push_back({e.row, e.col});
  }
  if (edges.empty()) throw DataError("item graph has no links to reconstruct");

  std::size_t order = basis.terms.size() - 1;
  for (const char* gate : {"c", "r", "h"}) {
    params.create(std::string("gae.gru.W.") + gate, {d, d});
    params.create(std::string("gae.gru.U.") + gate, {d, d});
  }
  for (std::size_t k = 0; k <= order; ++k) {
    params.create("gae.theta." + std::to_string(k), {n, d});
  }
  params.create("gae.z_seq", {n, d});
  {
    Rng init_rng(derive_seed(seed, "init"));
    params.init_uniform(-0.1, 0.1, init_rng);
  }

  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::size_t>> non_edges;
  ExtraLossBuilder extra = [&](Tape& tape, const std::map<std::string, Tape::ValueRef>& leaves,
                               std::size_t epoch) -> std::optional<Tape::ValueRef> {
    if (epoch != cached_epoch) {
      Rng link_rng(derive_seed(seed, "graphae.links", epoch));
      non_edges = sample_non_edges(adjacency, cfg.neg_multiplier * edges.size(), link_rng);
      cached_epoch = epoch;
    }
    std::vector<Tape::ValueRef> theta;
    for (std::size_t k = 0; k <= order; ++k) {
      theta.push_back(leaves.at("gae.theta." + std::to_string(k)));
    }
    Tape::ValueRef z_prime = graph_embed(tape, basis, theta);
    Tape::ValueRef bce = link_bce_loss(tape, z_prime, edges, non_edges);
    Tape::ValueRef diff = tape.sub(z_prime, leaves.at("gae.z_seq"));
    Tape::ValueRef reg = tape.sum(tape.mul(diff, diff));
    return tape.add(tape.scale(bce, cfg.bce_weight), tape.scale(reg, cfg.embed_reg_weight));
  };
  EmbedBuilder embed = [](Tape&, const std::map<std::string, Tape::ValueRef>& leaves) {
    return leaves.at("gae.z_seq");
  };
  return train_session_loop(train, cfg.model, seed, params, "gae.gru.", embed, extra);
}

BprPredictor::BprPredictor(DenseTensor factors) : factors_(std::move(factors)) {
  profile_sum_.assign(factors_.cols(), 0.0);
  scores_.assign(factors_.rows(), 0.0);
}

void BprPredictor::reset() {
  std::fill(profile_sum_.begin(), profile_sum_.end(), 0.0);
  seen_ = 0;
  scores_valid_ = false;
}

void BprPredictor::observe(std::size_t item) {
  if (item >= factors_.rows()) throw DataError("item index out of range");
  for (std::size_t j = 0; j < factors_.cols(); ++j) profile_sum_[j] += factors_.at(item, j);
  seen_++;
  scores_valid_ = false;
}

const std::vector<double>& BprPredictor::scores() {
  if (seen_ == 0) throw DataError("no observations to score from");
  if (!scores_valid_) {
    double inv = 1.0 / static_cast<double>(seen_);
    for (std::size_t i = 0; i < factors_.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < factors_.cols(); ++j) {
        s += profile_sum_[j] * inv * factors_.at(i, j);
      }
      scores_[i] = s;
    }
    scores_valid_ = true;
  }
  return scores_;
}

BprKnnPredictor::BprKnnPredictor(DenseTensor factors, bool mean_history)
    : factors_(std::move(factors)), mean_history_(mean_history) {
  scores_.assign(factors_.rows(), 0.0);
}

void BprKnnPredictor::reset() {
  history_.clear();
  scores_valid_ = false;
}

void BprKnnPredictor::observe(std::size_t item) {
  if (item >= factors_.rows()) throw DataError("item index out of range");
  history_.push_back(item);
  scores_valid_ = false;
}

const std::vector<double>& BprKnnPredictor::scores() {
  if (!scores_valid_) {
    scores_ = knn_scores(factors_, history_, mean_history_);
    scores_valid_ = true;
  }
  return scores_;
}

}  // namespace caasr
