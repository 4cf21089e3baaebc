#include "caasr/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "caasr/errors.hpp"

namespace caasr {

namespace {

bool is_identity(const SparseMatrix& m) {
  if (m.nnz() != m.dim()) return false;
  for (const SparseMatrix::Entry& e : m.entries()) {
    if (e.row != e.col || e.value != 1.0) return false;
  }
  return true;
}

std::string theta_name(std::size_t k) { return "theta." + std::to_string(k); }

GruLeaves gru_leaves(const std::map<std::string, Tape::ValueRef>& leaves,
                     const std::string& prefix) {
  return GruLeaves{leaves.at(prefix + "W.c"), leaves.at(prefix + "W.r"),
                   leaves.at(prefix + "W.h"), leaves.at(prefix + "U.c"),
                   leaves.at(prefix + "U.r"), leaves.at(prefix + "U.h")};
}

std::vector<Tape::ValueRef> theta_leaves(const std::map<std::string, Tape::ValueRef>& leaves,
                                         std::size_t order) {
  std::vector<Tape::ValueRef> theta;
  for (std::size_t k = 0; k <= order; ++k) theta.push_back(leaves.at(theta_name(k)));
  return theta;
}

void validate_basis(const ChebyshevBasis& basis, std::size_t n_items) {
  if (basis.terms.empty()) throw DataError("basis has no terms");
  if (basis.terms[0].dim() != n_items) {
    throw DataError("basis dimension does not match the item count");
  }
  if (!is_identity(basis.terms[0])) throw DataError("basis term 0 must be the identity");
}

}  // namespace

SessionBatcher::SessionBatcher(const SequenceDataset& train, std::size_t batch_size,
                               std::uint64_t seed)
    : train_(&train), lanes_(batch_size), seed_(seed) {
  if (batch_size == 0) throw DataError("batch size must be positive");
  order_.resize(train.sequences.size());
}

void SessionBatcher::begin_epoch(std::size_t epoch) {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  Rng rng(derive_seed(seed_, "epoch-order", epoch));
  rng.shuffle(order_);
  queue_pos_ = 0;
  for (Lane& lane : lanes_) {
    lane.loaded = false;
    load_next(lane);
  }
}

bool SessionBatcher::load_next(Lane& lane) {
  while (queue_pos_ < order_.size()) {
    std::size_t seq = order_[queue_pos_++];
    if (train_->sequences[seq].items.size() >= 2) {
      lane.loaded = true;
      lane.seq = seq;
      lane.offset = 0;
      return true;
    }
  }
  lane.loaded = false;
  return false;
}

bool SessionBatcher::next_batch(SessionBatch& out) {
  std::size_t b = lanes_.size();
  out.current_items.assign(b, 0);
  out.target_items.assign(b, 0);
  out.reset_mask.assign(b, 0);
  out.active.assign(b, 0);
  out.active_count = 0;
  for (std::size_t i = 0; i < b; ++i) {
    Lane& lane = lanes_[i];
    if (!lane.loaded) continue;
    const std::vector<std::size_t>& items = train_->sequences[lane.seq].items;
    out.current_items[i] = items[lane.offset];
    out.target_items[i] = items[lane.offset + 1];
    out.reset_mask[i] = lane.offset == 0;
    out.active[i] = 1;
    out.active_count++;
    lane.offset++;
    if (lane.offset + 1 >= items.size()) load_next(lane);
  }
  return out.active_count > 0;
}

Tape::ValueRef gru_step(Tape& tape, Tape::ValueRef z, Tape::ValueRef h_prev,
                        const GruLeaves& gru) {
  Tape::ValueRef c =
      tape.sigmoid(tape.add(tape.matmul(z, gru.w_c), tape.matmul(h_prev, gru.u_c)));
  Tape::ValueRef r =
      tape.sigmoid(tape.add(tape.matmul(z, gru.w_r), tape.matmul(h_prev, gru.u_r)));
  Tape::ValueRef cand = tape.tanh(
      tape.add(tape.matmul(z, gru.w_h), tape.matmul(tape.mul(r, h_prev), gru.u_h)));
  // (1 - c) . h + c . cand, written as h + c . (cand - h)
  return tape.add(h_prev, tape.mul(c, tape.sub(cand, h_prev)));
}

Tape::ValueRef graph_embed(Tape& tape, const ChebyshevBasis& basis,
                           const std::vector<Tape::ValueRef>& theta) {
  if (theta.size() != basis.terms.size()) {
    throw DataError("theta count does not match basis order");
  }
  if (!is_identity(basis.terms[0])) throw DataError("basis term 0 must be the identity");
  // Term 0 is the identity, so its product is theta.0 itself.
  Tape::ValueRef z = theta[0];
  for (std::size_t k = 1; k < theta.size(); ++k) {
    z = tape.add(z, tape.spmm(basis.terms[k], theta[k]));
  }
  return z;
}

Tape::ValueRef score_triplet(Tape& tape, Tape::ValueRef h, Tape::ValueRef z_pos,
                             Tape::ValueRef z_neg) {
  return tape.row_dot(h, tape.sub(z_pos, z_neg));
}

Tape::ValueRef bpr_loss(Tape& tape, Tape::ValueRef scores,
                        const std::vector<Tape::ValueRef>& omega, double l2_lambda) {
  Tape::ValueRef loss = tape.sum(tape.softplus(tape.neg(scores)));
  if (l2_lambda > 0.0 && !omega.empty()) {
    Tape::ValueRef reg = tape.sum(tape.mul(omega[0], omega[0]));
    for (std::size_t i = 1; i < omega.size(); ++i) {
      reg = tape.add(reg, tape.sum(tape.mul(omega[i], omega[i])));
    }
    loss = tape.add(loss, tape.scale(reg, l2_lambda / 2.0));
  }
  return loss;
}

StepPairLoss session_pair_loss(Tape& tape, Tape::ValueRef h_scored, Tape::ValueRef z_all,
                               const SessionBatch& batch, std::size_t neg_per_pos) {
  std::size_t b = batch.current_items.size();
  Tape::ValueRef z_tgt = tape.gather(z_all, batch.target_items);
  Tape::ValueRef scores = tape.matmul_nt(h_scored, z_tgt);
  // margins[neg][pos] = h_pos . z_neg - h_pos . z_pos = -r_hat(pos, neg)
  Tape::ValueRef margins = tape.sub(tape.transpose(scores), tape.take_diag(scores));

  DenseTensor mask = DenseTensor::zeros({b, b});
  StepPairLoss out{Tape::ValueRef{0}, 0};
  for (std::size_t pos = 0; pos < b; ++pos) {
    if (!batch.active[pos]) continue;
    std::size_t taken = 0;
    for (std::size_t step = 1; step < b; ++step) {
      std::size_t neg = (pos + step) % b;
      if (!batch.active[neg]) continue;
      if (batch.target_items[neg] == batch.target_items[pos]) continue;
      mask.at(neg, pos) = 1.0;
      out.pair_count++;
      if (neg_per_pos > 0 && ++taken >= neg_per_pos) break;
    }
  }
  if (out.pair_count > 0) {
    out.pair_sum =
        tape.sum(tape.mul(tape.constant(std::move(mask)), tape.softplus(margins)));
  }
  return out;
}

void init_session_params(std::size_t n_items, std::size_t order, const ModelConfig& cfg,
                         std::uint64_t seed, ParamStore& params) {
  if (n_items == 0) throw DataError("dataset has no items");
  if (cfg.latent_dim == 0) throw DataError("latent_dim must be positive");
  std::size_t d = cfg.latent_dim;
  for (std::size_t k = 0; k <= order; ++k) params.create(theta_name(k), {n_items, d});
  for (const char* gate : {"c", "r", "h"}) {
    params.create(std::string("gru.W.") + gate, {d, d});
    params.create(std::string("gru.U.") + gate, {d, d});
  }
  Rng init_rng(derive_seed(seed, "init"));
  params.init_uniform(-0.1, 0.1, init_rng);
}

TrainResult train_session_loop(const SequenceDataset& train, const ModelConfig& cfg,
                               std::uint64_t seed, ParamStore& params,
                               const std::string& gru_prefix, const EmbedBuilder& embed,
                               const ExtraLossBuilder& extra) {
  if (train.sequences.empty()) throw DataError("no training sequences");
  std::size_t d = cfg.latent_dim, b = cfg.batch_size;

  OptimizerConfig opt{cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon};
  Rng dropout_rng(derive_seed(seed, "dropout"));
  SessionBatcher batcher(train, b, derive_seed(seed, "batch-order"));

  DenseTensor h_carry = DenseTensor::zeros({b, d});
  TrainResult result;
  SessionBatch batch;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    batcher.begin_epoch(epoch);
    std::fill(h_carry.data.begin(), h_carry.data.end(), 0.0);
    double epoch_sum = 0.0;
    std::size_t epoch_pairs = 0;
    std::vector<double> batch_losses;
    while (batcher.next_batch(batch)) {
      for (std::size_t lane = 0; lane < b; ++lane) {
        if (batch.reset_mask[lane] || !batch.active[lane]) {
          for (std::size_t j = 0; j < d; ++j) h_carry.at(lane, j) = 0.0;
        }
      }
      Tape tape;
      std::map<std::string, Tape::ValueRef> leaves;
      for (const std::string& name : params.names()) {
        leaves.emplace(name, tape.leaf(params.value(name)));
      }
      Tape::ValueRef z_all = embed(tape, leaves);
      Tape::ValueRef z_cur = tape.gather(z_all, batch.current_items);
      z_cur = tape.dropout(z_cur, cfg.dropout, true, dropout_rng);
      Tape::ValueRef h_prev = tape.constant(h_carry);
      Tape::ValueRef h = gru_step(tape, z_cur, h_prev, gru_leaves(leaves, gru_prefix));
      Tape::ValueRef h_scored = tape.dropout(h, cfg.dropout, true, dropout_rng);

      StepPairLoss step = session_pair_loss(tape, h_scored, z_all, batch, cfg.neg_per_pos);
      std::optional<Tape::ValueRef> loss;
      if (step.pair_count > 0) {
        loss = tape.scale(step.pair_sum, 1.0 / static_cast<double>(step.pair_count));
      }
      if (extra) {
        if (std::optional<Tape::ValueRef> more = extra(tape, leaves, epoch)) {
          loss = loss ? tape.add(*loss, *more) : *more;
        }
      }
      if (loss && cfg.l2_lambda > 0.0) {
        std::vector<Tape::ValueRef> omega;
        omega.reserve(leaves.size());
        for (const auto& [name, leaf] : leaves) omega.push_back(leaf);
        Tape::ValueRef reg = tape.sum(tape.mul(omega[0], omega[0]));
        for (std::size_t i = 1; i < omega.size(); ++i) {
          reg = tape.add(reg, tape.sum(tape.mul(omega[i], omega[i])));
        }
        loss = tape.add(*loss, tape.scale(reg, cfg.l2_lambda / 2.0));
      }
      if (loss) {
        tape.backward(*loss);
        for (const auto& [name, leaf] : leaves) {
          params.accumulate_grad(name, tape.grad(leaf));
        }
        double loss_value = tape.value(*loss).data[0];
        rmsprop_step(params, opt);
        batch_losses.push_back(loss_value);
        epoch_sum += loss_value * static_cast<double>(step.pair_count);
        epoch_pairs += step.pair_count;
      } else {
        batch_losses.push_back(0.0);
      }
      h_carry = tape.value(h);
    }
    double epoch_mean = epoch_pairs > 0 ? epoch_sum / static_cast<double>(epoch_pairs) : 0.0;
    if (!std::isfinite(epoch_mean)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_mean_loss.push_back(epoch_mean);
    result.batch_losses.push_back(std::move(batch_losses));
  }
  return result;
}

TrainResult train_caasr(const SequenceDataset& train, const ChebyshevBasis& basis,
                        const ModelConfig& cfg, std::uint64_t seed, ParamStore& params) {
  validate_basis(basis, train.n_items);
  std::size_t order = basis.terms.size() - 1;
  init_session_params(train.n_items, order, cfg, seed, params);
  EmbedBuilder embed = [&basis, order](Tape& tape,
                                       const std::map<std::string, Tape::ValueRef>& leaves) {
    return graph_embed(tape, basis, theta_leaves(leaves, order));
  };
  return train_session_loop(train, cfg, seed, params, "gru.", embed);
}

TrainResult train_gru4rec(const SequenceDataset& train, const ModelConfig& cfg,
                          std::uint64_t seed, ParamStore& params) {
  init_session_params(train.n_items, 0, cfg, seed, params);
  EmbedBuilder embed = [](Tape&, const std::map<std::string, Tape::ValueRef>& leaves) {
    return leaves.at("theta.0");
  };
  return train_session_loop(train, cfg, seed, params, "gru.", embed);
}

Tape::ValueRef build_unrolled_session_loss(Tape& tape,
                                           const std::map<std::string, Tape::ValueRef>& leaves,
                                           const SequenceDataset& train, const ModelConfig& cfg,
                                           std::uint64_t seed, const std::string& gru_prefix,
                                           const EmbedBuilder& embed) {
  std::size_t b = cfg.batch_size, d = cfg.latent_dim;
  Tape::ValueRef z_all = embed(tape, leaves);
  GruLeaves gru = gru_leaves(leaves, gru_prefix);

  SessionBatcher batcher(train, b, derive_seed(seed, "batch-order"));
  batcher.begin_epoch(0);
  Tape::ValueRef h = tape.constant(DenseTensor::zeros({b, d}));

  Tape::ValueRef total{0};
  bool have_total = false;
  std::size_t total_pairs = 0;
  SessionBatch batch;
  while (batcher.next_batch(batch)) {
    DenseTensor keep = DenseTensor::zeros({b, d});
    for (std::size_t lane = 0; lane < b; ++lane) {
      double k = (batch.reset_mask[lane] || !batch.active[lane]) ? 0.0 : 1.0;
      for (std::size_t j = 0; j < d; ++j) keep.at(lane, j) = k;
    }
    Tape::ValueRef h_in = tape.mul(h, tape.constant(std::move(keep)));
    Tape::ValueRef z_cur = tape.gather(z_all, batch.current_items);
    h = gru_step(tape, z_cur, h_in, gru);
    StepPairLoss step = session_pair_loss(tape, h, z_all, batch, cfg.neg_per_pos);
    if (step.pair_count > 0) {
      total = have_total ? tape.add(total, step.pair_sum) : step.pair_sum;
      have_total = true;
      total_pairs += step.pair_count;
    }
  }
  if (!have_total) throw DataError("no scoreable pairs in the unrolled loss");
  Tape::ValueRef loss = tape.scale(total, 1.0 / static_cast<double>(total_pairs));
  if (cfg.l2_lambda > 0.0) {
    std::vector<Tape::ValueRef> omega;
    omega.reserve(leaves.size());
    for (const auto& [name, leaf] : leaves) omega.push_back(leaf);
    Tape::ValueRef reg = tape.sum(tape.mul(omega[0], omega[0]));
    for (std::size_t i = 1; i < omega.size(); ++i) {
      reg = tape.add(reg, tape.sum(tape.mul(omega[i], omega[i])));
    }
    loss = tape.add(loss, tape.scale(reg, cfg.l2_lambda / 2.0));
  }
  return loss;
}

Tape::ValueRef build_unrolled_loss(Tape& tape,
                                   const std::map<std::string, Tape::ValueRef>& leaves,
                                   const SequenceDataset& train, const ChebyshevBasis* basis,
                                   const ModelConfig& cfg, std::uint64_t seed) {
  EmbedBuilder embed;
  if (basis) {
    std::size_t order = basis->terms.size() - 1;
    embed = [basis, order](Tape& t, const std::map<std::string, Tape::ValueRef>& lv) {
      return graph_embed(t, *basis, theta_leaves(lv, order));
    };
  } else {
    embed = [](Tape&, const std::map<std::string, Tape::ValueRef>& lv) {
      return lv.at("theta.0");
    };
  }
  return build_unrolled_session_loss(tape, leaves, train, cfg, seed, "gru.", embed);
}

DenseTensor compute_embeddings(const ChebyshevBasis* basis, const ParamStore& params,
                               const std::string& theta_prefix) {
  const DenseTensor& theta0 = params.value(theta_prefix + "0");
  DenseTensor z = theta0;
  if (!basis) return z;
  std::size_t d = z.cols();
  if (basis->terms.empty() || basis->terms[0].dim() != z.rows()) {
    throw DataError("basis dimension does not match the embedding table");
  }
  if (!is_identity(basis->terms[0])) throw DataError("basis term 0 must be the identity");
  for (std::size_t k = 1; k < basis->terms.size(); ++k) {
    const DenseTensor& theta_k = params.value(theta_prefix + std::to_string(k));
    if (!theta_k.same_shape(theta0)) throw DataError("inconsistent theta shapes");
    for (const SparseMatrix::Entry& e : basis->terms[k].entries()) {
      for (std::size_t j = 0; j < d; ++j) z.at(e.row, j) += e.value * theta_k.at(e.col, j);
    }
  }
  if (!z.all_finite()) throw NumericError("non-finite embeddings");
  return z;
}

GruPredictor::GruPredictor(DenseTensor embeddings, const ParamStore& params,
                           std::string param_prefix)
    : embeddings_(std::move(embeddings)),
      w_c_(params.value(param_prefix + "W.c")),
      w_r_(params.value(param_prefix + "W.r")),
      w_h_(params.value(param_prefix + "W.h")),
      u_c_(params.value(param_prefix + "U.c")),
      u_r_(params.value(param_prefix + "U.r")),
      u_h_(params.value(param_prefix + "U.h")) {
  std::size_t d = embeddings_.cols();
  if (w_c_.rows() != d || w_c_.cols() != d) throw DataError("GRU weight shape mismatch");
  hidden_.assign(d, 0.0);
  scores_.assign(embeddings_.rows(), 0.0);
}

void GruPredictor::reset() {
  std::fill(hidden_.begin(), hidden_.end(), 0.0);
  scores_valid_ = false;
}

void GruPredictor::observe(std::size_t item) {
  if (item >= embeddings_.rows()) throw DataError("item index out of range");
  std::size_t d = hidden_.size();
  auto gate = [&](const DenseTensor& w, const DenseTensor& u, std::size_t j,
                  const std::vector<double>& h_in) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      s += embeddings_.at(item, i) * w.at(i, j) + h_in[i] * u.at(i, j);
    }
    return s;
  };
  std::vector<double> c(d), r(d), rh(d), cand(d);
  for (std::size_t j = 0; j < d; ++j) {
    c[j] = 1.0 / (1.0 + std::exp(-gate(w_c_, u_c_, j, hidden_)));
    r[j] = 1.0 / (1.0 + std::exp(-gate(w_r_, u_r_, j, hidden_)));
  }
  for (std::size_t j = 0; j < d; ++j) rh[j] = r[j] * hidden_[j];
  for (std::size_t j = 0; j < d; ++j) cand[j] = std::tanh(gate(w_h_, u_h_, j, rh));
  for (std::size_t j = 0; j < d; ++j) {
    hidden_[j] += c[j] * (cand[j] - hidden_[j]);
  }
  scores_valid_ = false;
}

const std::vector<double>& GruPredictor::scores() {
  if (!scores_valid_) {
    std::size_t d = hidden_.size();
    for (std::size_t i = 0; i < embeddings_.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += hidden_[j] * embeddings_.at(i, j);
      scores_[i] = s;
    }
    scores_valid_ = true;
  }
  return scores_;
}

}  // namespace caasr
