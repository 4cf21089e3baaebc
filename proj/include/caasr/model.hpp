#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caasr/graph.hpp"
#include "caasr/ingest.hpp"
#include "caasr/predictor.hpp"
#include "caasr/tensor.hpp"

namespace caasr {

struct ModelConfig {
  std::size_t latent_dim = 64;
  std::size_t cheb_order = 3;
  std::size_t batch_size = 50;
  std::size_t max_epochs = 30;
  double learning_rate = 0.001;
  double dropout = 0.2;
  double l2_lambda = 0.0;
  // 0 keeps every other in-batch target as a negative; a positive value caps
  // the negatives used per positive (1 reproduces single-negative training).
  std::size_t neg_per_pos = 0;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
};

// One lockstep step over parallel session lanes.
struct SessionBatch {
  std::vector<std::size_t> current_items;
  std::vector<std::size_t> target_items;
  std::vector<char> reset_mask;  // lane emits the first transition of a sequence
  std::vector<char> active;      // lane holds a real transition this step
  std::size_t active_count = 0;
};

// Session-parallel iterator: each lane walks one sequence; an exhausted lane
// loads the next unstarted sequence. The epoch ends only when every sequence
// is consumed and all lanes have run dry.
class SessionBatcher {
 public:
  SessionBatcher(const SequenceDataset& train, std::size_t batch_size, std::uint64_t seed);
  void begin_epoch(std::size_t epoch);
  bool next_batch(SessionBatch& out);
  std::size_t batch_size() const { return lanes_.size(); }

 private:
  struct Lane {
    bool loaded = false;
    std::size_t seq = 0;
    std::size_t offset = 0;
  };
  bool load_next(Lane& lane);

  const SequenceDataset* train_;
  std::vector<Lane> lanes_;
  std::vector<std::size_t> order_;
  std::size_t queue_pos_ = 0;
  std::uint64_t seed_;
};

// Leaf handles for the six GRU weight matrices on a tape.
struct GruLeaves {
  Tape::ValueRef w_c, w_r, w_h;
  Tape::ValueRef u_c, u_r, u_h;
};

// Update gate c, reset gate r, candidate state, and the convex combination:
//   c = sigmoid(z Wc + h Uc), r = sigmoid(z Wr + h Ur),
//   cand = tanh(z Wh + (r . h) Uh), h' = (1 - c) . h + c . cand.
Tape::ValueRef gru_step(Tape& tape, Tape::ValueRef z, Tape::ValueRef h_prev,
                        const GruLeaves& gru);

// Z = Theta_0 + sum_{k>=1} T_k Theta_k (the identity term is folded in
// directly; with order 0 this is exactly the plain embedding matrix).
Tape::ValueRef graph_embed(Tape& tape, const ChebyshevBasis& basis,
                           const std::vector<Tape::ValueRef>& theta);

// r_hat rows: h . (z_pos - z_neg).
Tape::ValueRef score_triplet(Tape& tape, Tape::ValueRef h, Tape::ValueRef z_pos,
                             Tape::ValueRef z_neg);

// Pairwise ranking loss: sum(-ln sigmoid(scores)) + (l2_lambda / 2) * sum of
// squared entries over every tensor in omega.
Tape::ValueRef bpr_loss(Tape& tape, Tape::ValueRef scores,
                        const std::vector<Tape::ValueRef>& omega, double l2_lambda);

struct StepPairLoss {
  Tape::ValueRef pair_sum;  // sum of -ln sigmoid over valid in-batch pairs
  std::size_t pair_count = 0;
};

// In-batch pairwise loss for one session step: scores every lane's hidden
// state against every lane's target embedding; negatives are the other active
// lanes' targets, skipping collisions where both lanes share a target.
// pair_sum is only meaningful when pair_count > 0.
StepPairLoss session_pair_loss(Tape& tape, Tape::ValueRef h_scored, Tape::ValueRef z_all,
                               const SessionBatch& batch, std::size_t neg_per_pos);

struct TrainResult {
  std::vector<double> epoch_mean_loss;
  std::vector<std::vector<double>> batch_losses;  // per epoch, per batch
};

// Creates theta.0..theta.order plus gru.{W,U}.{c,r,h} and fills them with
// uniform(-0.1, 0.1) draws from the seed's init stream, in sorted name order.
void init_session_params(std::size_t n_items, std::size_t order, const ModelConfig& cfg,
                         std::uint64_t seed, ParamStore& params);

// Builds the item embedding matrix for one batch from the registered leaves.
using EmbedBuilder =
    std::function<Tape::ValueRef(Tape&, const std::map<std::string, Tape::ValueRef>&)>;

// Optional per-batch loss terms beyond the pairwise ranking objective; called
// with the running epoch so epoch-reseeded structures can be rebuilt lazily.
using ExtraLossBuilder = std::function<std::optional<Tape::ValueRef>(
    Tape&, const std::map<std::string, Tape::ValueRef>&, std::size_t epoch)>;

// Shared session-parallel training loop over already-initialized parameters;
// every GRU-backed model runs through it. Per batch: the embedding matrix is
// rebuilt, gathered inputs and the scored hidden state get dropout, the
// in-batch pairwise loss is averaged over usable pairs, extra terms and the
// optional L2 penalty are added, and one RMSprop step runs. The carried
// hidden state is the pre-dropout output. Batch losses record the optimized
// value; epoch means weight batches by usable pair count.
TrainResult train_session_loop(const SequenceDataset& train, const ModelConfig& cfg,
                               std::uint64_t seed, ParamStore& params,
                               const std::string& gru_prefix, const EmbedBuilder& embed,
                               const ExtraLossBuilder& extra = nullptr);

// Builds one full epoch of the session loss in a single tape with the hidden
// state unrolled through every step (no truncation), dropout off. Used to
// verify gradients end to end against finite differences. The general form
// takes the embedding builder and GRU name prefix so the baselines' loss
// compositions can be checked through the same machinery.
Tape::ValueRef build_unrolled_session_loss(Tape& tape,
                                           const std::map<std::string, Tape::ValueRef>& leaves,
                                           const SequenceDataset& train, const ModelConfig& cfg,
                                           std::uint64_t seed, const std::string& gru_prefix,
                                           const EmbedBuilder& embed);
Tape::ValueRef build_unrolled_loss(Tape& tape,
                                   const std::map<std::string, Tape::ValueRef>& leaves,
                                   const SequenceDataset& train, const ChebyshevBasis* basis,
                                   const ModelConfig& cfg, std::uint64_t seed);

// Creates and initializes parameters (theta.k for each basis order plus
// gru.{W,U}.{c,r,h}), then runs session-parallel training. Scoring targets use
// non-dropped embeddings; dropout applies to gathered inputs and to the hidden
// state used for scoring, while the carried state stays pre-dropout.
TrainResult train_caasr(const SequenceDataset& train, const ChebyshevBasis& basis,
                        const ModelConfig& cfg, std::uint64_t seed, ParamStore& params);

// Plain sequential model: the embedding matrix theta.0 feeds the GRU directly
// with no graph term. Shares every code path with train_caasr except the
// embedding construction.
TrainResult train_gru4rec(const SequenceDataset& train, const ModelConfig& cfg,
                          std::uint64_t seed, ParamStore& params);

// Dense embedding matrix for inference: theta.0 + sum_{k>=1} T_k theta.k.
DenseTensor compute_embeddings(const ChebyshevBasis* basis, const ParamStore& params,
                               const std::string& theta_prefix = "theta.");

// GRU-backed predictor over a fixed embedding matrix. The same machinery
// serves every sequential model; only the embedding construction differs.
class GruPredictor : public Predictor {
 public:
  GruPredictor(DenseTensor embeddings, const ParamStore& params, std::string param_prefix = "gru.");
  void reset() override;
  void observe(std::size_t item) override;
  const std::vector<double>& scores() override;
  std::size_t n_items() const override { return embeddings_.rows(); }

 private:
  DenseTensor embeddings_;
  DenseTensor w_c_, w_r_, w_h_, u_c_, u_r_, u_h_;
  std::vector<double> hidden_;
  std::vector<double> scores_;
  bool scores_valid_ = false;
};

}  // namespace caasr
