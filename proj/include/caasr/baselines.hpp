#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "caasr/graph.hpp"
#include "caasr/ingest.hpp"
#include "caasr/model.hpp"
#include "caasr/predictor.hpp"
#include "caasr/tensor.hpp"

namespace caasr {

struct BprConfig {
  std::size_t latent_dim = 64;
  std::size_t batch_size = 50;
  std::size_t max_epochs = 30;
  double learning_rate = 0.01;
  double reg = 0.01;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
};

// Mean of the factor rows over each prefix, one output row per prefix.
Tape::ValueRef history_profiles(Tape& tape, Tape::ValueRef factors,
                                const std::vector<std::vector<std::size_t>>& prefixes);

// Matrix-factorization pairwise ranker storing only item factors
// (bpr.item_factors): the user vector is the mean of the factors of the items
// seen so far, so cold-start users need no stored vector. One uniform negative
// is drawn per positive; the L2 penalty covers the whole factor table.
TrainResult bpr_train(const SequenceDataset& train, const BprConfig& cfg, std::uint64_t seed,
                      ParamStore& params);

// Per-item cosine similarity to the query: the last history item's factor, or
// the mean of the history factors when mean_history is set. Zero-norm rows
// (and every item under a zero-norm query) score -2, below any cosine, so
// they rank last.
std::vector<double> knn_scores(const DenseTensor& factors,
                               const std::vector<std::size_t>& history,
                               bool mean_history = false);

// Top items by cosine similarity; ties broken by ascending index.
std::vector<std::size_t> bpr_knn_predict(const std::vector<std::size_t>& history,
                                         const DenseTensor& factors, std::size_t top_m,
                                         bool mean_history = false);

// Squared-error reconstruction of the stored association entries:
// sum over entries (i, j) of (S_ij - z_con_i . z_seq_j)^2. Requires at least
// one stored entry.
Tape::ValueRef association_reconstruction_loss(Tape& tape, Tape::ValueRef z_con,
                                               Tape::ValueRef z_seq,
                                               const SparseMatrix& sppmi);

// Link-reconstruction cross-entropy for sigmoid(z_i . z_j): -log sigmoid over
// edges, -log(1 - sigmoid) over non_edges. Requires at least one edge.
Tape::ValueRef link_bce_loss(Tape& tape, Tape::ValueRef z,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                             const std::vector<std::pair<std::size_t, std::size_t>>& non_edges);

struct CofactorConfig {
  ModelConfig model;
  double factorization_weight = 1.0;
};

// Joint objective: the session pairwise loss with cof.z_seq feeding the GRU
// plus the squared reconstruction of every nonzero association-matrix entry
// by cof.z_con . cof.z_seq^T, both updated each batch. With an empty matrix
// the trajectory is bit-identical to the plain sequential model under the
// same seed (cof.z_con then receives no gradient).
TrainResult cofactor_train(const SequenceDataset& train, const SparseMatrix& sppmi,
                           const CofactorConfig& cfg, std::uint64_t seed, ParamStore& params);

struct GraphAeConfig {
  ModelConfig model;
  double bce_weight = 1.0;
  double embed_reg_weight = 1.0;
  std::size_t neg_multiplier = 5;  // sampled non-links per existing link
};

// Uniform distinct non-edges (i < j, off-diagonal, not in the adjacency), at
// most count of them (fewer when the graph is too dense to supply count).
std::vector<std::pair<std::size_t, std::size_t>> sample_non_edges(
    const SparseMatrix& adjacency, std::size_t count, Rng& rng);

// Joint objective: the session pairwise loss with gae.z_seq feeding the GRU,
// link-reconstruction cross-entropy for sigmoid(Z'_i . Z'_j) over all edges
// plus neg_multiplier x |E| non-edges resampled each epoch, and
// ||Z' - z_seq||_F^2 tying the spectral encoder Z' = sum_k T_k theta'_k to
// the sequential embedding. Fails on an edgeless graph.
TrainResult graphae_train(const SequenceDataset& train, const ChebyshevBasis& basis,
                          const SparseMatrix& adjacency, const GraphAeConfig& cfg,
                          std::uint64_t seed, ParamStore& params);

// Scores items by the dot product of the mean-of-history profile with every
// item factor.
class BprPredictor : public Predictor {
 public:
  explicit BprPredictor(DenseTensor factors);
  void reset() override;
  void observe(std::size_t item) override;
  const std::vector<double>& scores() override;
  std::size_t n_items() const override { return factors_.rows(); }

 private:
  DenseTensor factors_;
  std::vector<double> profile_sum_;
  std::size_t seen_ = 0;
  std::vector<double> scores_;
  bool scores_valid_ = false;
};

// Scores items by cosine similarity to the last observed item (or the running
// history mean when mean_history is set).
class BprKnnPredictor : public Predictor {
 public:
  explicit BprKnnPredictor(DenseTensor factors, bool mean_history = false);
  void reset() override;
  void observe(std::size_t item) override;
  const std::vector<double>& scores() override;
  std::size_t n_items() const override { return factors_.rows(); }

 private:
  DenseTensor factors_;
  bool mean_history_;
  std::vector<std::size_t> history_;
  std::vector<double> scores_;
  bool scores_valid_ = false;
};

}  // namespace caasr
