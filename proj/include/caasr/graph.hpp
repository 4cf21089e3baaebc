#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "caasr/ingest.hpp"
#include "caasr/sparse.hpp"

namespace caasr {

// Co-occurrence pair counts over training sequences. Keys are (i, j) with
// i < j; items are counted once per sequence regardless of repetitions.
struct CooccurrenceCounts {
  std::size_t n_items = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_counts;
  std::vector<std::size_t> item_counts;  // marginal: sum of pair counts touching i
  std::size_t total_pairs = 0;           // sum of all pair counts
};

// Chebyshev polynomial terms of the rescaled Laplacian; terms[0] is the
// identity, terms[k] = T_k(L~).
struct ChebyshevBasis {
  std::vector<SparseMatrix> terms;
  double lambda_max = 0.0;
};

CooccurrenceCounts count_cooccurrence(const SequenceDataset& train);

// Binary symmetric adjacency: edge where the pair count reaches the threshold.
// An edgeless result is allowed (a warning is printed to stderr).
SparseMatrix build_adjacency(const CooccurrenceCounts& counts, std::size_t threshold);

// Symmetric normalized Laplacian L = I - D^{-1/2} A D^{-1/2}. Isolated nodes
// contribute plain identity rows.
SparseMatrix normalized_laplacian(const SparseMatrix& adjacency);

// Power iteration from a fixed seeded start vector; converges on relative
// Rayleigh-quotient change below tol, falling back to the bound 2.0 for
// normalized Laplacians when max_iters is exhausted.
double estimate_lambda_max(const SparseMatrix& laplacian, double tol = 1e-8,
                           std::size_t max_iters = 1000);

// L~ = (2 / lambda_max) L - I. Requires lambda_max > 0.
SparseMatrix rescale_laplacian(const SparseMatrix& laplacian, double lambda_max);

// T_0 = I, T_1 = L~, T_k = 2 L~ T_{k-1} - T_{k-2}; entries below 1e-12 in
// magnitude are pruned after each recursion step to bound fill-in.
ChebyshevBasis chebyshev_basis(const SparseMatrix& rescaled_laplacian, std::size_t order);

// Full pipeline from adjacency to basis. The spectral estimate is padded by a
// tiny factor so the rescaled spectrum stays within [-1, 1] even when power
// iteration stops slightly short of the true maximum.
ChebyshevBasis chebyshev_from_adjacency(const SparseMatrix& adjacency, std::size_t order);

// Shifted positive PMI over co-occurrence counts:
// S(i,j) = max(log(count(i,j) * total / (count(i) * count(j))) - log(shift), 0).
// Symmetric, zero diagonal, only positive entries stored. Requires shift >= 1.
SparseMatrix build_sppmi(const CooccurrenceCounts& counts, double shift);

// Graph file: header "N E", then one "i j" line per undirected edge, i < j.
void write_graph(const std::filesystem::path& path, const SparseMatrix& adjacency);
SparseMatrix read_graph(const std::filesystem::path& path);

// SPPMI file: "i j value" triplets, i < j, full double precision.
void write_sppmi(const std::filesystem::path& path, const SparseMatrix& sppmi);
SparseMatrix read_sppmi(const std::filesystem::path& path, std::size_t dim);

// Chebyshev term cache: one file per order with header "N k" then triplets.
void write_basis(const std::filesystem::path& dir, const ChebyshevBasis& basis);
ChebyshevBasis read_basis(const std::filesystem::path& dir, std::size_t order);

}  // namespace caasr
