#include "caasr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "caasr/errors.hpp"
#include "caasr/fsio.hpp"
#include "caasr/rng.hpp"

namespace caasr {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CooccurrenceCounts count_cooccurrence(const SequenceDataset& train) {
  CooccurrenceCounts counts;
  counts.n_items = train.n_items;
  for (const Sequence& seq : train.sequences) {
    std::set<std::size_t> unique(seq.items.begin(), seq.items.end());
    for (auto it = unique.begin(); it != unique.end(); ++it) {
      auto jt = it;
      for (++jt; jt != unique.end(); ++jt) {
        counts.pair_counts[{*it, *jt}]++;
      }
    }
  }
  counts.item_counts.assign(train.n_items, 0);
  for (const auto& [pair, c] : counts.pair_counts) {
    counts.item_counts[pair.first] += c;
    counts.item_counts[pair.second] += c;
    counts.total_pairs += c;
  }
  return counts;
}

SparseMatrix build_adjacency(const CooccurrenceCounts& counts, std::size_t threshold) {
  std::vector<SparseMatrix::Entry> triplets;
  for (const auto& [pair, c] : counts.pair_counts) {
    if (c >= threshold) {
      triplets.push_back({pair.first, pair.second, 1.0});
      triplets.push_back({pair.second, pair.first, 1.0});
    }
  }
  if (triplets.empty()) {
    std::cerr << "warning: adjacency has no edges at threshold " << threshold << "\n";
  }
  return SparseMatrix::from_triplets(counts.n_items, std::move(triplets));
}

SparseMatrix normalized_laplacian(const SparseMatrix& adjacency) {
  if (!adjacency.is_symmetric()) throw DataError("adjacency must be symmetric");
  std::size_t n = adjacency.dim();
  std::vector<double> degree(n, 0.0);
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    if (e.row == e.col) throw DataError("adjacency must have an empty diagonal");
    degree[e.row] += e.value;
  }
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  }
  std::vector<SparseMatrix::Entry> triplets;
  triplets.reserve(adjacency.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) triplets.push_back({i, i, 1.0});
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    triplets.push_back({e.row, e.col, -e.value * inv_sqrt[e.row] * inv_sqrt[e.col]});
  }
  return SparseMatrix::from_triplets(n, std::move(triplets));
}

double estimate_lambda_max(const SparseMatrix& laplacian, double tol, std::size_t max_iters) {
  std::size_t n = laplacian.dim();
  if (n == 0) throw DataError("empty matrix in lambda estimation");
  Rng rng(0x9e3779b97f4a7c15ULL);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform_range(-1.0, 1.0);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;

  double lambda = 0.0;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::vector<double> w = laplacian.multiply_vector(v);
    double wv = 0.0, wnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wv += w[i] * v[i];
      wnorm += w[i] * w[i];
    }
    wnorm = std::sqrt(wnorm);
    if (wnorm == 0.0) return 0.0;
    double next = wv;  // Rayleigh quotient with unit v
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wnorm;
    if (iter > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  return 2.0;
}

SparseMatrix rescale_laplacian(const SparseMatrix& laplacian, double lambda_max) {
  if (!(lambda_max > 0.0)) throw DataError("lambda_max must be positive");
  return laplacian.scaled(2.0 / lambda_max)
      .axpy(1.0, -1.0, SparseMatrix::identity(laplacian.dim()));
}

ChebyshevBasis chebyshev_basis(const SparseMatrix& rescaled_laplacian, std::size_t order) {
  constexpr double kPrune = 1e-12;
  ChebyshevBasis basis;
  basis.terms.push_back(SparseMatrix::identity(rescaled_laplacian.dim()));
  if (order >= 1) basis.terms.push_back(rescaled_laplacian);
  for (std::size_t k = 2; k <= order; ++k) {
    SparseMatrix t = rescaled_laplacian.multiply(basis.terms[k - 1])
                         .axpy(2.0, -1.0, basis.terms[k - 2]);
    t.prune(kPrune);
    basis.terms.push_back(std::move(t));
  }
  return basis;
}

ChebyshevBasis chebyshev_from_adjacency(const SparseMatrix& adjacency, std::size_t order) {
  SparseMatrix laplacian = normalized_laplacian(adjacency);
  double lambda = estimate_lambda_max(laplacian);
  // Pad the estimate: power iteration approaches from below, and a slight
  // overestimate only compresses the spectrum further inside [-1, 1].
  lambda *= 1.0 + 1e-4;
  ChebyshevBasis basis = chebyshev_basis(rescale_laplacian(laplacian, lambda), order);
  basis.lambda_max = lambda;
  return basis;
}

SparseMatrix build_sppmi(const CooccurrenceCounts& counts, double shift) {
  if (shift < 1.0) throw DataError("SPPMI shift must be at least 1");
  double total = static_cast<double>(counts.total_pairs);
  std::vector<SparseMatrix::Entry> triplets;
  for (const auto& [pair, c] : counts.pair_counts) {
    double denom = static_cast<double>(counts.item_counts[pair.first]) *
                   static_cast<double>(counts.item_counts[pair.second]);
    double pmi = std::log(static_cast<double>(c) * total / denom);
    double value = std::max(pmi - std::log(shift), 0.0);
    if (value > 0.0) {
      triplets.push_back({pair.first, pair.second, value});
      triplets.push_back({pair.second, pair.first, value});
    }
  }
  return SparseMatrix::from_triplets(counts.n_items, std::move(triplets));
}

void write_graph(const std::filesystem::path& path, const SparseMatrix& adjacency) {
  std::ostringstream out;
  std::size_t edges = 0;
  for (const SparseMatrix::Entry& e : adjacency.entries()) edges += e.row < e.col;
  out << adjacency.dim() << ' ' << edges << '\n';
  for (const SparseMatrix::Entry& e : adjacency.entries()) {
    if (e.row < e.col) out << e.row << ' ' << e.col << '\n';
  }
  write_file_atomic(path, out.str());
}

SparseMatrix read_graph(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DataError("empty graph file: " + path.string());
  std::istringstream header(lines[0]);
  std::size_t n = 0, e = 0;
  if (!(header >> n >> e)) throw DataError("bad graph header: " + path.string());
  if (lines.size() != e + 1) throw DataError("graph edge count mismatch: " + path.string());
  std::vector<SparseMatrix::Entry> triplets;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::istringstream line(lines[k]);
    std::size_t i = 0, j = 0;
    if (!(line >> i >> j) || i >= j || j >= n) {
      throw DataError("bad graph edge on line " + std::to_string(k + 1) + ": " + path.string());
    }
    triplets.push_back({i, j, 1.0});
    triplets.push_back({j, i, 1.0});
  }
  return SparseMatrix::from_triplets(n, std::move(triplets));
}

void write_sppmi(const std::filesystem::path& path, const SparseMatrix& sppmi) {
  std::ostringstream out;
  for (const SparseMatrix::Entry& e : sppmi.entries()) {
    if (e.row < e.col) out << e.row << ' ' << e.col << ' ' << format_double(e.value) << '\n';
  }
  write_file_atomic(path, out.str());
}

SparseMatrix read_sppmi(const std::filesystem::path& path, std::size_t dim) {
  std::vector<SparseMatrix::Entry> triplets;
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::istringstream line(lines[k]);
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(line >> i >> j >> v) || i >= j || j >= dim) {
      throw DataError("bad triplet on line " + std::to_string(k + 1) + ": " + path.string());
    }
    triplets.push_back({i, j, v});
    triplets.push_back({j, i, v});
  }
  return SparseMatrix::from_triplets(dim, std::move(triplets));
}

namespace {
std::filesystem::path basis_term_path(const std::filesystem::path& dir, std::size_t k) {
  return dir / ("cheb_" + std::to_string(k) + ".txt");
}
}  // namespace

void write_basis(const std::filesystem::path& dir, const ChebyshevBasis& basis) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < basis.terms.size(); ++k) {
    const SparseMatrix& t = basis.terms[k];
    std::ostringstream out;
    out << t.dim() << ' ' << k << '\n';
    for (const SparseMatrix::Entry& e : t.entries()) {
      out << e.row << ' ' << e.col << ' ' << format_double(e.value) << '\n';
    }
    write_file_atomic(basis_term_path(dir, k), out.str());
  }
}

ChebyshevBasis read_basis(const std::filesystem::path& dir, std::size_t order) {
  ChebyshevBasis basis;
  for (std::size_t k = 0; k <= order; ++k) {
    std::filesystem::path path = basis_term_path(dir, k);
    std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw DataError("empty basis term file: " + path.string());
    std::istringstream header(lines[0]);
    std::size_t n = 0, kk = 0;
    if (!(header >> n >> kk) || kk != k) {
      throw DataError("bad basis term header: " + path.string());
    }
    std::vector<SparseMatrix::Entry> triplets;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      std::istringstream line(lines[li]);
      std::size_t i = 0, j = 0;
      double v = 0.0;
      if (!(line >> i >> j >> v) || i >= n || j >= n) {
        throw DataError("bad triplet on line " + std::to_string(li + 1) + ": " + path.string());
      }
      triplets.push_back({i, j, v});
    }
    basis.terms.push_back(SparseMatrix::from_triplets(n, std::move(triplets)));
  }
  return basis;
}

}  // namespace caasr
