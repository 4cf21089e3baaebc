#include "caasr/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "caasr/errors.hpp"

namespace caasr {

SparseMatrix SparseMatrix::from_triplets(std::size_t dim, std::vector<Entry> triplets) {
  for (const Entry& e : triplets) {
    if (e.row >= dim || e.col >= dim) throw DataError("sparse entry out of bounds");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(dim);
  for (const Entry& e : triplets) {
    if (!m.entries_.empty() && m.entries_.back().row == e.row && m.entries_.back().col == e.col) {
      m.entries_.back().value += e.value;
    } else {
      m.entries_.push_back(e);
    }
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t dim) {
  SparseMatrix m(dim);
  m.entries_.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) m.entries_.push_back({i, i, 1.0});
  return m;
}

double SparseMatrix::value_at(std::size_t row, std::size_t col) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{row, col, 0.0},
                             [](const Entry& a, const Entry& b) {
                               return a.row != b.row ? a.row < b.row : a.col < b.col;
                             });
  if (it != entries_.end() && it->row == row && it->col == col) return it->value;
  return 0.0;
}

bool SparseMatrix::is_symmetric(double tol) const {
  for (const Entry& e : entries_) {
    if (std::abs(e.value - value_at(e.col, e.row)) > tol) return false;
  }
  return true;
}

void SparseMatrix::prune(double threshold) {
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [&](const Entry& e) { return std::abs(e.value) < threshold; }),
                 entries_.end());
}

std::vector<double> SparseMatrix::multiply_vector(const std::vector<double>& x) const {
  if (x.size() != dim_) throw DataError("sparse matvec dimension mismatch");
  std::vector<double> y(dim_, 0.0);
  for (const Entry& e : entries_) y[e.row] += e.value * x[e.col];
  return y;
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& other) const {
  if (dim_ != other.dim_) throw DataError("sparse matmul dimension mismatch");
  // Row-wise expansion with a dense accumulator per row.
  std::vector<std::size_t> other_row_start(dim_ + 1, 0);
  for (const Entry& e : other.entries_) other_row_start[e.row + 1]++;
  for (std::size_t i = 0; i < dim_; ++i) other_row_start[i + 1] += other_row_start[i];

  std::vector<double> acc(dim_, 0.0);
  std::vector<char> seen(dim_, 0);
  std::vector<std::size_t> touched;
  std::vector<Entry> result;
  std::size_t i = 0;
  while (i < entries_.size()) {
    std::size_t row = entries_[i].row;
    touched.clear();
    for (; i < entries_.size() && entries_[i].row == row; ++i) {
      std::size_t k = entries_[i].col;
      double v = entries_[i].value;
      for (std::size_t j = other_row_start[k]; j < other_row_start[k + 1]; ++j) {
        const Entry& oe = other.entries_[j];
        if (!seen[oe.col]) {
          seen[oe.col] = 1;
          touched.push_back(oe.col);
        }
        acc[oe.col] += v * oe.value;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t col : touched) {
      result.push_back({row, col, acc[col]});
      acc[col] = 0.0;
      seen[col] = 0;
    }
  }
  SparseMatrix m(dim_);
  m.entries_ = std::move(result);
  return m;
}

SparseMatrix SparseMatrix::axpy(double alpha, double beta, const SparseMatrix& other) const {
  if (dim_ != other.dim_) throw DataError("sparse axpy dimension mismatch");
  std::vector<Entry> triplets;
  triplets.reserve(entries_.size() + other.entries_.size());
  for (const Entry& e : entries_) triplets.push_back({e.row, e.col, alpha * e.value});
  for (const Entry& e : other.entries_) triplets.push_back({e.row, e.col, beta * e.value});
  return from_triplets(dim_, std::move(triplets));
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
  SparseMatrix m(dim_);
  m.entries_ = entries_;
  for (Entry& e : m.entries_) e.value *= alpha;
  return m;
}

}  // namespace caasr
