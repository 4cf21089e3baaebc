#pragma once

#include <cstddef>
#include <vector>

namespace caasr {

// Square sparse matrix in coordinate form. Entries are sorted by (row, col)
// and unique; explicit zeros are allowed only transiently (prune removes them).
class SparseMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t dim) : dim_(dim) {}

  // Builds from triplets; duplicate (row, col) values are summed.
  static SparseMatrix from_triplets(std::size_t dim, std::vector<Entry> triplets);
  static SparseMatrix identity(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  double value_at(std::size_t row, std::size_t col) const;
  bool is_symmetric(double tol = 0.0) const;

  // Drops entries with |value| < threshold.
  void prune(double threshold);

  // y = A * x for a dense vector x.
  std::vector<double> multiply_vector(const std::vector<double>& x) const;

  // this * other; both square with matching dim.
  SparseMatrix multiply(const SparseMatrix& other) const;

  // alpha * this + beta * other.
  SparseMatrix axpy(double alpha, double beta, const SparseMatrix& other) const;

  SparseMatrix scaled(double alpha) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace caasr
