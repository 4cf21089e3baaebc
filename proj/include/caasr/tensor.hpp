#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "caasr/rng.hpp"
#include "caasr/sparse.hpp"

namespace caasr {

// Row-major dense tensor of doubles. Tape ops work on rank-2 tensors; scalars
// are represented as 1x1.
struct DenseTensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  DenseTensor() = default;
  static DenseTensor zeros(std::vector<std::size_t> shape);
  static DenseTensor scalar(double v);
  static DenseTensor from_rows(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  bool same_shape(const DenseTensor& other) const { return shape == other.shape; }
  bool all_finite() const;
};

struct OptimizerConfig {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;
};

// Named parameter tensors with paired gradient and optimizer state. Iteration
// is always in sorted name order so seeded runs are reproducible.
class ParamStore {
 public:
  DenseTensor& create(const std::string& name, std::vector<std::size_t> shape);
  bool has(const std::string& name) const;
  DenseTensor& value(const std::string& name);
  const DenseTensor& value(const std::string& name) const;
  DenseTensor& grad(const std::string& name);
  void accumulate_grad(const std::string& name, const DenseTensor& g);
  void zero_grads();
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t total_coords() const;

  // Fills every parameter with uniform draws in [lo, hi), in sorted name order.
  void init_uniform(double lo, double hi, Rng& rng);

 private:
  struct Entry {
    DenseTensor value;
    DenseTensor grad;
    DenseTensor rms;
  };
  std::map<std::string, Entry> entries_;

  friend void rmsprop_step(ParamStore&, const OptimizerConfig&);
};

// RMSprop update over every parameter: s <- decay*s + (1-decay)*g^2,
// theta <- theta - lr * g / sqrt(s + eps). Gradients are zeroed afterwards.
void rmsprop_step(ParamStore& params, const OptimizerConfig& cfg);

// Reverse-mode autodiff over a per-forward-pass recorded tape. Values are
// referenced by opaque ids; backward() walks the tape in reverse. Every op
// checks its output for NaN/Inf and throws NumericError on violation.
class Tape {
 public:
  struct ValueRef {
    std::size_t id;
  };

  // Leaf with gradient tracking (parameters, unrolled state).
  ValueRef leaf(DenseTensor v);
  // Leaf without gradient tracking (inputs, masks).
  ValueRef constant(DenseTensor v);

  ValueRef matmul(ValueRef a, ValueRef b);     // (m,k)x(k,n) -> (m,n)
  ValueRef matmul_nt(ValueRef a, ValueRef b);  // (m,k)x(n,k)^T -> (m,n)
  ValueRef spmm(const SparseMatrix& s, ValueRef x);  // s must outlive the tape
  ValueRef gather(ValueRef z, std::vector<std::size_t> indices);
  // Row b of the result is the mean of z rows flat[offsets[b] .. offsets[b+1]).
  ValueRef segment_mean(ValueRef z, std::vector<std::size_t> flat,
                        std::vector<std::size_t> offsets);
  ValueRef add(ValueRef a, ValueRef b);
  ValueRef sub(ValueRef a, ValueRef b);
  ValueRef mul(ValueRef a, ValueRef b);
  ValueRef sigmoid(ValueRef x);
  ValueRef tanh(ValueRef x);
  ValueRef softplus(ValueRef x);
  ValueRef neg(ValueRef x);
  ValueRef scale(ValueRef x, double c);
  ValueRef transpose(ValueRef x);
  ValueRef take_diag(ValueRef x);            // (n,n) -> (1,n)
  ValueRef row_dot(ValueRef a, ValueRef b);  // (m,d),(m,d) -> (m,1)
  ValueRef sum(ValueRef x);                  // -> (1,1)
  // Inverted dropout: keeps scale 1/(1-rate) so expectation is unchanged.
  // Identity when rate == 0 or training is false (no rng draws in that case).
  ValueRef dropout(ValueRef x, double rate, bool training, Rng& rng);

  const DenseTensor& value(ValueRef v) const;
  const DenseTensor& grad(ValueRef v) const;
  void backward(ValueRef loss);
  void clear();
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    DenseTensor value;
    DenseTensor grad;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> backward_fn;
  };
  std::vector<Node> nodes_;

  ValueRef push(DenseTensor value, bool needs_grad,
                std::function<void(Tape&, std::size_t)> backward_fn);
  Node& node(ValueRef v) { return nodes_[v.id]; }
  const Node& node(ValueRef v) const { return nodes_[v.id]; }
  ValueRef binary_elementwise(ValueRef a, ValueRef b, int kind);
};

// Builds the loss on a fresh tape from leaves registered for every parameter
// in the store (keyed by parameter name). Must be deterministic.
using LossBuilder =
    std::function<Tape::ValueRef(Tape&, const std::map<std::string, Tape::ValueRef>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// Central finite differences on a sampled subset of parameter coordinates
// (min_coords of them, or all if fewer exist). Relative error per coordinate:
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult gradient_check(const LossBuilder& build, ParamStore& params, double eps,
                               std::size_t min_coords, std::uint64_t seed);

}  // namespace caasr
