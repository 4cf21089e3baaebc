#include "caasr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "caasr/errors.hpp"

namespace caasr {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// C (+)= op(A) * op(B) with optional transposes.
void dense_mm_acc(const DenseTensor& a, bool ta, const DenseTensor& b, bool tb,
                  DenseTensor& out) {
  std::size_t m = ta ? a.cols() : a.rows();
  std::size_t k = ta ? a.rows() : a.cols();
  std::size_t kb = tb ? b.cols() : b.rows();
  std::size_t n = tb ? b.rows() : b.cols();
  if (k != kb) throw DataError("matmul inner dimension mismatch");
  if (out.rows() != m || out.cols() != n) throw DataError("matmul output shape mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double av = ta ? a.at(p, i) : a.at(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        double bv = tb ? b.at(j, p) : b.at(p, j);
        out.at(i, j) += av * bv;
      }
    }
  }
}

DenseTensor dense_mm(const DenseTensor& a, bool ta, const DenseTensor& b, bool tb) {
  std::size_t m = ta ? a.cols() : a.rows();
  std::size_t n = tb ? b.rows() : b.cols();
  DenseTensor out = DenseTensor::zeros({m, n});
  dense_mm_acc(a, ta, b, tb, out);
  return out;
}

void add_into(DenseTensor& dst, const DenseTensor& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

DenseTensor DenseTensor::zeros(std::vector<std::size_t> shape) {
  DenseTensor t;
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

DenseTensor DenseTensor::scalar(double v) {
  DenseTensor t = zeros({1, 1});
  t.data[0] = v;
  return t;
}

DenseTensor DenseTensor::from_rows(std::size_t rows, std::size_t cols,
                                   std::vector<double> values) {
  if (values.size() != rows * cols) throw DataError("from_rows size mismatch");
  DenseTensor t;
  t.shape = {rows, cols};
  t.data = std::move(values);
  return t;
}

std::size_t DenseTensor::numel() const {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return shape.empty() ? 0 : n;
}

std::size_t DenseTensor::rows() const {
  if (rank() != 2) throw DataError("rows() on non-matrix tensor");
  return shape[0];
}

std::size_t DenseTensor::cols() const {
  if (rank() != 2) throw DataError("cols() on non-matrix tensor");
  return shape[1];
}

bool DenseTensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseTensor& ParamStore::create(const std::string& name, std::vector<std::size_t> shape) {
  if (entries_.count(name)) throw DataError("parameter already exists: " + name);
  Entry e;
  e.value = DenseTensor::zeros(shape);
  e.grad = DenseTensor::zeros(shape);
  e.rms = DenseTensor::zeros(std::move(shape));
  auto [it, ok] = entries_.emplace(name, std::move(e));
  (void)ok;
  return it->second.value;
}

bool ParamStore::has(const std::string& name) const { return entries_.count(name) > 0; }

DenseTensor& ParamStore::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("unknown parameter: " + name);
  return it->second.value;
}

const DenseTensor& ParamStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("unknown parameter: " + name);
  return it->second.value;
}

DenseTensor& ParamStore::grad(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("unknown parameter: " + name);
  return it->second.grad;
}

void ParamStore::accumulate_grad(const std::string& name, const DenseTensor& g) {
  DenseTensor& dst = grad(name);
  if (!dst.same_shape(g)) throw DataError("gradient shape mismatch for " + name);
  add_into(dst, g);
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) {
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
  }
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::total_coords() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.numel();
  return n;
}

void ParamStore::init_uniform(double lo, double hi, Rng& rng) {
  for (auto& [name, e] : entries_) {
    for (double& v : e.value.data) v = rng.uniform_range(lo, hi);
  }
}

void rmsprop_step(ParamStore& params, const OptimizerConfig& cfg) {
  for (auto& [name, e] : params.entries_) {
    for (std::size_t i = 0; i < e.value.data.size(); ++i) {
      double g = e.grad.data[i];
      double s = cfg.decay * e.rms.data[i] + (1.0 - cfg.decay) * g * g;
      e.rms.data[i] = s;
      e.value.data[i] -= cfg.learning_rate * g / std::sqrt(s + cfg.epsilon);
    }
    if (!e.value.all_finite() || !e.rms.all_finite()) {
      throw NumericError("non-finite parameter after optimizer step: " + name);
    }
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
  }
}

Tape::ValueRef Tape::push(DenseTensor value, bool needs_grad,
                          std::function<void(Tape&, std::size_t)> backward_fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return ValueRef{nodes_.size() - 1};
}

Tape::ValueRef Tape::leaf(DenseTensor v) {
  if (!v.all_finite()) throw NumericError("non-finite leaf value");
  return push(std::move(v), true, nullptr);
}

Tape::ValueRef Tape::constant(DenseTensor v) {
  if (!v.all_finite()) throw NumericError("non-finite constant value");
  return push(std::move(v), false, nullptr);
}

const DenseTensor& Tape::value(ValueRef v) const { return node(v).value; }

const DenseTensor& Tape::grad(ValueRef v) const {
  const Node& n = node(v);
  if (n.grad.data.empty()) throw DataError("gradient not computed for this value");
  return n.grad;
}

void Tape::clear() { nodes_.clear(); }

void Tape::backward(ValueRef loss) {
  Node& ln = node(loss);
  if (ln.value.numel() != 1) throw DataError("backward requires a scalar loss");
  for (Node& n : nodes_) {
    n.grad = DenseTensor::zeros(n.value.shape);
  }
  ln.grad.data[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward_fn) n.backward_fn(*this, i);
  }
}

namespace {
void check_result(const DenseTensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
}
}  // namespace

Tape::ValueRef Tape::matmul(ValueRef a, ValueRef b) {
  const DenseTensor& av = value(a);
  const DenseTensor& bv = value(b);
  DenseTensor out = dense_mm(av, false, bv, false);
  check_result(out, "matmul");
  bool ng = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(out), ng, [a, b](Tape& t, std::size_t self) {
    const DenseTensor& g = t.nodes_[self].grad;
    if (t.node(a).needs_grad) dense_mm_acc(g, false, t.node(b).value, true, t.node(a).grad);
    if (t.node(b).needs_grad) dense_mm_acc(t.node(a).value, true, g, false, t.node(b).grad);
  });
}

Tape::ValueRef Tape::matmul_nt(ValueRef a, ValueRef b) {
  const DenseTensor& av = value(a);
  const DenseTensor& bv = value(b);
  DenseTensor out = dense_mm(av, false, bv, true);
  check_result(out, "matmul_nt");
  bool ng = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(out), ng, [a, b](Tape& t, std::size_t self) {
    const DenseTensor& g = t.nodes_[self].grad;
    if (t.node(a).needs_grad) dense_mm_acc(g, false, t.node(b).value, false, t.node(a).grad);
    if (t.node(b).needs_grad) dense_mm_acc(g, true, t.node(a).value, false, t.node(b).grad);
  });
}

Tape::ValueRef Tape::spmm(const SparseMatrix& s, ValueRef x) {
  const DenseTensor& xv = value(x);
  if (xv.rows() != s.dim()) throw DataError("spmm dimension mismatch");
  std::size_t d = xv.cols();
  DenseTensor out = DenseTensor::zeros({s.dim(), d});
  for (const SparseMatrix::Entry& e : s.entries()) {
    for (std::size_t j = 0; j < d; ++j) out.at(e.row, j) += e.value * xv.at(e.col, j);
  }
  check_result(out, "spmm");
  const SparseMatrix* sp = &s;
  return push(std::move(out), node(x).needs_grad, [sp, x, d](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const DenseTensor& g = t.nodes_[self].grad;
    DenseTensor& dx = t.node(x).grad;
    for (const SparseMatrix::Entry& e : sp->entries()) {
      for (std::size_t j = 0; j < d; ++j) dx.at(e.col, j) += e.value * g.at(e.row, j);
    }
  });
}

Tape::ValueRef Tape::gather(ValueRef z, std::vector<std::size_t> indices) {
  const DenseTensor& zv = value(z);
  std::size_t d = zv.cols();
  for (std::size_t idx : indices) {
    if (idx >= zv.rows()) throw DataError("gather index out of range");
  }
  DenseTensor out = DenseTensor::zeros({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = zv.at(indices[i], j);
  }
  check_result(out, "gather");
  return push(std::move(out), node(z).needs_grad,
              [z, idx = std::move(indices), d](Tape& t, std::size_t self) {
                if (!t.node(z).needs_grad) return;
                const DenseTensor& g = t.nodes_[self].grad;
                DenseTensor& dz = t.node(z).grad;
                for (std::size_t i = 0; i < idx.size(); ++i) {
                  for (std::size_t j = 0; j < d; ++j) dz.at(idx[i], j) += g.at(i, j);
                }
              });
}

Tape::ValueRef Tape::segment_mean(ValueRef z, std::vector<std::size_t> flat,
                                  std::vector<std::size_t> offsets) {
  const DenseTensor& zv = value(z);
  std::size_t d = zv.cols();
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != flat.size()) {
    throw DataError("segment_mean offsets must start at 0 and end at flat size");
  }
  std::size_t batch = offsets.size() - 1;
  DenseTensor out = DenseTensor::zeros({batch, d});
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t lo = offsets[b], hi = offsets[b + 1];
    if (hi <= lo) throw DataError("segment_mean empty segment");
    for (std::size_t i = lo; i < hi; ++i) {
      if (flat[i] >= zv.rows()) throw DataError("segment_mean index out of range");
      for (std::size_t j = 0; j < d; ++j) out.at(b, j) += zv.at(flat[i], j);
    }
    double inv = 1.0 / static_cast<double>(hi - lo);
    for (std::size_t j = 0; j < d; ++j) out.at(b, j) *= inv;
  }
  check_result(out, "segment_mean");
  return push(std::move(out), node(z).needs_grad,
              [z, fl = std::move(flat), off = std::move(offsets), d](Tape& t, std::size_t self) {
                if (!t.node(z).needs_grad) return;
                const DenseTensor& g = t.nodes_[self].grad;
                DenseTensor& dz = t.node(z).grad;
                for (std::size_t b = 0; b + 1 < off.size(); ++b) {
                  double inv = 1.0 / static_cast<double>(off[b + 1] - off[b]);
                  for (std::size_t i = off[b]; i < off[b + 1]; ++i) {
                    for (std::size_t j = 0; j < d; ++j) dz.at(fl[i], j) += inv * g.at(b, j);
                  }
                }
              });
}

// kind: 0 = add, 1 = sub, 2 = mul. Supports exact shapes and row-broadcast of
// a (1, C) operand against an (R, C) operand.
Tape::ValueRef Tape::binary_elementwise(ValueRef a, ValueRef b, int kind) {
  const DenseTensor& av = value(a);
  const DenseTensor& bv = value(b);
  bool a_bcast = false, b_bcast = false;
  if (!av.same_shape(bv)) {
    if (av.rank() == 2 && bv.rank() == 2 && bv.rows() == 1 && bv.cols() == av.cols()) {
      b_bcast = true;
    } else if (av.rank() == 2 && bv.rank() == 2 && av.rows() == 1 && av.cols() == bv.cols()) {
      a_bcast = true;
    } else {
      throw DataError("elementwise shape mismatch");
    }
  }
  std::size_t rows = a_bcast ? bv.rows() : av.rows();
  std::size_t cols = av.cols();
  DenseTensor out = DenseTensor::zeros({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double x = av.at(a_bcast ? 0 : r, c);
      double y = bv.at(b_bcast ? 0 : r, c);
      out.at(r, c) = kind == 0 ? x + y : kind == 1 ? x - y : x * y;
    }
  }
  check_result(out, kind == 0 ? "add" : kind == 1 ? "sub" : "mul");
  bool ng = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(out), ng,
              [a, b, kind, a_bcast, b_bcast, rows, cols](Tape& t, std::size_t self) {
                const DenseTensor& g = t.nodes_[self].grad;
                for (std::size_t r = 0; r < rows; ++r) {
                  for (std::size_t c = 0; c < cols; ++c) {
                    double gv = g.at(r, c);
                    if (t.node(a).needs_grad) {
                      double da = kind == 2 ? gv * t.node(b).value.at(b_bcast ? 0 : r, c) : gv;
                      t.node(a).grad.at(a_bcast ? 0 : r, c) += da;
                    }
                    if (t.node(b).needs_grad) {
                      double db = kind == 2 ? gv * t.node(a).value.at(a_bcast ? 0 : r, c)
                                  : kind == 1 ? -gv
                                              : gv;
                      t.node(b).grad.at(b_bcast ? 0 : r, c) += db;
                    }
                  }
                }
              });
}

Tape::ValueRef Tape::add(ValueRef a, ValueRef b) { return binary_elementwise(a, b, 0); }
Tape::ValueRef Tape::sub(ValueRef a, ValueRef b) { return binary_elementwise(a, b, 1); }
Tape::ValueRef Tape::mul(ValueRef a, ValueRef b) { return binary_elementwise(a, b, 2); }

Tape::ValueRef Tape::sigmoid(ValueRef x) {
  DenseTensor out = value(x);
  for (double& v : out.data) v = stable_sigmoid(v);
  check_result(out, "sigmoid");
  return push(std::move(out), node(x).needs_grad, [x](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const Node& n = t.nodes_[self];
    DenseTensor& dx = t.node(x).grad;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) {
      double y = n.value.data[i];
      dx.data[i] += n.grad.data[i] * y * (1.0 - y);
    }
  });
}

Tape::ValueRef Tape::tanh(ValueRef x) {
  DenseTensor out = value(x);
  for (double& v : out.data) v = std::tanh(v);
  check_result(out, "tanh");
  return push(std::move(out), node(x).needs_grad, [x](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const Node& n = t.nodes_[self];
    DenseTensor& dx = t.node(x).grad;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) {
      double y = n.value.data[i];
      dx.data[i] += n.grad.data[i] * (1.0 - y * y);
    }
  });
}

Tape::ValueRef Tape::softplus(ValueRef x) {
  DenseTensor out = value(x);
  for (double& v : out.data) v = stable_softplus(v);
  check_result(out, "softplus");
  return push(std::move(out), node(x).needs_grad, [x](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const Node& n = t.nodes_[self];
    DenseTensor& dx = t.node(x).grad;
    const DenseTensor& xv = t.node(x).value;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) {
      dx.data[i] += n.grad.data[i] * stable_sigmoid(xv.data[i]);
    }
  });
}

Tape::ValueRef Tape::neg(ValueRef x) { return scale(x, -1.0); }

Tape::ValueRef Tape::scale(ValueRef x, double c) {
  DenseTensor out = value(x);
  for (double& v : out.data) v *= c;
  check_result(out, "scale");
  return push(std::move(out), node(x).needs_grad, [x, c](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const DenseTensor& g = t.nodes_[self].grad;
    DenseTensor& dx = t.node(x).grad;
    for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += c * g.data[i];
  });
}

Tape::ValueRef Tape::transpose(ValueRef x) {
  const DenseTensor& xv = value(x);
  DenseTensor out = DenseTensor::zeros({xv.cols(), xv.rows()});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out.at(c, r) = xv.at(r, c);
  }
  return push(std::move(out), node(x).needs_grad, [x](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const DenseTensor& g = t.nodes_[self].grad;
    DenseTensor& dx = t.node(x).grad;
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) dx.at(c, r) += g.at(r, c);
    }
  });
}

Tape::ValueRef Tape::take_diag(ValueRef x) {
  const DenseTensor& xv = value(x);
  if (xv.rows() != xv.cols()) throw DataError("take_diag requires a square matrix");
  std::size_t n = xv.rows();
  DenseTensor out = DenseTensor::zeros({1, n});
  for (std::size_t i = 0; i < n; ++i) out.at(0, i) = xv.at(i, i);
  return push(std::move(out), node(x).needs_grad, [x, n](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    const DenseTensor& g = t.nodes_[self].grad;
    DenseTensor& dx = t.node(x).grad;
    for (std::size_t i = 0; i < n; ++i) dx.at(i, i) += g.at(0, i);
  });
}

Tape::ValueRef Tape::row_dot(ValueRef a, ValueRef b) {
  const DenseTensor& av = value(a);
  const DenseTensor& bv = value(b);
  if (!av.same_shape(bv)) throw DataError("row_dot shape mismatch");
  std::size_t m = av.rows(), d = av.cols();
  DenseTensor out = DenseTensor::zeros({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += av.at(i, j) * bv.at(i, j);
    out.at(i, 0) = s;
  }
  check_result(out, "row_dot");
  bool ng = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(out), ng, [a, b, m, d](Tape& t, std::size_t self) {
    const DenseTensor& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < m; ++i) {
      double gv = g.at(i, 0);
      for (std::size_t j = 0; j < d; ++j) {
        if (t.node(a).needs_grad) t.node(a).grad.at(i, j) += gv * t.node(b).value.at(i, j);
        if (t.node(b).needs_grad) t.node(b).grad.at(i, j) += gv * t.node(a).value.at(i, j);
      }
    }
  });
}

Tape::ValueRef Tape::sum(ValueRef x) {
  const DenseTensor& xv = value(x);
  double s = 0.0;
  for (double v : xv.data) s += v;
  DenseTensor out = DenseTensor::scalar(s);
  check_result(out, "sum");
  return push(std::move(out), node(x).needs_grad, [x](Tape& t, std::size_t self) {
    if (!t.node(x).needs_grad) return;
    double gv = t.nodes_[self].grad.data[0];
    for (double& v : t.node(x).grad.data) v += gv;
  });
}

Tape::ValueRef Tape::dropout(ValueRef x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw DataError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const DenseTensor& xv = value(x);
  std::vector<double> mask(xv.data.size());
  double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  DenseTensor out = xv;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask[i];
  check_result(out, "dropout");
  return push(std::move(out), node(x).needs_grad,
              [x, mk = std::move(mask)](Tape& t, std::size_t self) {
                if (!t.node(x).needs_grad) return;
                const DenseTensor& g = t.nodes_[self].grad;
                DenseTensor& dx = t.node(x).grad;
                for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i] * mk[i];
              });
}

GradCheckResult gradient_check(const LossBuilder& build, ParamStore& params, double eps,
                               std::size_t min_coords, std::uint64_t seed) {
  auto forward_loss = [&]() {
    Tape t;
    std::map<std::string, Tape::ValueRef> leaves;
    for (const std::string& name : params.names()) leaves[name] = t.leaf(params.value(name));
    Tape::ValueRef loss = build(t, leaves);
    const DenseTensor& lv = t.value(loss);
    if (lv.numel() != 1) throw DataError("gradient_check loss must be scalar");
    return lv.data[0];
  };

  Tape t;
  std::map<std::string, Tape::ValueRef> leaves;
  for (const std::string& name : params.names()) leaves[name] = t.leaf(params.value(name));
  Tape::ValueRef loss = build(t, leaves);
  if (t.value(loss).numel() != 1) throw DataError("gradient_check loss must be scalar");
  t.backward(loss);
  std::map<std::string, DenseTensor> analytic;
  for (const std::string& name : params.names()) analytic[name] = t.grad(leaves[name]);

  struct Coord {
    std::string name;
    std::size_t idx;
  };
  std::vector<Coord> coords;
  for (const std::string& name : params.names()) {
    std::size_t n = params.value(name).numel();
    for (std::size_t i = 0; i < n; ++i) coords.push_back({name, i});
  }
  if (coords.size() > min_coords) {
    Rng rng(seed);
    for (std::size_t i = 0; i < min_coords; ++i) {
      std::size_t j = i + rng.uniform_int(coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(min_coords);
  }

  GradCheckResult result;
  result.coords_checked = coords.size();
  for (const Coord& c : coords) {
    double& slot = params.value(c.name).data[c.idx];
    double orig = slot;
    slot = orig + eps;
    double fp = forward_loss();
    slot = orig - eps;
    double fm = forward_loss();
    slot = orig;
    double numeric = (fp - fm) / (2.0 * eps);
    double a = analytic[c.name].data[c.idx];
    double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
  }
  return result;
}

}  // namespace caasr
