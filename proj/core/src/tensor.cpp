#include "mgcnet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace mgcnet {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // lazily allocated by the backward sweep
  bool requires_grad = false;
  const char* op = "leaf";
  // Only parents that require gradients are recorded; the backward closure
  // captures everything else it needs (including keep-alive references).
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

std::atomic<bool> g_debug_finite{false};

void ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::runtime_error(std::string(op) + ": incompatible shapes " +
                           shape_str(a) + " and " + shape_str(b));
}

void require_2d(const Shape& s, const char* op) {
  if (s.size() != 2) {
    throw std::runtime_error(std::string(op) + ": expected a 2-D tensor, got " +
                             shape_str(s));
  }
}

void check_finite(const Node& n, const char* op) {
  if (!g_debug_finite.load(std::memory_order_relaxed)) return;
  for (double v : n.value) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string("non-finite value produced by ") + op);
    }
  }
}

// C(m x n) += A(m x k) * B(k x n)
void gemm_nn_acc(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(m x k) += G(m x n) * B(k x n)^T
void gemm_nt_acc(const double* g, const double* b, double* c, std::size_t m,
                 std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    double* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// C(k x n) += A(m x k)^T * G(m x n)
void gemm_tn_acc(const double* a, const double* g, double* c, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

}  // namespace

struct OpAccess {
  static const NodePtr& node(const Tensor& t) {
    if (!t.node_) throw std::runtime_error("operation on an undefined tensor");
    return t.node_;
  }
  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }

  static NodePtr make(Shape shape, std::vector<double> value, const char* op) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    return n;
  }

  // Wires gradient bookkeeping: the node requires grad iff any input does,
  // and only then are parents and the backward closure retained.
  static Tensor finish(NodePtr n, std::initializer_list<NodePtr> inputs,
                       std::function<void(Node&)> backward) {
    bool rg = false;
    for (const auto& p : inputs) rg = rg || p->requires_grad;
    if (rg) {
      n->requires_grad = true;
      for (const auto& p : inputs) {
        if (p->requires_grad) n->parents.push_back(p);
      }
      n->backward = std::move(backward);
    }
    check_finite(*n, n->op);
    return wrap(std::move(n));
  }
};

// ---- Tensor basics ---------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  auto node = OpAccess::make(std::move(shape), std::vector<double>(n, 0.0), "leaf");
  node->requires_grad = requires_grad;
  return OpAccess::wrap(std::move(node));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  if (n != values.size()) {
    throw std::runtime_error("from_values: " + std::to_string(values.size()) +
                             " values for shape " + shape_str(shape));
  }
  auto node = OpAccess::make(std::move(shape), std::move(values), "leaf");
  node->requires_grad = requires_grad;
  return OpAccess::wrap(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_values({1, 1}, {v}, requires_grad);
}

Tensor Tensor::ones(Shape shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return from_values(std::move(shape), std::vector<double>(n, 1.0), false);
}

const Shape& Tensor::shape() const { return OpAccess::node(*this)->shape; }

std::size_t Tensor::numel() const { return OpAccess::node(*this)->value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  require_2d(s, "rows");
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  require_2d(s, "cols");
  return s[1];
}

bool Tensor::requires_grad() const { return OpAccess::node(*this)->requires_grad; }

const std::vector<double>& Tensor::values() const {
  return OpAccess::node(*this)->value;
}

double Tensor::value_at(std::size_t flat_index) const {
  const auto& v = values();
  if (flat_index >= v.size()) throw std::runtime_error("value_at: index out of range");
  return v[flat_index];
}

double Tensor::scalar_value() const {
  const auto& v = values();
  if (v.size() != 1) {
    throw std::runtime_error("scalar_value: tensor has shape " + shape_str(shape()));
  }
  return v[0];
}

std::vector<double>& Tensor::mutable_values() { return OpAccess::node(*this)->value; }

const std::vector<double>& Tensor::grad() const { return OpAccess::node(*this)->grad; }

bool Tensor::has_grad() const { return !OpAccess::node(*this)->grad.empty(); }

void Tensor::zero_grad() { OpAccess::node(*this)->grad.clear(); }

Tensor Tensor::detach() const {
  const auto& n = OpAccess::node(*this);
  return Tensor::from_values(n->shape, n->value, false);
}

const void* Tensor::node_id() const { return node_.get(); }

// ---- primitives ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const NodePtr& na = OpAccess::node(a);
  const NodePtr& nb = OpAccess::node(b);
  require_2d(na->shape, "matmul");
  require_2d(nb->shape, "matmul");
  const std::size_t m = na->shape[0], k = na->shape[1];
  const std::size_t k2 = nb->shape[0], n = nb->shape[1];
  if (k != k2) shape_error("matmul", na->shape, nb->shape);

  std::vector<double> out(m * n, 0.0);
  gemm_nn_acc(na->value.data(), nb->value.data(), out.data(), m, k, n);
  auto node = OpAccess::make({m, n}, std::move(out), "matmul");
  return OpAccess::finish(node, {na, nb}, [na, nb, m, k, n](Node& self) {
    if (na->requires_grad) {
      ensure_grad(*na);
      gemm_nt_acc(self.grad.data(), nb->value.data(), na->grad.data(), m, n, k);
    }
    if (nb->requires_grad) {
      ensure_grad(*nb);
      gemm_tn_acc(na->value.data(), self.grad.data(), nb->grad.data(), m, k, n);
    }
  });
}

namespace {

template <class Fwd, class Bwd>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* op,
                          Fwd fwd, Bwd bwd) {
  const NodePtr& na = OpAccess::node(a);
  const NodePtr& nb = OpAccess::node(b);
  if (na->shape != nb->shape) shape_error(op, na->shape, nb->shape);
  std::vector<double> out(na->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(na->value[i], nb->value[i]);
  auto node = OpAccess::make(na->shape, std::move(out), op);
  return OpAccess::finish(node, {na, nb}, [na, nb, bwd](Node& self) {
    const bool ga = na->requires_grad, gb = nb->requires_grad;
    if (ga) ensure_grad(*na);
    if (gb) ensure_grad(*nb);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      auto [da, db] = bwd(na->value[i], nb->value[i]);
      if (ga) na->grad[i] += self.grad[i] * da;
      if (gb) nb->grad[i] += self.grad[i] * db;
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return std::pair<double, double>{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return std::pair<double, double>{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y) { return std::pair<double, double>{y, x}; });
}

Tensor scalar_mul(const Tensor& a, double c) {
  const NodePtr& na = OpAccess::node(a);
  std::vector<double> out(na->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] * c;
  auto node = OpAccess::make(na->shape, std::move(out), "scalar_mul");
  return OpAccess::finish(node, {na}, [na, c](Node& self) {
    ensure_grad(*na);
    for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i] * c;
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::runtime_error("concat_cols: no inputs");
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) nodes.push_back(OpAccess::node(p));
  require_2d(nodes[0]->shape, "concat_cols");
  const std::size_t m = nodes[0]->shape[0];
  std::size_t total_cols = 0;
  for (const auto& n : nodes) {
    require_2d(n->shape, "concat_cols");
    if (n->shape[0] != m) shape_error("concat_cols", nodes[0]->shape, n->shape);
    total_cols += n->shape[1];
  }
  std::vector<double> out(m * total_cols);
  std::size_t col_off = 0;
  for (const auto& n : nodes) {
    const std::size_t c = n->shape[1];
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(n->value.data() + i * c, c, out.data() + i * total_cols + col_off);
    }
    col_off += c;
  }
  auto node = OpAccess::make({m, total_cols}, std::move(out), "concat_cols");

  bool rg = false;
  for (const auto& n : nodes) rg = rg || n->requires_grad;
  if (rg) {
    node->requires_grad = true;
    for (const auto& n : nodes) {
      if (n->requires_grad) node->parents.push_back(n);
    }
    node->backward = [nodes, m, total_cols](Node& self) {
      std::size_t off = 0;
      for (const auto& n : nodes) {
        const std::size_t c = n->shape[1];
        if (n->requires_grad) {
          ensure_grad(*n);
          for (std::size_t i = 0; i < m; ++i) {
            const double* g = self.grad.data() + i * total_cols + off;
            double* dst = n->grad.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) dst[j] += g[j];
          }
        }
        off += c;
      }
    };
  }
  check_finite(*node, "concat_cols");
  return OpAccess::wrap(std::move(node));
}

Tensor row_select(const Tensor& a, const std::vector<int>& row_indices) {
  const NodePtr& na = OpAccess::node(a);
  require_2d(na->shape, "row_select");
  const std::size_t n = na->shape[0], d = na->shape[1];
  std::vector<double> out(row_indices.size() * d);
  for (std::size_t i = 0; i < row_indices.size(); ++i) {
    const int r = row_indices[i];
    if (r < 0 || static_cast<std::size_t>(r) >= n) {
      throw std::runtime_error("row_select: index " + std::to_string(r) +
                               " out of range for " + shape_str(na->shape));
    }
    std::copy_n(na->value.data() + static_cast<std::size_t>(r) * d, d,
                out.data() + i * d);
  }
  auto node = OpAccess::make({row_indices.size(), d}, std::move(out), "row_select");
  std::vector<int> idx = row_indices;
  return OpAccess::finish(node, {na}, [na, idx = std::move(idx), d](Node& self) {
    ensure_grad(*na);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double* g = self.grad.data() + i * d;
      double* dst = na->grad.data() + static_cast<std::size_t>(idx[i]) * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
    }
  });
}

Tensor sum_all(const Tensor& a) {
  const NodePtr& na = OpAccess::node(a);
  double s = 0.0;
  for (double v : na->value) s += v;
  auto node = OpAccess::make({1, 1}, {s}, "sum_all");
  return OpAccess::finish(node, {na}, [na](Node& self) {
    ensure_grad(*na);
    const double g = self.grad[0];
    for (double& v : na->grad) v += g;
  });
}

namespace {

Tensor reduce_axis(const Tensor& a, int axis, bool mean, const char* op) {
  const NodePtr& na = OpAccess::node(a);
  require_2d(na->shape, op);
  if (axis != 0 && axis != 1) throw std::runtime_error(std::string(op) + ": axis must be 0 or 1");
  const std::size_t r = na->shape[0], c = na->shape[1];
  const double scale = mean ? 1.0 / static_cast<double>(axis == 0 ? r : c) : 1.0;
  Shape out_shape = axis == 0 ? Shape{1, c} : Shape{r, 1};
  std::vector<double> out(axis == 0 ? c : r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out[axis == 0 ? j : i] += na->value[i * c + j];
    }
  }
  for (double& v : out) v *= scale;
  auto node = OpAccess::make(std::move(out_shape), std::move(out), op);
  return OpAccess::finish(node, {na}, [na, axis, scale, r, c](Node& self) {
    ensure_grad(*na);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        na->grad[i * c + j] += self.grad[axis == 0 ? j : i] * scale;
      }
    }
  });
}

}  // namespace

Tensor sum_axis(const Tensor& a, int axis) { return reduce_axis(a, axis, false, "sum_axis"); }

Tensor mean_axis(const Tensor& a, int axis) { return reduce_axis(a, axis, true, "mean_axis"); }

Tensor softmax(const Tensor& a, int axis, const std::vector<std::uint8_t>* mask) {
  const NodePtr& na = OpAccess::node(a);
  require_2d(na->shape, "softmax");
  if (axis != 0 && axis != 1) throw std::runtime_error("softmax: axis must be 0 or 1");
  const std::size_t r = na->shape[0], c = na->shape[1];
  if (mask && mask->size() != na->value.size()) {
    throw std::runtime_error("softmax: mask size " + std::to_string(mask->size()) +
                             " does not match tensor " + shape_str(na->shape));
  }
  const std::size_t groups = axis == 0 ? c : r;
  const std::size_t span = axis == 0 ? r : c;
  auto flat = [axis, c](std::size_t g, std::size_t i) {
    return axis == 0 ? i * c + g : g * c + i;
  };

  std::vector<double> out(na->value.size(), 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < span; ++i) {
      const std::size_t f = flat(g, i);
      if (mask && (*mask)[f] == 0) continue;
      any = true;
      hi = std::max(hi, na->value[f]);
    }
    if (!any) throw std::runtime_error("softmax: empty attention support");
    double denom = 0.0;
    for (std::size_t i = 0; i < span; ++i) {
      const std::size_t f = flat(g, i);
      if (mask && (*mask)[f] == 0) continue;
      const double e = std::exp(na->value[f] - hi);
      out[f] = e;
      denom += e;
    }
    for (std::size_t i = 0; i < span; ++i) {
      const std::size_t f = flat(g, i);
      if (mask && (*mask)[f] == 0) continue;
      out[f] /= denom;
    }
  }

  auto node = OpAccess::make(na->shape, std::move(out), "softmax");
  std::vector<std::uint8_t> mask_copy;
  if (mask) mask_copy = *mask;
  return OpAccess::finish(
      node, {na},
      [na, groups, span, flat, has_mask = mask != nullptr,
       mask_copy = std::move(mask_copy)](Node& self) {
        ensure_grad(*na);
        for (std::size_t g = 0; g < groups; ++g) {
          double dot_gy = 0.0;
          for (std::size_t i = 0; i < span; ++i) {
            const std::size_t f = flat(g, i);
            if (has_mask && mask_copy[f] == 0) continue;
            dot_gy += self.grad[f] * self.value[f];
          }
          for (std::size_t i = 0; i < span; ++i) {
            const std::size_t f = flat(g, i);
            if (has_mask && mask_copy[f] == 0) continue;
            na->grad[f] += self.value[f] * (self.grad[f] - dot_gy);
          }
        }
      });
}

namespace {

template <class Fwd, class Bwd>
Tensor elementwise_unary(const Tensor& a, const char* op, Fwd fwd, Bwd bwd) {
  const NodePtr& na = OpAccess::node(a);
  std::vector<double> out(na->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(na->value[i]);
  auto node = OpAccess::make(na->shape, std::move(out), op);
  return OpAccess::finish(node, {na}, [na, bwd](Node& self) {
    ensure_grad(*na);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      na->grad[i] += self.grad[i] * bwd(na->value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
  return elementwise_unary(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return elementwise_unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor leaky_relu(const Tensor& a, double negative_slope) {
  return elementwise_unary(
      a, "leaky_relu",
      [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
      [negative_slope](double x, double) { return x > 0.0 ? 1.0 : negative_slope; });
}

Tensor log(const Tensor& a) {
  const NodePtr& na = OpAccess::node(a);
  for (double v : na->value) {
    if (!(v > 0.0)) {
      throw std::runtime_error("log: non-positive input " + std::to_string(v));
    }
  }
  return elementwise_unary(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw std::runtime_error("clamp: lo > hi");
  return elementwise_unary(
      a, "clamp",
      [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor cosine_similarity_rows(const Tensor& a, const Tensor& b) {
  const NodePtr& na = OpAccess::node(a);
  const NodePtr& nb = OpAccess::node(b);
  require_2d(na->shape, "cosine_similarity_rows");
  if (na->shape != nb->shape) shape_error("cosine_similarity_rows", na->shape, nb->shape);
  const std::size_t m = na->shape[0], d = na->shape[1];
  constexpr double kNormGuard = 1e-12;

  std::vector<double> out(m, 0.0);
  std::vector<double> norm_a(m, 0.0), norm_b(m, 0.0);
  std::vector<std::uint8_t> guarded(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = na->value.data() + i * d;
    const double* y = nb->value.data() + i * d;
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      sx += x[j] * x[j];
      sy += y[j] * y[j];
      sxy += x[j] * y[j];
    }
    norm_a[i] = std::sqrt(sx);
    norm_b[i] = std::sqrt(sy);
    if (norm_a[i] < kNormGuard || norm_b[i] < kNormGuard) {
      guarded[i] = 1;  // zero-vector argument: similarity 0, no gradient
    } else {
      out[i] = sxy / (norm_a[i] * norm_b[i]);
    }
  }
  auto node = OpAccess::make({m, 1}, std::move(out), "cosine_similarity_rows");
  return OpAccess::finish(
      node, {na, nb},
      [na, nb, m, d, norm_a = std::move(norm_a), norm_b = std::move(norm_b),
       guarded = std::move(guarded)](Node& self) {
        const bool ga = na->requires_grad, gb = nb->requires_grad;
        if (ga) ensure_grad(*na);
        if (gb) ensure_grad(*nb);
        for (std::size_t i = 0; i < m; ++i) {
          if (guarded[i]) continue;
          const double g = self.grad[i];
          if (g == 0.0) continue;
          const double cosv = self.value[i];
          const double* x = na->value.data() + i * d;
          const double* y = nb->value.data() + i * d;
          const double inv_ab = 1.0 / (norm_a[i] * norm_b[i]);
          const double inv_aa = 1.0 / (norm_a[i] * norm_a[i]);
          const double inv_bb = 1.0 / (norm_b[i] * norm_b[i]);
          for (std::size_t j = 0; j < d; ++j) {
            if (ga) na->grad[i * d + j] += g * (y[j] * inv_ab - cosv * x[j] * inv_aa);
            if (gb) nb->grad[i * d + j] += g * (x[j] * inv_ab - cosv * y[j] * inv_bb);
          }
        }
      });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  const NodePtr& na = OpAccess::node(a);
  const NodePtr& nb = OpAccess::node(b);
  if (na->shape != nb->shape) shape_error("dot", na->shape, nb->shape);
  require_2d(na->shape, "dot");
  if (na->shape[0] != 1 && na->shape[1] != 1) {
    throw std::runtime_error("dot: expected vectors, got " + shape_str(na->shape));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < na->value.size(); ++i) s += na->value[i] * nb->value[i];
  auto node = OpAccess::make({1, 1}, {s}, "dot");
  return OpAccess::finish(node, {na, nb}, [na, nb](Node& self) {
    const double g = self.grad[0];
    if (na->requires_grad) {
      ensure_grad(*na);
      for (std::size_t i = 0; i < na->grad.size(); ++i) na->grad[i] += g * nb->value[i];
    }
    if (nb->requires_grad) {
      ensure_grad(*nb);
      for (std::size_t i = 0; i < nb->grad.size(); ++i) nb->grad[i] += g * na->value[i];
    }
  });
}

Tensor transpose(const Tensor& a) {
  const NodePtr& na = OpAccess::node(a);
  require_2d(na->shape, "transpose");
  const std::size_t r = na->shape[0], c = na->shape[1];
  std::vector<double> out(na->value.size());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = na->value[i * c + j];
  }
  auto node = OpAccess::make({c, r}, std::move(out), "transpose");
  return OpAccess::finish(node, {na}, [na, r, c](Node& self) {
    ensure_grad(*na);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) na->grad[i * c + j] += self.grad[j * r + i];
    }
  });
}

// ---- composites ------------------------------------------------------------

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::runtime_error("stack_rows: no rows");
  if (rows.size() == 1) return rows[0];
  std::vector<Tensor> cols;
  cols.reserve(rows.size());
  for (const auto& r : rows) cols.push_back(transpose(r));
  return transpose(concat_cols(cols));
}

Tensor repeat_row(const Tensor& row, std::size_t m) {
  return matmul(Tensor::ones({m, 1}), row);
}

// ---- tape ------------------------------------------------------------------

void backprop(const Tensor& loss) {
  const NodePtr& root = OpAccess::node(loss);
  if (root->value.size() != 1) {
    throw std::runtime_error("backprop: loss must be a scalar, got " +
                             shape_str(root->shape));
  }
  if (!std::isfinite(root->value[0])) {
    throw std::runtime_error("backprop: non-finite loss value");
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS over grad-requiring parents; reversing the
  // post-order gives the exact reverse topological order of the tape.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  ensure_grad(*root);
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

void set_debug_finite_checks(bool enabled) {
  g_debug_finite.store(enabled, std::memory_order_relaxed);
}

bool debug_finite_checks() { return g_debug_finite.load(std::memory_order_relaxed); }

// ---- gradient verification --------------------------------------------------

double finite_difference_check(const std::function<Tensor()>& build_loss,
                               const std::vector<Tensor>& params,
                               double epsilon) {
  for (const auto& p : params) {
    if (!p.requires_grad()) {
      throw std::runtime_error("finite_difference_check: parameter without gradients");
    }
    const_cast<Tensor&>(p).zero_grad();
  }

  Tensor loss = build_loss();
  if (loss.numel() != 1) {
    throw std::runtime_error("finite_difference_check: objective is not scalar");
  }
  backprop(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.numel(), 0.0));
  }

  auto objective = [&]() {
    const double v = build_loss().scalar_value();
    if (!std::isfinite(v)) {
      throw std::runtime_error("finite_difference_check: non-finite objective value");
    }
    return v;
  };

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& data = const_cast<Tensor&>(params[pi]).mutable_values();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + epsilon;
      const double f_plus = objective();
      data[i] = orig - epsilon;
      const double f_minus = objective();
      data[i] = orig;
      const double fd = (f_plus - f_minus) / (2.0 * epsilon);
      const double bp = analytic[pi][i];
      const double rel = std::abs(fd - bp) /
                         std::max({std::abs(fd), std::abs(bp), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

}  // namespace mgcnet
