#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mgcnet {

// Dense row-major tensor of doubles with reverse-mode automatic
// differentiation. All arithmetic ops below operate on 2-D tensors; scalars
// are (1 x 1). Ops record a tape node when any input requires gradients, so
// forward passes over frozen values build no graph at all.
//
// Gradients accumulate additively: calling backprop twice without zero_grad
// doubles leaf gradients, and a tensor consumed by several ops receives one
// contribution per use.

using Shape = std::vector<std::size_t>;

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor ones(Shape shape);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t rows() const;
  std::size_t cols() const;
  bool requires_grad() const;

  const std::vector<double>& values() const;
  double value_at(std::size_t flat_index) const;
  double scalar_value() const;  // numel() must be 1

  // Raw storage access for parameter updates and finite differencing.
  // Mutating a non-leaf tensor invalidates any recorded tape.
  std::vector<double>& mutable_values();

  // Gradient buffer; empty until backprop touches this tensor.
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  // Value copy detached from the tape (requires_grad = false, no parents).
  Tensor detach() const;

  // Identity of the underlying node; aliased parameters compare equal.
  const void* node_id() const;

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct OpAccess;
};

// ---- differentiable primitives ------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scalar_mul(const Tensor& a, double c);
// Concatenation along the last axis; all inputs share the row count.
Tensor concat_cols(const std::vector<Tensor>& parts);
// Row gather (embedding lookup). Duplicate indices accumulate gradient.
Tensor row_select(const Tensor& a, const std::vector<int>& row_indices);
Tensor sum_all(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
// Softmax along `axis` with the usual max subtraction. `mask` (if given) has
// one byte per element; zero entries are excluded and get probability 0.
// A fully masked group raises "empty attention support".
Tensor softmax(const Tensor& a, int axis,
               const std::vector<std::uint8_t>* mask = nullptr);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double negative_slope = 0.2);
// Row-wise cosine similarity of two (m x d) tensors -> (m x 1). A row with a
// near-zero norm on either side yields similarity 0 with zero gradient.
Tensor cosine_similarity_rows(const Tensor& a, const Tensor& b);
Tensor dot(const Tensor& a, const Tensor& b);  // same shape vectors -> (1 x 1)
Tensor transpose(const Tensor& a);
Tensor log(const Tensor& a);  // rejects non-positive inputs
Tensor clamp(const Tensor& a, double lo, double hi);

// ---- composites ----------------------------------------------------------

// Stack (1 x d) rows into an (m x d) tensor. Built from transpose + concat.
Tensor stack_rows(const std::vector<Tensor>& rows);
// (m x d) tensor whose every row equals `row` (1 x d).
Tensor repeat_row(const Tensor& row, std::size_t m);

// ---- tape ----------------------------------------------------------------

// Reverse-mode sweep from a scalar loss. Visits the recorded tape in reverse
// topological order exactly once per node.
void backprop(const Tensor& loss);

// When enabled, every primitive asserts its outputs are finite and throws
// naming the op otherwise. Off by default; tests switch it on.
void set_debug_finite_checks(bool enabled);
bool debug_finite_checks();

// ---- gradient verification ------------------------------------------------

// Central-difference check of d(build_loss)/d(params). `build_loss` must
// rebuild the forward pass from the current parameter values on every call.
// Returns the worst relative error max(|fd - bp|) / max(|fd|, |bp|, 1e-8)
// over all parameter coordinates.
double finite_difference_check(const std::function<Tensor()>& build_loss,
                               const std::vector<Tensor>& params,
                               double epsilon = 1e-5);

std::string shape_str(const Shape& s);

}  // namespace mgcnet
