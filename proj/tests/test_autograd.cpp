#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "mgcnet/rng.hpp"
#include "mgcnet/tensor.hpp"

using namespace mgcnet;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian() * 0.5;
  return Tensor::from_values(std::move(shape), std::move(v), requires_grad);
}

// Scalarizes an arbitrary output so the full Jacobian is exercised: the
// probe weights are fixed random constants, so d(sum(w .* f))/dp probes
// every output coordinate of f.
double check_op(const std::function<Tensor()>& out_builder,
                const std::vector<Tensor>& params, std::uint64_t probe_seed) {
  Rng probe(probe_seed);
  Tensor probed = out_builder();
  std::vector<double> w(probed.numel());
  for (auto& x : w) x = probe.gaussian();
  auto weights = Tensor::from_values(probed.shape(), std::move(w));
  auto build_loss = [&]() { return sum_all(mul(out_builder(), weights)); };
  return finite_difference_check(build_loss, params);
}

}  // namespace

TEST_SUITE_BEGIN("autograd");

TEST_CASE("softmax forward values and row sums") {
  auto t = Tensor::from_values({1, 2}, {0.0, 0.0});
  auto s = softmax(t, 1);
  CHECK(s.value_at(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.value_at(1) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_tensor({4, 6}, rng, false);
    for (int axis : {0, 1}) {
      auto y = softmax(x, axis);
      const std::size_t groups = axis == 0 ? 6 : 4;
      const std::size_t span = axis == 0 ? 4 : 6;
      for (std::size_t g = 0; g < groups; ++g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < span; ++i) {
          sum += y.value_at(axis == 0 ? i * 6 + g : g * 6 + i);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("softmax is invariant to constant shifts and handles masks") {
  auto a = softmax(Tensor::from_values({1, 3}, {1.0, 2.0, 3.0}), 1);
  auto b = softmax(Tensor::from_values({1, 3}, {1001.0, 1002.0, 1003.0}), 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.value_at(i) == doctest::Approx(b.value_at(i)).epsilon(1e-12));
  }

  std::vector<std::uint8_t> mask = {1, 0, 1};
  auto m = softmax(Tensor::from_values({1, 3}, {0.0, 50.0, 0.0}), 1, &mask);
  CHECK(m.value_at(0) == doctest::Approx(0.5));
  CHECK(m.value_at(1) == 0.0);
  CHECK(m.value_at(2) == doctest::Approx(0.5));

  std::vector<std::uint8_t> all_masked = {0, 0, 0};
  CHECK_THROWS_WITH_AS(
      softmax(Tensor::from_values({1, 3}, {1.0, 2.0, 3.0}), 1, &all_masked),
      "softmax: empty attention support", std::runtime_error);
}

TEST_CASE("matmul forward and shape errors") {
  auto a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = Tensor::from_values({3, 2}, {7, 8, 9, 10, 11, 12});
  auto c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 2);
  CHECK(c.value_at(0) == doctest::Approx(58));
  CHECK(c.value_at(1) == doctest::Approx(64));
  CHECK(c.value_at(2) == doctest::Approx(139));
  CHECK(c.value_at(3) == doctest::Approx(154));

  CHECK_THROWS_AS(matmul(a, Tensor::from_values({2, 2}, {1, 2, 3, 4})),
                  std::runtime_error);
}

TEST_CASE("backprop requires a scalar loss") {
  auto a = Tensor::from_values({1, 2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(backprop(add(a, a)), std::runtime_error);
}

TEST_CASE("fan-out accumulates gradients additively") {
  auto x = Tensor::scalar(3.0, true);
  auto y = add(mul(x, x), x);  // x^2 + x, dy/dx = 2x + 1 = 7
  backprop(y);
  CHECK(x.grad()[0] == doctest::Approx(7.0));

  // A second sweep without zeroing doubles the leaf gradient.
  auto y2 = add(mul(x, x), x);
  backprop(y2);
  CHECK(x.grad()[0] == doctest::Approx(14.0));

  x.zero_grad();
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("no tape is recorded for frozen inputs") {
  auto a = Tensor::from_values({1, 2}, {1.0, 2.0}, false);
  auto b = Tensor::from_values({1, 2}, {3.0, 4.0}, false);
  auto c = sum_all(mul(a, b));
  CHECK_FALSE(c.requires_grad());
  backprop(c);  // no-op without gradient-requiring leaves
  CHECK_FALSE(a.has_grad());
}

TEST_CASE("detach cuts the tape") {
  auto x = Tensor::scalar(2.0, true);
  auto d = mul(x, x).detach();
  CHECK_FALSE(d.requires_grad());
  CHECK(d.scalar_value() == doctest::Approx(4.0));
}

TEST_CASE("per-primitive gradient checks") {
  set_debug_finite_checks(true);
  Rng rng(42);
  const double tol = 1e-6;

  SUBCASE("matmul") {
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({4, 2}, rng);
    CHECK(check_op([&]() { return matmul(a, b); }, {a, b}, 1) < tol);
  }
  SUBCASE("add sub mul scalar_mul") {
    auto a = random_tensor({2, 5}, rng);
    auto b = random_tensor({2, 5}, rng);
    CHECK(check_op([&]() { return add(a, b); }, {a, b}, 2) < tol);
    CHECK(check_op([&]() { return sub(a, b); }, {a, b}, 3) < tol);
    CHECK(check_op([&]() { return mul(a, b); }, {a, b}, 4) < tol);
    CHECK(check_op([&]() { return scalar_mul(a, -1.7); }, {a}, 5) < tol);
  }
  SUBCASE("concat_cols") {
    auto a = random_tensor({3, 2}, rng);
    auto b = random_tensor({3, 4}, rng);
    auto c = random_tensor({3, 1}, rng);
    CHECK(check_op([&]() { return concat_cols({a, b, c}); }, {a, b, c}, 6) < tol);
  }
  SUBCASE("row_select with duplicate rows") {
    auto a = random_tensor({5, 3}, rng);
    std::vector<int> idx = {4, 1, 1, 0};
    CHECK(check_op([&]() { return row_select(a, idx); }, {a}, 7) < tol);
  }
  SUBCASE("reductions") {
    auto a = random_tensor({4, 3}, rng);
    CHECK(check_op([&]() { return sum_all(a); }, {a}, 8) < tol);
    CHECK(check_op([&]() { return sum_axis(a, 0); }, {a}, 9) < tol);
    CHECK(check_op([&]() { return sum_axis(a, 1); }, {a}, 10) < tol);
    CHECK(check_op([&]() { return mean_axis(a, 0); }, {a}, 11) < tol);
    CHECK(check_op([&]() { return mean_axis(a, 1); }, {a}, 12) < tol);
  }
  SUBCASE("softmax both axes with mask") {
    auto a = random_tensor({4, 3}, rng);
    CHECK(check_op([&]() { return softmax(a, 0); }, {a}, 13) < tol);
    CHECK(check_op([&]() { return softmax(a, 1); }, {a}, 14) < tol);
    std::vector<std::uint8_t> mask(12, 1);
    mask[2] = mask[7] = 0;
    CHECK(check_op([&]() { return softmax(a, 1, &mask); }, {a}, 15) < tol);
  }
  SUBCASE("activations") {
    auto a = random_tensor({3, 3}, rng);
    CHECK(check_op([&]() { return sigmoid(a); }, {a}, 16) < tol);
    CHECK(check_op([&]() { return tanh(a); }, {a}, 17) < tol);
    CHECK(check_op([&]() { return leaky_relu(a); }, {a}, 18) < tol);
  }
  SUBCASE("log and clamp away from the boundary") {
    auto raw = random_tensor({2, 3}, rng);
    CHECK(check_op([&]() { return log(sigmoid(raw)); }, {raw}, 19) < tol);
    CHECK(check_op([&]() { return clamp(raw, -10.0, 10.0); }, {raw}, 20) < tol);
  }
  SUBCASE("cosine similarity") {
    auto a = random_tensor({4, 5}, rng);
    auto b = random_tensor({4, 5}, rng);
    CHECK(check_op([&]() { return cosine_similarity_rows(a, b); }, {a, b}, 21) < tol);
  }
  SUBCASE("dot and transpose") {
    auto a = random_tensor({1, 6}, rng);
    auto b = random_tensor({1, 6}, rng);
    CHECK(check_op([&]() { return dot(a, b); }, {a, b}, 22) < tol);
    auto m = random_tensor({3, 2}, rng);
    CHECK(check_op([&]() { return transpose(m); }, {m}, 23) < tol);
  }
  SUBCASE("composites") {
    auto r1 = random_tensor({1, 4}, rng);
    auto r2 = random_tensor({1, 4}, rng);
    auto r3 = random_tensor({1, 4}, rng);
    CHECK(check_op([&]() { return stack_rows({r1, r2, r3}); }, {r1, r2, r3}, 24) < tol);
    CHECK(check_op([&]() { return repeat_row(r1, 5); }, {r1}, 25) < tol);
  }
  set_debug_finite_checks(false);
}

TEST_CASE("gradient check through a composed expression") {
  Rng rng(123);
  auto w = random_tensor({4, 4}, rng);
  auto x = random_tensor({2, 4}, rng);
  auto b = random_tensor({1, 4}, rng);
  auto build = [&]() {
    auto h = tanh(add(matmul(x, w), repeat_row(b, 2)));
    auto p = softmax(h, 1);
    return sum_all(mul(p, p));
  };
  CHECK(finite_difference_check(build, {w, x, b}) < 1e-6);
}

TEST_CASE("cosine similarity zero-vector guard") {
  auto a = Tensor::from_values({2, 3}, {0, 0, 0, 1, 0, 0}, true);
  auto b = Tensor::from_values({2, 3}, {1, 2, 3, 1, 0, 0}, true);
  auto c = cosine_similarity_rows(a, b);
  CHECK(c.value_at(0) == 0.0);
  CHECK(c.value_at(1) == doctest::Approx(1.0));
  backprop(sum_all(c));
  for (std::size_t j = 0; j < 3; ++j) CHECK(a.grad()[j] == 0.0);
}

TEST_CASE("log rejects non-positive inputs") {
  CHECK_THROWS_AS(log(Tensor::from_values({1, 2}, {0.5, 0.0})), std::runtime_error);
  CHECK_THROWS_AS(log(Tensor::from_values({1, 1}, {-1.0})), std::runtime_error);
}

TEST_CASE("debug finite checks catch non-finite products") {
  set_debug_finite_checks(true);
  auto big = Tensor::from_values({1, 1}, {1e308});
  CHECK_THROWS_AS(mul(big, big), std::runtime_error);
  set_debug_finite_checks(false);
}

TEST_CASE("finite difference harness flags non-finite objectives") {
  auto x = Tensor::scalar(1e308, true);
  auto build = [&]() { return mul(x, x); };
  CHECK_THROWS_AS(finite_difference_check(build, {x}), std::runtime_error);
}

TEST_SUITE_END();
