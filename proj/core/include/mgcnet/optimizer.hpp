#pragma once

#include <vector>

#include "mgcnet/model_params.hpp"

namespace mgcnet {

// Dense Adam with bias correction over a fixed parameter list. Parameters
// whose gradient was never touched in a step are updated as if their gradient
// were zero, which keeps the update deterministic regardless of which heads a
// batch exercised.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<ParamRef> params, double lr = 0.001,
                         double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long step_count() const { return t_; }

  void zero_grad();

  // One bias-corrected update. Throws on a non-finite gradient, naming the
  // offending parameter.
  void step();

 private:
  std::vector<ParamRef> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace mgcnet
