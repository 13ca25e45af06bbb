#include "mgcnet/predictor.hpp"

#include <stdexcept>

namespace mgcnet {

Tensor behavior_distribution(const Tensor& intent, const ModelParams& params) {
  return softmax(matmul(params.behavior_embeddings, transpose(intent)), 0);
}

Tensor item_distribution(const Tensor& session, const ModelParams& params) {
  return softmax(matmul(params.item_embeddings, transpose(session)), 0);
}

int argmax_index(const Tensor& column) {
  const auto& v = column.values();
  if (v.empty()) throw std::runtime_error("argmax_index: empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

ForwardResult forward_example(const SessionExample& example,
                              const GlobalGraph& graph, const Tensor& h_global,
                              const Tensor& match_side, const ModelParams& params,
                              const ModelConfig& config, int behavior_override,
                              bool want_behavior_head, AttentionProbe* probe) {
  if (example.prefix.empty()) {
    throw std::runtime_error("forward_example: empty prefix");
  }
  const std::vector<Tensor> local_states =
      encode_local_sequence(example.prefix, params);

  ForwardResult result;
  if (want_behavior_head || behavior_override < 0) {
    const Tensor intent = behavior_intent(local_states, params, config);
    result.behavior_scores = behavior_distribution(intent, params);
  }
  result.chosen_behavior = behavior_override >= 0
                               ? behavior_override
                               : argmax_index(result.behavior_scores);

  const std::vector<Tensor> fused = contextual_item_representations(
      example.prefix, local_states, graph, h_global, match_side, params, config,
      probe);
  const std::vector<Tensor> messages =
      build_messages(example.prefix, fused, result.chosen_behavior, params);
  const SessionRepr repr = compose_session(messages, params, config);
  result.item_scores = item_distribution(repr.session, params);
  return result;
}

namespace {

constexpr double kProbFloor = 1e-12;

// -[w * log p_t + sum_{i != t} log(1 - p_i)] on clamped probabilities.
Tensor binary_sum_ce(const Tensor& probs, int target, double positive_weight) {
  const Tensor p = clamp(probs, kProbFloor, 1.0 - kProbFloor);
  const Tensor p_target = row_select(p, {target});
  const Tensor positive = scalar_mul(log(p_target), positive_weight);
  const Tensor ones_col = Tensor::ones({p.rows(), 1});
  const Tensor negative_all = sum_all(log(sub(ones_col, p)));
  const Tensor negative_target = log(sub(Tensor::ones({1, 1}), p_target));
  return scalar_mul(add(positive, sub(negative_all, negative_target)), -1.0);
}

Tensor categorical_ce(const Tensor& probs, int target, double positive_weight) {
  const Tensor p_target =
      clamp(row_select(probs, {target}), kProbFloor, 1.0 - kProbFloor);
  return scalar_mul(log(p_target), -positive_weight);
}

}  // namespace

LossResult compute_losses(const ForwardResult& forward, int target_item,
                          int target_behavior, const ModelConfig& config) {
  if (target_item < 0 ||
      static_cast<std::size_t>(target_item) >= forward.item_scores.rows()) {
    throw std::runtime_error("compute_losses: target item out of range");
  }
  LossResult losses;
  losses.item_loss = config.categorical_ce
                         ? categorical_ce(forward.item_scores, target_item, 1.0)
                         : binary_sum_ce(forward.item_scores, target_item, 1.0);
  if (forward.behavior_scores.defined()) {
    if (target_behavior < 0 ||
        static_cast<std::size_t>(target_behavior) >=
            forward.behavior_scores.rows()) {
      throw std::runtime_error("compute_losses: target behavior out of range");
    }
    const double lambda = config.lambda_for(target_behavior);
    losses.behavior_loss =
        config.categorical_ce
            ? categorical_ce(forward.behavior_scores, target_behavior, lambda)
            : binary_sum_ce(forward.behavior_scores, target_behavior, lambda);
    losses.joint =
        add(losses.item_loss, scalar_mul(losses.behavior_loss, config.gamma));
  } else {
    losses.joint = losses.item_loss;
  }
  return losses;
}

}  // namespace mgcnet
