#pragma once

// Joint heads: next-behavior distribution from the behavior-intent vector,
// next-item distribution from the session embedding against the initial item
// table, and the joint loss.

#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/context.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/session_model.hpp"
#include "mgcnet/sessions.hpp"
#include "mgcnet/tensor.hpp"

namespace mgcnet {

struct ForwardResult {
  Tensor item_scores;      // (n_items x 1) probabilities, sum 1
  Tensor behavior_scores;  // (n_behaviors x 1); defined iff the behavior head ran
  int chosen_behavior = -1;  // behavior fed into the session messages
};

struct LossResult {
  Tensor item_loss;      // (1 x 1)
  Tensor behavior_loss;  // (1 x 1); defined iff the behavior head ran
  Tensor joint;          // item_loss + gamma * behavior_loss when both exist
};

// b_hat = softmax over behaviors of (o_b . intent). Column vector.
Tensor behavior_distribution(const Tensor& intent, const ModelParams& params);

// y_hat = softmax over items of (h0_i . session). Scoring always reads the
// initial embedding table, not the encoded one.
Tensor item_distribution(const Tensor& session, const ModelParams& params);

// Argmax over a column vector; ties resolve to the smallest index.
int argmax_index(const Tensor& column);

// Full per-example pass: local GRU -> (optional) behavior head -> contextual
// item fusion -> tagged messages -> session readout -> item head.
// behavior_override >= 0 forces that behavior into the messages (ground truth
// for task1 and for teacher forcing); behavior_override < 0 feeds the head's
// own argmax (the task2 inference pseudo tag, which forces the head to run).
// want_behavior_head additionally runs the head when an override is given, so
// training can supervise it under teacher forcing.
ForwardResult forward_example(const SessionExample& example,
                              const GlobalGraph& graph, const Tensor& h_global,
                              const Tensor& match_side, const ModelParams& params,
                              const ModelConfig& config, int behavior_override,
                              bool want_behavior_head,
                              AttentionProbe* probe = nullptr);

// Binary-sum cross entropy over the softmax outputs by default: the target
// entry contributes -log p and every other entry -log(1 - p), with p clamped
// to [1e-12, 1 - 1e-12]. The behavior loss scales its positive term by
// lambda(target_behavior). The categorical_ce flag switches both heads to the
// plain -log p form. joint = item + gamma * behavior when the head ran.
LossResult compute_losses(const ForwardResult& forward, int target_item,
                          int target_behavior, const ModelConfig& config);

}  // namespace mgcnet
