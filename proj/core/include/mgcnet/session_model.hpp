#pragma once

// Session-level readout: behavior- and position-tagged item messages, twin
// soft-attention pools (general interest anchored on the mean message, current
// interest anchored on the last message), and a behavior-intent vector pooled
// from the recurrent states.

#include <utility>
#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/tensor.hpp"

namespace mgcnet {

struct SessionRepr {
  Tensor s_general;  // (1 x d) history-wide interest
  Tensor s_current;  // (1 x d) last-item anchored interest
  Tensor session;    // (1 x d) fused session embedding
};

// m_i = tanh([h_i || o_{b_i} || o_next || p_{L-i}] . w_message), where p is the
// reversed-position table: the most recent event always reads row 0.
// Throws if the prefix is longer than the position table (truncate upstream).
std::vector<Tensor> build_messages(const std::vector<std::pair<int, int>>& prefix,
                                   const std::vector<Tensor>& fused_items,
                                   int next_behavior, const ModelParams& params);

// score_i = sigmoid(x_i . w1 + anchor . w2 + b) . r, output = sum_i score_i x_i.
// Scores are raw gate outputs by default; `normalized` runs them through a
// softmax first (ablation variant).
Tensor attention_pool(const std::vector<Tensor>& items, const Tensor& anchor,
                      const AttentionInstanceParams& instance, bool normalized);

// s_general pools against the mean message, s_current against the last one,
// session = tanh([s_general || s_current] . w_compose). The ablation flags zero
// out one side of the concat without changing its width.
SessionRepr compose_session(const std::vector<Tensor>& messages,
                            const ModelParams& params, const ModelConfig& config);

// Pools the recurrent states against the last state with the behavior
// attention instance, then maps through tanh(C . w_behavior + b_behavior).
Tensor behavior_intent(const std::vector<Tensor>& local_states,
                       const ModelParams& params, const ModelConfig& config);

}  // namespace mgcnet
