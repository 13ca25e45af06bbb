#include "mgcnet/session_model.hpp"

#include <stdexcept>
#include <string>

namespace mgcnet {

std::vector<Tensor> build_messages(const std::vector<std::pair<int, int>>& prefix,
                                   const std::vector<Tensor>& fused_items,
                                   int next_behavior, const ModelParams& params) {
  if (prefix.empty()) throw std::runtime_error("build_messages: empty prefix");
  if (prefix.size() != fused_items.size()) {
    throw std::runtime_error("build_messages: item representation count mismatch");
  }
  const std::size_t len = prefix.size();
  const auto max_len = params.position_embeddings.rows();
  if (len > max_len) {
    throw std::runtime_error("build_messages: prefix length " + std::to_string(len) +
                             " exceeds position table size " + std::to_string(max_len));
  }
  const Tensor o_next = row_select(params.behavior_embeddings, {next_behavior});

  std::vector<Tensor> messages;
  messages.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const int reversed_pos = static_cast<int>(len - 1 - i);
    const Tensor packed = concat_cols(
        {fused_items[i], row_select(params.behavior_embeddings, {prefix[i].second}),
         o_next, row_select(params.position_embeddings, {reversed_pos})});
    messages.push_back(tanh(matmul(packed, params.w_message)));
  }
  return messages;
}

Tensor attention_pool(const std::vector<Tensor>& items, const Tensor& anchor,
                      const AttentionInstanceParams& instance, bool normalized) {
  if (items.empty()) throw std::runtime_error("attention_pool: empty item list");
  const Tensor anchor_side = matmul(anchor, instance.w2);

  std::vector<Tensor> scores;
  scores.reserve(items.size());
  for (const Tensor& item : items) {
    const Tensor gate =
        sigmoid(add(add(matmul(item, instance.w1), anchor_side), instance.b));
    scores.push_back(matmul(gate, instance.r));  // (1 x 1)
  }
  Tensor score_col = stack_rows(scores);  // (L x 1)
  if (normalized) score_col = softmax(score_col, 0);
  return matmul(transpose(score_col), stack_rows(items));
}

SessionRepr compose_session(const std::vector<Tensor>& messages,
                            const ModelParams& params, const ModelConfig& config) {
  if (messages.empty()) throw std::runtime_error("compose_session: empty message list");
  const auto d = static_cast<std::size_t>(params.dims.d);
  const Tensor mean_anchor = mean_axis(stack_rows(messages), 0);

  SessionRepr repr;
  repr.s_general =
      config.ablate_general_attention
          ? Tensor::zeros({1, d})
          : attention_pool(messages, mean_anchor, params.attn_general,
                           config.normalized_attention);
  repr.s_current =
      config.ablate_current_attention
          ? Tensor::zeros({1, d})
          : attention_pool(messages, messages.back(), params.attn_current,
                           config.normalized_attention);
  repr.session =
      tanh(matmul(concat_cols({repr.s_general, repr.s_current}), params.w_compose));
  return repr;
}

Tensor behavior_intent(const std::vector<Tensor>& local_states,
                       const ModelParams& params, const ModelConfig& config) {
  if (local_states.empty()) {
    throw std::runtime_error("behavior_intent: empty state list");
  }
  const Tensor pooled = attention_pool(local_states, local_states.back(),
                                       params.attn_behavior,
                                       config.normalized_attention);
  return tanh(add(matmul(pooled, params.w_behavior), params.b_behavior));
}

}  // namespace mgcnet
