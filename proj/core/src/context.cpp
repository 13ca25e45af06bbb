#include "mgcnet/context.hpp"

#include <stdexcept>

namespace mgcnet {

std::vector<Tensor> encode_local_sequence(
    const std::vector<std::pair<int, int>>& prefix, const ModelParams& params) {
  if (prefix.empty()) {
    throw std::runtime_error("encode_local_sequence: empty prefix");
  }
  const auto d = static_cast<std::size_t>(params.dims.d);
  Tensor state = Tensor::zeros({1, d});
  Tensor one_row = Tensor::ones({1, d});

  std::vector<Tensor> states;
  states.reserve(prefix.size());
  for (const auto& [item, behavior] : prefix) {
    const Tensor q = concat_cols(
        {row_select(params.item_embeddings, {item}),
         row_select(params.behavior_embeddings, {behavior})});  // (1 x 2d)
    const Tensor z = sigmoid(add(add(matmul(q, params.gru_wz),
                                     matmul(state, params.gru_uz)),
                                 params.gru_bz));
    const Tensor r = sigmoid(add(add(matmul(q, params.gru_wr),
                                     matmul(state, params.gru_ur)),
                                 params.gru_br));
    const Tensor cand = tanh(add(add(matmul(q, params.gru_wc),
                                     matmul(mul(r, state), params.gru_uc)),
                                 params.gru_bc));
    state = add(mul(sub(one_row, z), state), mul(z, cand));
    states.push_back(state);
  }
  return states;
}

Tensor global_match_side(const Tensor& h_global, const ModelParams& params) {
  return matmul(h_global, params.w_global);
}

Tensor context_attend(int item, const Tensor& local_state, const GlobalGraph& graph,
                      const Tensor& h_global, const Tensor& match_side,
                      const ModelParams& params, AttentionProbe* probe) {
  const auto d = static_cast<std::size_t>(params.dims.d);
  const auto& neighbors = graph.union_inbound(item);
  if (neighbors.empty()) return Tensor::zeros({1, d});

  const std::size_t m = neighbors.size();
  const Tensor local_side = matmul(local_state, params.w_local);  // (1 x d)
  const Tensor sims = cosine_similarity_rows(
      repeat_row(local_side, m), row_select(match_side, neighbors));  // (m x 1)
  const Tensor alpha = softmax(leaky_relu(sims), 0);
  if (probe) probe->distributions.push_back(alpha.values());
  // the read aggregates the neighbors' encoded rows, not the match side
  return matmul(transpose(alpha), row_select(h_global, neighbors));
}

Tensor fuse_item_representation(const Tensor& h_global_row,
                                const Tensor& h_local_row, double beta) {
  return add(h_global_row, scalar_mul(h_local_row, beta));
}

std::vector<Tensor> contextual_item_representations(
    const std::vector<std::pair<int, int>>& prefix,
    const std::vector<Tensor>& local_states, const GlobalGraph& graph,
    const Tensor& h_global, const Tensor& match_side, const ModelParams& params,
    const ModelConfig& config, AttentionProbe* probe) {
  if (local_states.size() != prefix.size()) {
    throw std::runtime_error("contextual_item_representations: state count mismatch");
  }
  std::vector<Tensor> out;
  out.reserve(prefix.size());
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const Tensor global_row = row_select(h_global, {prefix[i].first});
    if (config.beta == 0.0) {
      out.push_back(global_row);
      continue;
    }
    const Tensor local_row = context_attend(prefix[i].first, local_states[i], graph,
                                            h_global, match_side, params, probe);
    out.push_back(fuse_item_representation(global_row, local_row, config.beta));
  }
  return out;
}

}  // namespace mgcnet
