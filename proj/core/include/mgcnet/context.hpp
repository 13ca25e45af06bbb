#pragma once

#include <utility>
#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/encoder.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/tensor.hpp"

namespace mgcnet {

// Running GRU states over the prefix, one (1 x d) row per position. Step t
// consumes [item embedding ; behavior embedding] (1 x 2d):
//   z = sigmoid(q Wz + c Uz + bz)
//   r = sigmoid(q Wr + c Ur + br)
//   cand = tanh(q Wc + (r .* c) Uc + bc)
//   c' = (1 - z) .* c + z .* cand
// with c_0 = 0. The returned vector has one entry per prefix event.
std::vector<Tensor> encode_local_sequence(
    const std::vector<std::pair<int, int>>& prefix, const ModelParams& params);

// Attention of the position's running context over the graph neighborhood of
// its item: match scores are cosine(c W_local, h_j W_global) over the union
// inbound neighbors j of `item`, sharpened by leaky_relu and softmaxed; the
// read aggregates the neighbors' encoded rows themselves. Items without
// neighbors read a zero row.
Tensor context_attend(int item, const Tensor& local_state, const GlobalGraph& graph,
                      const Tensor& h_global, const Tensor& global_match_side,
                      const ModelParams& params, AttentionProbe* probe = nullptr);

// Precomputed W_global side of the match, shared across positions/examples.
Tensor global_match_side(const Tensor& h_global, const ModelParams& params);

// h = h_global_row + beta * h_local_row
Tensor fuse_item_representation(const Tensor& h_global_row,
                                const Tensor& h_local_row, double beta);

// Fused per-position item representations for a prefix. beta == 0 skips the
// neighbor attention entirely (the local term vanishes).
std::vector<Tensor> contextual_item_representations(
    const std::vector<std::pair<int, int>>& prefix,
    const std::vector<Tensor>& local_states, const GlobalGraph& graph,
    const Tensor& h_global, const Tensor& match_side, const ModelParams& params,
    const ModelConfig& config, AttentionProbe* probe = nullptr);

}  // namespace mgcnet
