#pragma once

#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/tensor.hpp"

namespace mgcnet {

// Captures attention distributions for inspection; tests assert each
// recorded distribution sums to 1 over its neighborhood.
struct AttentionProbe {
  std::vector<std::vector<double>> distributions;
};

// One relation of one layer: for every item with inbound sources under the
// relation,
//   e_ij = attn . (h_i W_target + h_j W_source + w_lift(edge) * w_weight)
//   alpha = softmax(leaky_relu(e)) over the inbound sources j
//   out_i = sum_j alpha_ij (h_j W_source)
// where w_lift is log1p of the edge weight (raw behind the config flag).
// Items with no inbound sources get a zero row. Output is (n_items x d).
Tensor relation_attention(int layer, int relation, const GlobalGraph& graph,
                          const Tensor& h, const ModelParams& params,
                          const ModelConfig& config,
                          AttentionProbe* probe = nullptr);

// Mean over the full relation set (undefined entries count as zero, the
// divisor stays |relations|) plus the layer's residual transform of h.
Tensor cross_relation_fuse(int layer, const std::vector<Tensor>& relation_outputs,
                           int n_relations, const Tensor& h,
                           const ModelParams& params);

// Stacks `layers` rounds of relation attention + fusion on top of the item
// embedding table. layers == 0 returns the table itself.
Tensor encode_global(const GlobalGraph& graph, const ModelParams& params,
                     const ModelConfig& config, int layers,
                     AttentionProbe* probe = nullptr);

}  // namespace mgcnet
