#include "mgcnet/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace mgcnet {

Tensor relation_attention(int layer, int relation, const GlobalGraph& graph,
                          const Tensor& h, const ModelParams& params,
                          const ModelConfig& config, AttentionProbe* probe) {
  const auto n = static_cast<std::size_t>(graph.n_items());
  const auto d = static_cast<std::size_t>(params.dims.d);
  if (h.rows() != n || h.cols() != d) {
    throw std::runtime_error("relation_attention: item state has shape " +
                             shape_str(h.shape()));
  }
  const auto& rel = params.encoder.at(static_cast<std::size_t>(layer))
                        .at(static_cast<std::size_t>(relation));

  // Additive attention splits into per-endpoint terms, so the expensive
  // transforms happen once per relation, not once per edge.
  const Tensor target_scores = matmul(matmul(h, rel.w_target), rel.attn);  // (n x 1)
  const Tensor source_side = matmul(h, rel.w_source);                      // (n x d)
  const Tensor source_scores = matmul(source_side, rel.attn);              // (n x 1)
  const Tensor weight_coef = dot(rel.attn, rel.w_weight);                  // (1 x 1)

  const Tensor zero_row = Tensor::zeros({1, d});
  std::vector<Tensor> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nbrs = graph.inbound(relation, static_cast<int>(i));
    if (nbrs.empty()) {
      rows.push_back(zero_row);
      continue;
    }
    const std::size_t m = nbrs.size();
    std::vector<int> idx(m);
    std::vector<double> lifted(m);
    for (std::size_t j = 0; j < m; ++j) {
      idx[j] = nbrs[j].first;
      const auto w = static_cast<double>(nbrs[j].second);
      lifted[j] = config.raw_edge_weights ? w : std::log1p(w);
    }
    const Tensor lift = Tensor::from_values({m, 1}, std::move(lifted));
    Tensor scores = add(add(repeat_row(row_select(target_scores, {static_cast<int>(i)}),
                                       m),
                            row_select(source_scores, idx)),
                        matmul(lift, weight_coef));  // (m x 1)
    const Tensor alpha = softmax(leaky_relu(scores), 0);
    if (probe) probe->distributions.push_back(alpha.values());
    rows.push_back(matmul(transpose(alpha), row_select(source_side, idx)));
  }
  return stack_rows(rows);
}

Tensor cross_relation_fuse(int layer, const std::vector<Tensor>& relation_outputs,
                           int n_relations, const Tensor& h,
                           const ModelParams& params) {
  if (n_relations < 1) {
    throw std::runtime_error("cross_relation_fuse: need at least one relation");
  }
  Tensor acc;
  for (const auto& out : relation_outputs) {
    if (!out.defined()) continue;  // empty relation, contributes zero
    acc = acc.defined() ? add(acc, out) : out;
  }
  const Tensor residual_term =
      matmul(h, params.residual.at(static_cast<std::size_t>(layer)));
  if (!acc.defined()) return residual_term;
  return add(scalar_mul(acc, 1.0 / static_cast<double>(n_relations)), residual_term);
}

Tensor encode_global(const GlobalGraph& graph, const ModelParams& params,
                     const ModelConfig& config, int layers,
                     AttentionProbe* probe) {
  if (layers < 0 || layers > params.dims.gnn_layers) {
    throw std::runtime_error("encode_global: layer count out of range");
  }
  Tensor h = params.item_embeddings;
  for (int k = 0; k < layers; ++k) {
    std::vector<Tensor> outputs(static_cast<std::size_t>(graph.n_relations()));
    for (int r = 0; r < graph.n_relations(); ++r) {
      bool has_edges = false;
      for (int i = 0; i < graph.n_items() && !has_edges; ++i) {
        has_edges = !graph.inbound(r, i).empty();
      }
      if (!has_edges) continue;  // behaves as an empty subgraph
      outputs[static_cast<std::size_t>(r)] =
          relation_attention(k, r, graph, h, params, config, probe);
    }
    h = cross_relation_fuse(k, outputs, graph.n_relations(), h, params);
  }
  return h;
}

}  // namespace mgcnet
