#pragma once

#include <string>
#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/rng.hpp"
#include "mgcnet/tensor.hpp"

namespace mgcnet {

struct ModelDims {
  int n_items = 0;
  int n_behaviors = 0;
  int d = 0;
  int gnn_layers = 0;
  int max_session_len = 0;
};

// One additive readout attention instance:
//   score_i = r . sigmoid(m_i W1 + anchor W2 + b)
struct AttentionInstanceParams {
  Tensor w1;  // (d x d)
  Tensor w2;  // (d x d)
  Tensor r;   // (d x 1)
  Tensor b;   // (1 x d)
};

// Per (layer, relation) weights of the global encoder. Matrices act as right
// multipliers of row vectors throughout, i.e. y = x W with W (in x out).
struct RelationLayerParams {
  Tensor w_target;  // (d x d) transform of the attending item
  Tensor w_source;  // (d x d) shared transform of scored and aggregated sources
  Tensor attn;      // (d x 1) attention vector
  Tensor w_weight;  // (d x 1) edge-weight lift; only attn . w_weight matters
};

struct ParamRef {
  std::string name;
  Tensor tensor;
};

// Every learnable tensor of the model. All parameters are initialized from
// Gaussian(0, 0.1) draws in registration order, so a seed pins the full
// initial state.
struct ModelParams {
  ModelDims dims;
  bool tie_attention = false;

  Tensor item_embeddings;      // (n_items x d), also the item scoring table
  Tensor behavior_embeddings;  // (n_behaviors x d)
  Tensor position_embeddings;  // (max_session_len x d), row i = distance i+1

  std::vector<std::vector<RelationLayerParams>> encoder;  // [layer][relation]
  std::vector<Tensor> residual;                           // per layer (d x d)

  // session-context GRU, input [item ; behavior] of width 2d
  Tensor gru_wz, gru_wr, gru_wc;  // (2d x d)
  Tensor gru_uz, gru_ur, gru_uc;  // (d x d)
  Tensor gru_bz, gru_br, gru_bc;  // (1 x d)

  Tensor w_local;   // (d x d) context side of the neighbor match
  Tensor w_global;  // (d x d) graph side of the neighbor match

  Tensor w_message;  // (4d x d) tagged message projection
  AttentionInstanceParams attn_general, attn_current, attn_behavior;
  Tensor w_compose;   // (2d x d) fuses general and current reads
  Tensor w_behavior;  // (d x d)
  Tensor b_behavior;  // (1 x d)

  // Registration-ordered named parameters; tied attention instances appear
  // once. The order is the checkpoint, optimizer and init order.
  std::vector<ParamRef> all_parameters() const;

  // Value-only copy with requires_grad off on every tensor; forward passes
  // over it record no tape.
  ModelParams detached_copy() const;

  // Deep copy that keeps gradients enabled (fresh leaf tensors).
  ModelParams clone() const;
};

// Gaussian(0, 0.1) initialization of every tensor, seeded by `rng`.
ModelParams init_params(const ModelDims& dims, bool tie_attention, Rng& rng);

struct Checkpoint {
  ModelParams params;
  ModelConfig config;  // the configuration the model was trained under
};

// Checkpoint JSON: {"format": "mgcnet-checkpoint-v1", "dims": {...},
// "tie_attention": bool, "config": {...},
// "params": {name: {"shape": [...], "values": [...]}}}. The embedded config
// makes a checkpoint self-describing for evaluation and prediction.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelConfig& config);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mgcnet
