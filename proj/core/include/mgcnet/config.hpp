#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mgcnet {

// task1 predicts the next item given the ground-truth next behavior; task2
// first predicts the next behavior and feeds its own prediction (a pseudo
// tag) into the item head at inference. Training always teacher-forces the
// ground-truth behavior into the session messages.
enum class TaskMode { task1, task2 };

TaskMode task_from_name(const std::string& name);
std::string task_name(TaskMode task);

struct ModelConfig {
  int d = 128;                // embedding width
  int gnn_layers = 1;         // global encoder depth (0 disables the encoder)
  int max_session_len = 8;    // prefix truncation and position table size
  double beta = 0.1;          // local context intention factor
  double gamma = 10.0;        // behavior loss weight in the joint objective
  // Per-behavior positive-class loss weights aligned with the behavior
  // vocabulary order; empty means 1.0 everywhere.
  std::vector<double> lambda_weights;
  int batch_size = 512;
  double lr = 0.001;
  double lr_decay = 0.1;      // multiplier applied every lr_decay_step epochs
  int lr_decay_step = 3;
  int epochs = 10;
  std::uint64_t seed = 0;
  TaskMode task = TaskMode::task2;
  int neighbor_cap = 12;      // inbound neighbors kept per (item, relation)

  // variants
  bool raw_edge_weights = false;       // attention sees raw counts, not log1p
  bool normalized_attention = false;   // softmax-normalize readout attention
  bool categorical_ce = false;         // plain CE instead of the binary sum
  bool tie_attention = false;          // share one readout attention instance
  bool ablate_general_attention = false;
  bool ablate_current_attention = false;

  double lambda_for(int behavior) const {
    if (lambda_weights.empty()) return 1.0;
    return lambda_weights[static_cast<std::size_t>(behavior)];
  }

  // Rejects out-of-domain values; `n_behaviors` checks the lambda vector
  // length when nonzero.
  void validate(int n_behaviors = 0) const;
};

// Effective learning rate for a 1-based epoch under step decay.
double decayed_lr(const ModelConfig& config, int epoch);

// key=value lines, one per field, in declaration order.
std::string config_echo(const ModelConfig& config);

}  // namespace mgcnet
