#pragma once

// Mini-batch training loop: seeded shuffling, per-batch graph re-encoding,
// Adam updates with step lr decay, and best-validation checkpoint selection.

#include <ostream>
#include <string>
#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/sessions.hpp"

namespace mgcnet {

struct EpochLog {
  int epoch = 0;          // 1-based
  double item_loss = 0.0; // mean over examples
  double behavior_loss = 0.0;
  bool has_behavior_loss = false;  // false under task1
  double lr = 0.0;
  bool has_validation = false;
  double val_hr = 0.0;   // HR@20 on the validation split
  double val_mrr = 0.0;  // MRR@20
};

// One JSON object per line; absent quantities serialize as null.
std::string epoch_log_json(const EpochLog& log);

struct TrainResult {
  ModelParams params;  // best-validation snapshot, or final when no validation
  std::vector<EpochLog> epochs;
  int best_epoch = 0;  // 1-based; 0 means "no validation, final kept"
  double best_val_hr = 0.0;
};

// Trains from a fresh Gaussian(0, 0.1) initialization seeded by config.seed.
// Training always feeds the ground-truth next behavior into the session
// messages; under task2 the behavior head is additionally supervised, and the
// pseudo-tag protocol only applies at evaluation time. Model selection
// snapshots the epoch with the best validation HR@20; with an empty
// validation split the final parameters are returned and the metric columns
// stay absent. Throws on an empty training set.
TrainResult train_model(const std::vector<SessionExample>& train_examples,
                        const std::vector<SessionExample>& valid_examples,
                        const GlobalGraph& graph, const ModelConfig& config,
                        std::ostream* log_stream = nullptr);

}  // namespace mgcnet
