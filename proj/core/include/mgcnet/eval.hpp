#pragma once

// Ranking metrics (HR@K, MRR@K) sliced by target behavior, next-behavior
// recall, and whole-split evaluation under either task protocol.

#include <map>
#include <string>
#include <vector>

#include "mgcnet/config.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/sessions.hpp"

namespace mgcnet {

struct RankOutcome {
  int hit = 0;
  double rr = 0.0;
};

// rank = 1 + |scores strictly greater| + |equal scores at a smaller index|,
// so ties resolve in favor of the smaller item index. hit = rank <= k,
// rr = 1/rank when it hits and 0 otherwise.
RankOutcome rank_metrics(const std::vector<double>& scores, int target_item,
                         int k);

struct SliceMetrics {
  double hr = 0.0;
  double mrr = 0.0;
  long n = 0;
};

struct MetricsReport {
  int k = 20;
  TaskMode task = TaskMode::task2;
  long n_examples = 0;
  SliceMetrics overall;
  std::map<std::string, SliceMetrics> per_behavior;
  // Recall of the behavior head per class label; classes with no targets are
  // absent. Populated only under task2.
  std::map<std::string, double> recall;
};

// recall_c = correct predictions of class c / targets of class c.
std::map<std::string, double> behavior_recall(
    const std::vector<int>& predicted, const std::vector<int>& targets,
    const std::vector<std::string>& labels);

// Runs the full forward protocol over an evaluation split on a detached
// parameter snapshot. task1 feeds every example's ground-truth next behavior;
// task2 feeds the behavior head's own prediction and reports its recall.
// Throws on an empty split.
MetricsReport evaluate_model(const ModelParams& params,
                             const std::vector<SessionExample>& examples,
                             const GlobalGraph& graph, const ModelConfig& config,
                             int k = 20);

std::string report_to_json(const MetricsReport& report);
std::string report_to_table(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

}  // namespace mgcnet
