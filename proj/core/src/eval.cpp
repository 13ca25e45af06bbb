#include "mgcnet/eval.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"

#include "mgcnet/context.hpp"
#include "mgcnet/encoder.hpp"
#include "mgcnet/predictor.hpp"

namespace mgcnet {

RankOutcome rank_metrics(const std::vector<double>& scores, int target_item,
                         int k) {
  if (k < 1) throw std::runtime_error("rank_metrics: k must be >= 1");
  if (target_item < 0 || static_cast<std::size_t>(target_item) >= scores.size()) {
    throw std::runtime_error("rank_metrics: target item out of range");
  }
  const double target_score = scores[static_cast<std::size_t>(target_item)];
  long rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto idx = static_cast<int>(i);
    if (scores[i] > target_score) {
      ++rank;
    } else if (scores[i] == target_score && idx < target_item) {
      ++rank;
    }
  }
  RankOutcome out;
  out.hit = rank <= k ? 1 : 0;
  out.rr = out.hit ? 1.0 / static_cast<double>(rank) : 0.0;
  return out;
}

std::map<std::string, double> behavior_recall(
    const std::vector<int>& predicted, const std::vector<int>& targets,
    const std::vector<std::string>& labels) {
  if (predicted.size() != targets.size()) {
    throw std::runtime_error("behavior_recall: prediction/target length mismatch");
  }
  std::vector<long> total(labels.size(), 0), correct(labels.size(), 0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto t = static_cast<std::size_t>(targets[i]);
    if (t >= labels.size()) {
      throw std::runtime_error("behavior_recall: target class out of range");
    }
    if (predicted[i] < 0 ||
        static_cast<std::size_t>(predicted[i]) >= labels.size()) {
      throw std::runtime_error("behavior_recall: predicted class out of range");
    }
    ++total[t];
    if (predicted[i] == targets[i]) ++correct[t];
  }
  std::map<std::string, double> recall;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (total[c] > 0) {
      recall[labels[c]] =
          static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    }
  }
  return recall;
}

MetricsReport evaluate_model(const ModelParams& params,
                             const std::vector<SessionExample>& examples,
                             const GlobalGraph& graph, const ModelConfig& config,
                             int k) {
  if (examples.empty()) throw std::runtime_error("evaluate_model: empty evaluation set");
  const ModelParams frozen = params.detached_copy();
  const Tensor h_global = encode_global(graph, frozen, config, config.gnn_layers);
  const Tensor match_side = global_match_side(h_global, frozen);
  const auto& labels = graph.behavior_labels();

  struct Accum {
    long hits = 0;
    double rr_sum = 0.0;
    long n = 0;
  };
  std::map<std::string, Accum> slices;
  Accum overall;
  std::vector<int> predicted_behaviors, target_behaviors;

  const bool pseudo_tag = config.task == TaskMode::task2;
  for (const auto& ex : examples) {
    const int override_behavior = pseudo_tag ? -1 : ex.target_behavior;
    const ForwardResult fwd =
        forward_example(ex, graph, h_global, match_side, frozen, config,
                        override_behavior, /*want_behavior_head=*/pseudo_tag);
    const RankOutcome outcome = rank_metrics(fwd.item_scores.values(),
                                             ex.target_item, k);
    auto& slice = slices[labels[static_cast<std::size_t>(ex.target_behavior)]];
    slice.hits += outcome.hit;
    slice.rr_sum += outcome.rr;
    ++slice.n;
    overall.hits += outcome.hit;
    overall.rr_sum += outcome.rr;
    ++overall.n;
    if (pseudo_tag) {
      predicted_behaviors.push_back(fwd.chosen_behavior);
      target_behaviors.push_back(ex.target_behavior);
    }
  }

  MetricsReport report;
  report.k = k;
  report.task = config.task;
  report.n_examples = overall.n;
  const auto to_metrics = [](const Accum& a) {
    SliceMetrics m;
    m.n = a.n;
    m.hr = static_cast<double>(a.hits) / static_cast<double>(a.n);
    m.mrr = a.rr_sum / static_cast<double>(a.n);
    return m;
  };
  report.overall = to_metrics(overall);
  for (const auto& [label, accum] : slices) {
    report.per_behavior[label] = to_metrics(accum);
  }
  if (pseudo_tag) {
    report.recall = behavior_recall(predicted_behaviors, target_behaviors, labels);
  }
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["k"] = report.k;
  j["task"] = task_name(report.task);
  j["n_examples"] = report.n_examples;
  j["overall"] = {{"hr", report.overall.hr},
                  {"mrr", report.overall.mrr},
                  {"n", report.overall.n}};
  nlohmann::json slices = nlohmann::json::object();
  for (const auto& [label, m] : report.per_behavior) {
    slices[label] = {{"hr", m.hr}, {"mrr", m.mrr}, {"n", m.n}};
  }
  j["per_behavior"] = slices;
  if (report.task == TaskMode::task2) {
    nlohmann::json recall = nlohmann::json::object();
    for (const auto& [label, r] : report.recall) recall[label] = r;
    j["behavior_recall"] = recall;
  }
  return j.dump(2) + "\n";
}

namespace {

std::string table_row(const std::string& label, const SliceMetrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-14s %8ld %10.4f %10.4f\n", label.c_str(),
                m.n, m.hr, m.mrr);
  return buf;
}

}  // namespace

std::string report_to_table(const MetricsReport& report) {
  char head[128];
  std::snprintf(head, sizeof(head), "%-14s %8s %10s %10s\n", "behavior", "n",
                ("HR@" + std::to_string(report.k)).c_str(),
                ("MRR@" + std::to_string(report.k)).c_str());
  std::string out = head;
  for (const auto& [label, m] : report.per_behavior) out += table_row(label, m);
  out += table_row("overall", report.overall);
  if (report.task == TaskMode::task2) {
    out += "\nnext-behavior recall:\n";
    for (const auto& [label, r] : report.recall) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%-14s %10.4f\n", label.c_str(), r);
      out += buf;
    }
  }
  return out;
}

std::string report_to_csv(const MetricsReport& report) {
  std::string out = "behavior,n,hr,mrr,recall\n";
  const auto row = [&](const std::string& label, const SliceMetrics& m) {
    char buf[160];
    const auto it = report.recall.find(label);
    std::string recall_cell =
        it == report.recall.end() ? "" : std::to_string(it->second);
    std::snprintf(buf, sizeof(buf), "%s,%ld,%.6f,%.6f,%s\n", label.c_str(), m.n,
                  m.hr, m.mrr, recall_cell.c_str());
    out += buf;
  };
  for (const auto& [label, m] : report.per_behavior) row(label, m);
  row("overall", report.overall);
  return out;
}

}  // namespace mgcnet
