#include "mgcnet/config.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mgcnet {

TaskMode task_from_name(const std::string& name) {
  if (name == "task1") return TaskMode::task1;
  if (name == "task2") return TaskMode::task2;
  throw std::runtime_error("unknown task '" + name + "' (expected task1 or task2)");
}

std::string task_name(TaskMode task) {
  return task == TaskMode::task1 ? "task1" : "task2";
}

void ModelConfig::validate(int n_behaviors) const {
  if (d < 1) throw std::runtime_error("config: d must be >= 1");
  if (gnn_layers < 0) throw std::runtime_error("config: gnn_layers must be >= 0");
  if (max_session_len < 1) throw std::runtime_error("config: max_session_len must be >= 1");
  if (beta < 0.0) throw std::runtime_error("config: beta must be >= 0");
  if (gamma < 0.0) throw std::runtime_error("config: gamma must be >= 0");
  for (double l : lambda_weights) {
    if (l < 0.0) throw std::runtime_error("config: lambda weights must be >= 0");
  }
  if (n_behaviors > 0 && !lambda_weights.empty() &&
      lambda_weights.size() != static_cast<std::size_t>(n_behaviors)) {
    throw std::runtime_error("config: expected " + std::to_string(n_behaviors) +
                             " lambda weights, got " +
                             std::to_string(lambda_weights.size()));
  }
  if (batch_size < 1) throw std::runtime_error("config: batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::runtime_error("config: lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw std::runtime_error("config: lr_decay must be in (0, 1]");
  }
  if (lr_decay_step < 1) throw std::runtime_error("config: lr_decay_step must be >= 1");
  if (epochs < 1) throw std::runtime_error("config: epochs must be >= 1");
}

double decayed_lr(const ModelConfig& config, int epoch) {
  if (epoch < 1) throw std::runtime_error("decayed_lr: epoch is 1-based");
  const int steps = (epoch - 1) / config.lr_decay_step;
  return config.lr * std::pow(config.lr_decay, steps);
}

std::string config_echo(const ModelConfig& config) {
  std::ostringstream out;
  out << "d=" << config.d << "\n";
  out << "gnn_layers=" << config.gnn_layers << "\n";
  out << "max_session_len=" << config.max_session_len << "\n";
  out << "beta=" << config.beta << "\n";
  out << "gamma=" << config.gamma << "\n";
  out << "lambda=";
  for (std::size_t i = 0; i < config.lambda_weights.size(); ++i) {
    if (i) out << ',';
    out << config.lambda_weights[i];
  }
  out << "\n";
  out << "batch_size=" << config.batch_size << "\n";
  out << "lr=" << config.lr << "\n";
  out << "lr_decay=" << config.lr_decay << "\n";
  out << "lr_decay_step=" << config.lr_decay_step << "\n";
  out << "epochs=" << config.epochs << "\n";
  out << "seed=" << config.seed << "\n";
  out << "task=" << task_name(config.task) << "\n";
  out << "neighbor_cap=" << config.neighbor_cap << "\n";
  out << "raw_edge_weights=" << (config.raw_edge_weights ? 1 : 0) << "\n";
  out << "normalized_attention=" << (config.normalized_attention ? 1 : 0) << "\n";
  out << "categorical_ce=" << (config.categorical_ce ? 1 : 0) << "\n";
  out << "tie_attention=" << (config.tie_attention ? 1 : 0) << "\n";
  out << "ablate_general_attention=" << (config.ablate_general_attention ? 1 : 0) << "\n";
  out << "ablate_current_attention=" << (config.ablate_current_attention ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace mgcnet
