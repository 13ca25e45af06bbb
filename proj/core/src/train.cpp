#include "mgcnet/train.hpp"

#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "mgcnet/context.hpp"
#include "mgcnet/encoder.hpp"
#include "mgcnet/eval.hpp"
#include "mgcnet/optimizer.hpp"
#include "mgcnet/predictor.hpp"
#include "mgcnet/rng.hpp"

namespace mgcnet {

std::string epoch_log_json(const EpochLog& log) {
  nlohmann::json j;
  j["epoch"] = log.epoch;
  j["L_item"] = log.item_loss;
  j["L_bhv"] = log.has_behavior_loss ? nlohmann::json(log.behavior_loss)
                                     : nlohmann::json(nullptr);
  j["lr"] = log.lr;
  j["val_HR@20"] = log.has_validation ? nlohmann::json(log.val_hr)
                                      : nlohmann::json(nullptr);
  j["val_MRR@20"] = log.has_validation ? nlohmann::json(log.val_mrr)
                                       : nlohmann::json(nullptr);
  return j.dump();
}

TrainResult train_model(const std::vector<SessionExample>& train_examples,
                        const std::vector<SessionExample>& valid_examples,
                        const GlobalGraph& graph, const ModelConfig& config,
                        std::ostream* log_stream) {
  if (train_examples.empty()) {
    throw std::runtime_error("train_model: empty training set");
  }
  config.validate(graph.n_behaviors());

  ModelDims dims;
  dims.n_items = graph.n_items();
  dims.n_behaviors = graph.n_behaviors();
  dims.d = config.d;
  dims.gnn_layers = config.gnn_layers;
  dims.max_session_len = config.max_session_len;

  Rng rng(config.seed);
  ModelParams params = init_params(dims, config.tie_attention, rng);
  AdamOptimizer opt(params.all_parameters(), config.lr);

  const bool supervise_behavior = config.task == TaskMode::task2;
  const auto n = train_examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best_hr = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = decayed_lr(config, epoch);
    opt.set_lr(lr);
    rng.shuffle(order);

    double item_loss_sum = 0.0, behavior_loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      opt.zero_grad();
      // one tape per batch; the graph encoding is shared by every example
      const Tensor h_global =
          encode_global(graph, params, config, config.gnn_layers);
      const Tensor match_side = global_match_side(h_global, params);

      Tensor batch_loss;
      for (std::size_t bi = start; bi < stop; ++bi) {
        const SessionExample& ex = train_examples[order[bi]];
        const ForwardResult fwd = forward_example(
            ex, graph, h_global, match_side, params, config,
            /*behavior_override=*/ex.target_behavior, supervise_behavior);
        const LossResult losses =
            compute_losses(fwd, ex.target_item, ex.target_behavior, config);
        item_loss_sum += losses.item_loss.scalar_value();
        if (losses.behavior_loss.defined()) {
          behavior_loss_sum += losses.behavior_loss.scalar_value();
        }
        batch_loss = batch_loss.defined() ? add(batch_loss, losses.joint)
                                          : losses.joint;
      }
      batch_loss =
          scalar_mul(batch_loss, 1.0 / static_cast<double>(stop - start));
      backprop(batch_loss);
      opt.step();
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.item_loss = item_loss_sum / static_cast<double>(n);
    log.has_behavior_loss = supervise_behavior;
    log.behavior_loss =
        supervise_behavior ? behavior_loss_sum / static_cast<double>(n) : 0.0;

    if (!valid_examples.empty()) {
      const MetricsReport val =
          evaluate_model(params, valid_examples, graph, config, 20);
      log.has_validation = true;
      log.val_hr = val.overall.hr;
      log.val_mrr = val.overall.mrr;
      if (val.overall.hr > best_hr) {
        best_hr = val.overall.hr;
        result.params = params.clone();
        result.best_epoch = epoch;
        result.best_val_hr = best_hr;
      }
    }

    result.epochs.push_back(log);
    if (log_stream) {
      (*log_stream) << epoch_log_json(log) << "\n";
      log_stream->flush();
    }
  }

  if (valid_examples.empty()) {
    result.params = params;
    result.best_epoch = 0;
    result.best_val_hr = 0.0;
  }
  return result;
}

}  // namespace mgcnet
