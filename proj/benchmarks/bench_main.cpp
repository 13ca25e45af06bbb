#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "mgcnet/encoder.hpp"
#include "mgcnet/eval.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/predictor.hpp"
#include "mgcnet/rng.hpp"
#include "mgcnet/sessions.hpp"
#include "mgcnet/tensor.hpp"

using namespace mgcnet;

namespace {

struct BenchSetup {
  std::vector<Session> sessions;
  Vocab vocab;
  std::vector<std::string> behaviors;
  GlobalGraph graph;
  ModelConfig config;
  ModelParams params;
  std::vector<SessionExample> examples;

  BenchSetup()
      : sessions(generate_synthetic(SyntheticPreset::tmall_like, 1000, 7)),
        vocab(Vocab::build(sessions)),
        behaviors(infer_behavior_vocab(sessions)),
        graph(build_global_graph(sessions, vocab, behaviors, 12)),
        config(),
        params(make_params()) {
    examples = augment_prefixes(sessions, vocab, behaviors,
                                config.max_session_len, false);
  }

  ModelParams make_params() {
    config.d = 32;
    config.gnn_layers = 1;
    config.max_session_len = 10;
    config.beta = 0.1;
    ModelDims dims;
    dims.n_items = static_cast<int>(vocab.items.size());
    dims.n_behaviors = static_cast<int>(behaviors.size());
    dims.d = config.d;
    dims.gnn_layers = config.gnn_layers;
    dims.max_session_len = config.max_session_len;
    Rng rng(7);
    return init_params(dims, config.tie_attention, rng);
  }
};

BenchSetup& setup() {
  static BenchSetup s;
  return s;
}

}  // namespace

static void BM_BuildGlobalGraph(benchmark::State& state) {
  auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_global_graph(s.sessions, s.vocab, s.behaviors, 12));
  }
}

static void BM_EncodeGlobal(benchmark::State& state) {
  auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        encode_global(s.graph, s.params, s.config, s.config.gnn_layers));
  }
}

static void BM_ExampleForward(benchmark::State& state) {
  auto& s = setup();
  const Tensor h = encode_global(s.graph, s.params, s.config, s.config.gnn_layers);
  const Tensor side = global_match_side(h, s.params);
  const auto& ex = s.examples[42];
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_example(ex, s.graph, h, side, s.params,
                                             s.config, ex.target_behavior, true));
  }
}

static void BM_ExampleForwardBackward(benchmark::State& state) {
  auto& s = setup();
  const auto& ex = s.examples[42];
  for (auto _ : state) {
    // re-encode per step: gradients flow through the encoder as in training
    const Tensor h =
        encode_global(s.graph, s.params, s.config, s.config.gnn_layers);
    const Tensor side = global_match_side(h, s.params);
    const ForwardResult fwd = forward_example(ex, s.graph, h, side, s.params,
                                              s.config, ex.target_behavior, true);
    const LossResult loss =
        compute_losses(fwd, ex.target_item, ex.target_behavior, s.config);
    backprop(loss.joint);
    benchmark::DoNotOptimize(loss.joint.scalar_value());
  }
}

static void BM_RankMetrics(benchmark::State& state) {
  Rng rng(99);
  std::vector<double> scores(10000);
  for (double& x : scores) x = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_metrics(scores, 5123, 20));
  }
}

BENCHMARK(BM_BuildGlobalGraph);
BENCHMARK(BM_EncodeGlobal);
BENCHMARK(BM_ExampleForward);
BENCHMARK(BM_ExampleForwardBackward);
BENCHMARK(BM_RankMetrics);
BENCHMARK_MAIN();
