#include "mgcnet/cli.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "CLI11.hpp"

#include "mgcnet/config.hpp"
#include "mgcnet/context.hpp"
#include "mgcnet/encoder.hpp"
#include "mgcnet/eval.hpp"
#include "mgcnet/global_graph.hpp"
#include "mgcnet/model_params.hpp"
#include "mgcnet/predictor.hpp"
#include "mgcnet/sessions.hpp"
#include "mgcnet/train.hpp"

namespace mgcnet {

namespace {

// Bad flags, keys or values; mapped to exit status 2 like CLI11 parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SessionFormat format_from_name(const std::string& name) {
  if (name == "jsonl") return SessionFormat::jsonl;
  if (name == "tsv") return SessionFormat::tsv;
  throw std::runtime_error("unknown session format '" + name + "'");
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

int behavior_index_of(const std::vector<std::string>& behaviors,
                      const std::string& label) {
  const auto it = std::find(behaviors.begin(), behaviors.end(), label);
  if (it == behaviors.end()) {
    throw std::runtime_error("unknown behavior label '" + label + "'");
  }
  return static_cast<int>(it - behaviors.begin());
}

// Shared model/optimization flags for subcommands that build a ModelConfig.
// Flag names mirror the config fields in kebab case, so a key=value config
// file loaded through --config addresses every field.
void add_model_flags(CLI::App* cmd, ModelConfig* config) {
  cmd->add_option("--d", config->d, "embedding width");
  cmd->add_option("--gnn-layers", config->gnn_layers,
                  "global encoder layers (0 disables the graph encoder)");
  cmd->add_option("--max-session-len", config->max_session_len,
                  "most-recent events kept per prefix");
  cmd->add_option("--beta", config->beta, "local context intention factor");
  cmd->add_option("--gamma", config->gamma, "behavior loss weight");
  cmd->add_option("--lambda", config->lambda_weights,
                  "per-behavior positive-class loss weights, comma separated")
      ->delimiter(',');
  cmd->add_option("--batch-size", config->batch_size, "mini-batch size");
  cmd->add_option("--lr", config->lr, "learning rate");
  cmd->add_option("--lr-decay", config->lr_decay, "step decay multiplier");
  cmd->add_option("--lr-decay-step", config->lr_decay_step,
                  "epochs between decay steps");
  cmd->add_option("--epochs", config->epochs, "training epochs");
  cmd->add_option("--neighbor-cap", config->neighbor_cap,
                  "inbound neighbors kept per item and relation (<=0 keeps all)");
  cmd->add_option("--task", [config](const std::vector<std::string>& vals) {
        config->task = task_from_name(vals.front());
        return true;
      },
      "task1 (next behavior given) or task2 (next behavior predicted)")
      ->expected(1);
  cmd->add_flag("--raw-edge-weights", config->raw_edge_weights,
                "feed raw transition counts to the encoder attention");
  cmd->add_flag("--normalized-attention", config->normalized_attention,
                "softmax-normalize the readout attention scores");
  cmd->add_flag("--categorical-ce", config->categorical_ce,
                "plain cross entropy instead of the binary sum");
  cmd->add_flag("--tie-attention", config->tie_attention,
                "share one readout attention parameter set");
  cmd->add_flag("--ablate-general-attention", config->ablate_general_attention,
                "zero the general-interest read");
  cmd->add_flag("--ablate-current-attention", config->ablate_current_attention,
                "zero the current-interest read");
}

// ---- config file -----------------------------------------------------------

std::string strip(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

double config_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': bad number '" + value + "'");
  }
}

int config_int(const std::string& key, const std::string& value) {
  const double v = config_double(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw UsageError("config key '" + key + "': expected an integer, got '" +
                     value + "'");
  }
  return i;
}

bool config_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" +
                   value + "'");
}

std::uint64_t config_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': bad value '" + value + "'");
  }
}

// key=value lines using the train flag names without the leading dashes.
// Flags given on the command line win over file entries; unknown keys are
// usage errors. '#' starts a comment.
void apply_config_file(const std::string& path, const CLI::App* cmd,
                       ModelConfig* config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config file line " + std::to_string(line_no) +
                       ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));

    const CLI::Option* flag = cmd->get_option_no_throw("--" + key);
    if (flag == nullptr) {
      throw UsageError("config file line " + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
    }
    if (flag->count() > 0) continue;  // the command line already set it

    if (key == "d") config->d = config_int(key, value);
    else if (key == "gnn-layers") config->gnn_layers = config_int(key, value);
    else if (key == "max-session-len") config->max_session_len = config_int(key, value);
    else if (key == "beta") config->beta = config_double(key, value);
    else if (key == "gamma") config->gamma = config_double(key, value);
    else if (key == "lambda") {
      config->lambda_weights.clear();
      std::istringstream parts(value);
      std::string part;
      while (std::getline(parts, part, ',')) {
        config->lambda_weights.push_back(config_double(key, strip(part)));
      }
    } else if (key == "batch-size") config->batch_size = config_int(key, value);
    else if (key == "lr") config->lr = config_double(key, value);
    else if (key == "lr-decay") config->lr_decay = config_double(key, value);
    else if (key == "lr-decay-step") config->lr_decay_step = config_int(key, value);
    else if (key == "epochs") config->epochs = config_int(key, value);
    else if (key == "seed") config->seed = config_u64(key, value);
    else if (key == "neighbor-cap") config->neighbor_cap = config_int(key, value);
    else if (key == "task") {
      try {
        config->task = task_from_name(value);
      } catch (const std::exception& e) {
        throw UsageError(std::string("config key 'task': ") + e.what());
      }
    } else if (key == "raw-edge-weights") config->raw_edge_weights = config_bool(key, value);
    else if (key == "normalized-attention") config->normalized_attention = config_bool(key, value);
    else if (key == "categorical-ce") config->categorical_ce = config_bool(key, value);
    else if (key == "tie-attention") config->tie_attention = config_bool(key, value);
    else if (key == "ablate-general-attention") config->ablate_general_attention = config_bool(key, value);
    else if (key == "ablate-current-attention") config->ablate_current_attention = config_bool(key, value);
    else {
      // the key names a train flag outside the model config (e.g. a path)
      throw UsageError("config file line " + std::to_string(line_no) +
                       ": key '" + key + "' cannot be set from a config file");
    }
  }
}

GlobalGraph load_graph(const std::string& path, int neighbor_cap) {
  GlobalGraph graph = read_graph_tsv(path);
  graph.finalize(neighbor_cap);
  return graph;
}

// ---- synth ----

struct SynthArgs {
  std::string preset = "planted_rule";
  int n_sessions = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "jsonl";
};

void run_synth(const SynthArgs& args) {
  const auto sessions =
      generate_synthetic(preset_from_name(args.preset), args.n_sessions, args.seed);
  if (format_from_name(args.format) == SessionFormat::jsonl) {
    write_sessions_jsonl(args.out, sessions);
  } else {
    write_sessions_tsv(args.out, sessions);
  }
  std::cout << "wrote " << sessions.size() << " sessions to " << args.out << "\n";
}

// ---- preprocess ----

struct PreprocessArgs {
  std::string input;
  std::string format = "jsonl";
  std::string out_dir;
  std::vector<std::string> behaviors;  // declared labels; empty = infer
  int min_session_len = 3;
  std::int64_t min_item_count = 5;
  std::vector<double> ratios = {0.7, 0.1, 0.2};
  int max_session_len = 8;
  double subset_frac = 1.0;
  std::string subset_order = "before-filter";
  std::uint64_t seed = 0;
};

void run_preprocess(const PreprocessArgs& args) {
  if (args.ratios.size() != 3) {
    throw std::runtime_error("--ratios needs exactly three values");
  }
  if (args.subset_order != "before-filter" && args.subset_order != "after-filter") {
    throw std::runtime_error("--subset-order must be before-filter or after-filter");
  }
  std::filesystem::create_directories(args.out_dir);
  const auto dir = std::filesystem::path(args.out_dir);

  auto sessions = parse_sessions(args.input, format_from_name(args.format),
                                 args.behaviors.empty() ? nullptr : &args.behaviors);
  if (args.subset_frac < 1.0 && args.subset_order == "before-filter") {
    sessions = most_recent_fraction(sessions, args.subset_frac);
  }
  auto filtered =
      preprocess_filter(std::move(sessions), args.min_session_len, args.min_item_count);
  auto kept = std::move(filtered.sessions);
  if (args.subset_frac < 1.0 && args.subset_order == "after-filter") {
    kept = most_recent_fraction(kept, args.subset_frac);
  }

  const std::vector<std::string> behaviors =
      args.behaviors.empty() ? infer_behavior_vocab(kept) : args.behaviors;
  const auto counts = behavior_counts(kept, behaviors);

  const SplitResult split = split_dataset(
      kept, {args.ratios[0], args.ratios[1], args.ratios[2]}, args.seed);
  if (split.train.empty()) throw std::runtime_error("empty training split");
  const Vocab vocab = Vocab::build(split.train);

  const auto train_examples = augment_prefixes(split.train, vocab, behaviors,
                                               args.max_session_len, false);
  const auto valid_examples = augment_prefixes(split.valid, vocab, behaviors,
                                               args.max_session_len, true);
  const auto test_examples = augment_prefixes(split.test, vocab, behaviors,
                                              args.max_session_len, true);

  write_vocab_tsv((dir / "vocab.tsv").string(), vocab);
  write_behaviors_tsv((dir / "behaviors.tsv").string(), behaviors, counts);
  write_sessions_jsonl((dir / "train_sessions.jsonl").string(), split.train);
  write_examples_jsonl((dir / "train_examples.jsonl").string(), train_examples);
  write_examples_jsonl((dir / "valid_examples.jsonl").string(), valid_examples);
  write_examples_jsonl((dir / "test_examples.jsonl").string(), test_examples);

  std::string echo;
  echo += "input=" + args.input + "\n";
  echo += "format=" + args.format + "\n";
  echo += "min-session-len=" + std::to_string(args.min_session_len) + "\n";
  echo += "min-item-count=" + std::to_string(args.min_item_count) + "\n";
  echo += "ratios=" + std::to_string(args.ratios[0]) + "," +
          std::to_string(args.ratios[1]) + "," + std::to_string(args.ratios[2]) + "\n";
  echo += "max-session-len=" + std::to_string(args.max_session_len) + "\n";
  echo += "subset-frac=" + std::to_string(args.subset_frac) + "\n";
  echo += "subset-order=" + args.subset_order + "\n";
  echo += "seed=" + std::to_string(args.seed) + "\n";
  std::string labels;
  for (const auto& b : behaviors) labels += (labels.empty() ? "" : ",") + b;
  echo += "behaviors=" + labels + "\n";
  write_text((dir / "effective_config.txt").string(), echo);

  std::cout << "kept " << kept.size() << " sessions (" << split.train.size()
            << " train / " << split.valid.size() << " valid / "
            << split.test.size() << " test), " << vocab.size() << " items, "
            << behaviors.size() << " behaviors\n"
            << "examples: " << train_examples.size() << " train / "
            << valid_examples.size() << " valid / " << test_examples.size()
            << " test\n";
}

// ---- build-graph ----

struct BuildGraphArgs {
  std::string sessions;
  std::string format = "jsonl";
  std::string vocab;
  std::string behaviors_file;
  std::string out;
};

void run_build_graph(const BuildGraphArgs& args) {
  const Vocab vocab = read_vocab_tsv(args.vocab);
  const auto behaviors = read_behaviors_tsv(args.behaviors_file);
  const auto sessions =
      parse_sessions(args.sessions, format_from_name(args.format), &behaviors);
  // the artifact keeps every edge; consumers apply their own neighbor cap
  const GlobalGraph graph =
      build_global_graph(sessions, vocab, behaviors, /*neighbor_cap=*/0);
  write_graph_tsv(args.out, graph);
  std::cout << "wrote graph with " << graph.edge_count() << " edges over "
            << graph.n_items() << " items and " << graph.n_relations()
            << " relations to " << args.out << "\n";
}

// ---- train ----

struct TrainArgs {
  std::string train_examples;
  std::string valid_examples;  // optional
  std::string graph;
  std::string out_dir;
};

void run_train(const TrainArgs& args, const ModelConfig& config) {
  std::filesystem::create_directories(args.out_dir);
  const auto dir = std::filesystem::path(args.out_dir);

  const GlobalGraph graph = load_graph(args.graph, config.neighbor_cap);
  const auto train_examples = read_examples_jsonl(args.train_examples);
  const std::vector<SessionExample> valid_examples =
      args.valid_examples.empty() ? std::vector<SessionExample>{}
                                  : read_examples_jsonl(args.valid_examples);

  write_text((dir / "effective_config.txt").string(), config_echo(config));
  std::ofstream log((dir / "training_log.jsonl").string());
  if (!log) throw std::runtime_error("cannot open training log for writing");

  const TrainResult result =
      train_model(train_examples, valid_examples, graph, config, &log);
  save_checkpoint((dir / "checkpoint.json").string(), result.params, config);

  if (result.best_epoch > 0) {
    std::cout << "best epoch " << result.best_epoch << " with validation HR@20 "
              << result.best_val_hr << "\n";
  } else {
    std::cout << "trained " << config.epochs
              << " epochs without a validation split\n";
  }
  std::cout << "checkpoint written to " << (dir / "checkpoint.json").string()
            << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint;
  std::string examples;
  std::string graph;
  std::string out_dir;
  int k = 20;
  std::string task;  // empty keeps the checkpoint's task
};

void run_eval(const EvalArgs& args) {
  Checkpoint checkpoint = load_checkpoint(args.checkpoint);
  if (!args.task.empty()) checkpoint.config.task = task_from_name(args.task);

  const GlobalGraph graph = load_graph(args.graph, checkpoint.config.neighbor_cap);
  if (graph.n_items() != checkpoint.params.dims.n_items ||
      graph.n_behaviors() != checkpoint.params.dims.n_behaviors) {
    throw std::runtime_error("graph and checkpoint disagree on the vocabulary size");
  }
  const auto examples = read_examples_jsonl(args.examples);
  const MetricsReport report = evaluate_model(checkpoint.params, examples, graph,
                                              checkpoint.config, args.k);

  std::filesystem::create_directories(args.out_dir);
  const auto dir = std::filesystem::path(args.out_dir);
  write_text((dir / "report.json").string(), report_to_json(report));
  write_text((dir / "report.txt").string(), report_to_table(report));
  write_text((dir / "report.csv").string(), report_to_csv(report));
  std::cout << report_to_table(report);
}

// ---- predict ----

struct PredictArgs {
  std::string checkpoint;
  std::string graph;
  std::string vocab;
  std::string behaviors_file;
  std::string session;
  std::string format = "jsonl";
  int k = 20;
  std::string task;
  std::string next_behavior;
};

void run_predict(const PredictArgs& args) {
  Checkpoint checkpoint = load_checkpoint(args.checkpoint);
  ModelConfig config = checkpoint.config;
  if (!args.task.empty()) config.task = task_from_name(args.task);

  const GlobalGraph graph = load_graph(args.graph, config.neighbor_cap);
  const Vocab vocab = read_vocab_tsv(args.vocab);
  const auto behaviors = read_behaviors_tsv(args.behaviors_file);
  if (graph.n_items() != checkpoint.params.dims.n_items ||
      static_cast<int>(vocab.size()) != checkpoint.params.dims.n_items) {
    throw std::runtime_error("vocabulary size does not match the checkpoint");
  }

  const auto sessions = parse_sessions(args.session, format_from_name(args.format));
  if (sessions.empty()) throw std::runtime_error("no session in " + args.session);
  const Session& session = sessions.front();

  SessionExample example;
  const std::size_t keep =
      std::min(session.events.size(),
               static_cast<std::size_t>(config.max_session_len));
  for (std::size_t i = session.events.size() - keep; i < session.events.size(); ++i) {
    const Event& ev = session.events[i];
    const int item = vocab.index(ev.item);
    if (item < 0) throw std::runtime_error("unknown item '" + ev.item + "'");
    example.prefix.emplace_back(item, behavior_index_of(behaviors, ev.behavior));
  }

  int behavior_override = -1;
  if (config.task == TaskMode::task1) {
    if (args.next_behavior.empty()) {
      throw std::runtime_error("task1 prediction needs --next-behavior");
    }
    behavior_override = behavior_index_of(behaviors, args.next_behavior);
  }

  const ModelParams frozen = checkpoint.params.detached_copy();
  const Tensor h_global = encode_global(graph, frozen, config, config.gnn_layers);
  const Tensor match_side = global_match_side(h_global, frozen);
  const ForwardResult fwd =
      forward_example(example, graph, h_global, match_side, frozen, config,
                      behavior_override, config.task == TaskMode::task2);

  if (config.task == TaskMode::task2) {
    std::cout << "predicted next behavior: "
              << behaviors[static_cast<std::size_t>(fwd.chosen_behavior)] << "\n";
  }
  const auto& scores = fwd.item_scores.values();
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto sa = scores[static_cast<std::size_t>(a)];
    const auto sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(args.k),
                                         order.size());
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-16s %s\n", "rank", "item", "score");
  std::cout << line;
  for (std::size_t r = 0; r < top; ++r) {
    const auto idx = static_cast<std::size_t>(order[r]);
    std::snprintf(line, sizeof(line), "%-6zu %-16s %.6f\n", r + 1,
                  vocab.items[idx].c_str(), scores[idx]);
    std::cout << line;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"mgcnet: multi-behavior session-based recommendation"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic session corpus");
  synth->add_option("--preset", synth_args.preset,
                    "tmall_like, yoochoose_like or planted_rule")
      ->required();
  synth->add_option("--n", synth_args.n_sessions, "number of sessions")->required();
  synth->add_option("--seed", synth_args.seed, "generator seed")->required();
  synth->add_option("--out", synth_args.out, "output corpus path")->required();
  synth->add_option("--format", synth_args.format, "jsonl or tsv");
  synth->callback([&] { run_synth(synth_args); });

  PreprocessArgs pre_args;
  auto* pre = app.add_subcommand(
      "preprocess", "filter, split and expand a corpus into examples");
  pre->add_option("--input", pre_args.input, "raw session corpus")->required();
  pre->add_option("--format", pre_args.format, "jsonl or tsv");
  pre->add_option("--out-dir", pre_args.out_dir, "artifact directory")->required();
  pre->add_option("--behaviors", pre_args.behaviors,
                  "declared behavior labels, comma separated (default: infer)")
      ->delimiter(',');
  pre->add_option("--min-session-len", pre_args.min_session_len,
                  "drop shorter sessions");
  pre->add_option("--min-item-count", pre_args.min_item_count,
                  "drop rarer items");
  pre->add_option("--ratios", pre_args.ratios, "train,valid,test split ratios")
      ->delimiter(',');
  pre->add_option("--max-session-len", pre_args.max_session_len,
                  "most-recent events kept per prefix");
  pre->add_option("--subset-frac", pre_args.subset_frac,
                  "keep only the most recent fraction of sessions");
  pre->add_option("--subset-order", pre_args.subset_order,
                  "before-filter or after-filter");
  pre->add_option("--seed", pre_args.seed, "split shuffle seed");
  pre->callback([&] { run_preprocess(pre_args); });

  BuildGraphArgs graph_args;
  auto* graph_cmd = app.add_subcommand(
      "build-graph", "build the item transition graph from training sessions");
  graph_cmd->add_option("--sessions", graph_args.sessions, "training sessions")
      ->required();
  graph_cmd->add_option("--format", graph_args.format, "jsonl or tsv");
  graph_cmd->add_option("--vocab", graph_args.vocab, "vocab.tsv")->required();
  graph_cmd->add_option("--behaviors-file", graph_args.behaviors_file,
                        "behaviors.tsv")
      ->required();
  graph_cmd->add_option("--out", graph_args.out, "graph TSV path")->required();
  graph_cmd->callback([&] { run_build_graph(graph_args); });

  TrainArgs train_args;
  ModelConfig train_config;
  std::string train_config_file;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", train_config_file,
                        "key=value config file; command-line flags win");
  train_cmd->add_option("--train", train_args.train_examples,
                        "training examples JSONL")
      ->required();
  train_cmd->add_option("--valid", train_args.valid_examples,
                        "validation examples JSONL (optional)");
  train_cmd->add_option("--graph", train_args.graph, "graph TSV")->required();
  train_cmd->add_option("--out-dir", train_args.out_dir, "run directory")
      ->required();
  train_cmd->add_option("--seed", train_config.seed, "training seed")->required();
  add_model_flags(train_cmd, &train_config);
  train_cmd->callback([&] {
    if (!train_config_file.empty()) {
      apply_config_file(train_config_file, train_cmd, &train_config);
    }
    run_train(train_args, train_config);
  });

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint JSON")
      ->required();
  eval_cmd->add_option("--examples", eval_args.examples, "examples JSONL")
      ->required();
  eval_cmd->add_option("--graph", eval_args.graph, "graph TSV")->required();
  eval_cmd->add_option("--out-dir", eval_args.out_dir, "report directory")
      ->required();
  eval_cmd->add_option("--k", eval_args.k, "ranking cutoff");
  eval_cmd->add_option("--task", eval_args.task,
                       "override the checkpoint's task protocol");
  eval_cmd->callback([&] { run_eval(eval_args); });

  PredictArgs predict_args;
  auto* predict_cmd =
      app.add_subcommand("predict", "rank items for one session");
  predict_cmd->add_option("--checkpoint", predict_args.checkpoint,
                          "checkpoint JSON")
      ->required();
  predict_cmd->add_option("--graph", predict_args.graph, "graph TSV")->required();
  predict_cmd->add_option("--vocab", predict_args.vocab, "vocab.tsv")->required();
  predict_cmd->add_option("--behaviors-file", predict_args.behaviors_file,
                          "behaviors.tsv")
      ->required();
  predict_cmd->add_option("--session", predict_args.session,
                          "file whose first session is scored")
      ->required();
  predict_cmd->add_option("--format", predict_args.format, "jsonl or tsv");
  predict_cmd->add_option("--k", predict_args.k, "items to print");
  predict_cmd->add_option("--task", predict_args.task,
                          "override the checkpoint's task protocol");
  predict_cmd->add_option("--next-behavior", predict_args.next_behavior,
                          "ground-truth next behavior label (task1)");
  predict_cmd->callback([&] { run_predict(predict_args); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mgcnet
