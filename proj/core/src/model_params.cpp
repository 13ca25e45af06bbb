#include "mgcnet/model_params.hpp"

#include <fstream>
#include <functional>
#include <stdexcept>

#include "json.hpp"

namespace mgcnet {

namespace {

Tensor gaussian_tensor(Shape shape, Rng& rng) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian() * 0.1;
  return Tensor::from_values(std::move(shape), std::move(v), true);
}

AttentionInstanceParams gaussian_attention(std::size_t d, Rng& rng) {
  return AttentionInstanceParams{gaussian_tensor({d, d}, rng),
                                 gaussian_tensor({d, d}, rng),
                                 gaussian_tensor({d, 1}, rng),
                                 gaussian_tensor({1, d}, rng)};
}

void append_attention(std::vector<ParamRef>& out, const std::string& prefix,
                      const AttentionInstanceParams& a) {
  out.push_back({prefix + ".w1", a.w1});
  out.push_back({prefix + ".w2", a.w2});
  out.push_back({prefix + ".r", a.r});
  out.push_back({prefix + ".b", a.b});
}

int n_relations(const ModelDims& dims) { return dims.n_behaviors * dims.n_behaviors; }

}  // namespace

ModelParams init_params(const ModelDims& dims, bool tie_attention, Rng& rng) {
  if (dims.n_items < 1 || dims.n_behaviors < 1 || dims.d < 1 ||
      dims.gnn_layers < 0 || dims.max_session_len < 1) {
    throw std::runtime_error("init_params: invalid model dimensions");
  }
  const auto d = static_cast<std::size_t>(dims.d);
  ModelParams p;
  p.dims = dims;
  p.tie_attention = tie_attention;

  p.item_embeddings = gaussian_tensor({static_cast<std::size_t>(dims.n_items), d}, rng);
  p.behavior_embeddings =
      gaussian_tensor({static_cast<std::size_t>(dims.n_behaviors), d}, rng);
  p.position_embeddings =
      gaussian_tensor({static_cast<std::size_t>(dims.max_session_len), d}, rng);

  p.encoder.resize(static_cast<std::size_t>(dims.gnn_layers));
  p.residual.resize(static_cast<std::size_t>(dims.gnn_layers));
  for (int k = 0; k < dims.gnn_layers; ++k) {
    auto& layer = p.encoder[static_cast<std::size_t>(k)];
    layer.reserve(static_cast<std::size_t>(n_relations(dims)));
    for (int r = 0; r < n_relations(dims); ++r) {
      layer.push_back(RelationLayerParams{
          gaussian_tensor({d, d}, rng), gaussian_tensor({d, d}, rng),
          gaussian_tensor({d, 1}, rng), gaussian_tensor({d, 1}, rng)});
    }
    p.residual[static_cast<std::size_t>(k)] = gaussian_tensor({d, d}, rng);
  }

  p.gru_wz = gaussian_tensor({2 * d, d}, rng);
  p.gru_uz = gaussian_tensor({d, d}, rng);
  p.gru_bz = gaussian_tensor({1, d}, rng);
  p.gru_wr = gaussian_tensor({2 * d, d}, rng);
  p.gru_ur = gaussian_tensor({d, d}, rng);
  p.gru_br = gaussian_tensor({1, d}, rng);
  p.gru_wc = gaussian_tensor({2 * d, d}, rng);
  p.gru_uc = gaussian_tensor({d, d}, rng);
  p.gru_bc = gaussian_tensor({1, d}, rng);

  p.w_local = gaussian_tensor({d, d}, rng);
  p.w_global = gaussian_tensor({d, d}, rng);

  p.w_message = gaussian_tensor({4 * d, d}, rng);
  p.attn_general = gaussian_attention(d, rng);
  if (tie_attention) {
    p.attn_current = p.attn_general;
    p.attn_behavior = p.attn_general;
  } else {
    p.attn_current = gaussian_attention(d, rng);
    p.attn_behavior = gaussian_attention(d, rng);
  }
  p.w_compose = gaussian_tensor({2 * d, d}, rng);
  p.w_behavior = gaussian_tensor({d, d}, rng);
  p.b_behavior = gaussian_tensor({1, d}, rng);
  return p;
}

std::vector<ParamRef> ModelParams::all_parameters() const {
  std::vector<ParamRef> out;
  out.push_back({"item_embeddings", item_embeddings});
  out.push_back({"behavior_embeddings", behavior_embeddings});
  out.push_back({"position_embeddings", position_embeddings});
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    for (std::size_t r = 0; r < encoder[k].size(); ++r) {
      const std::string prefix =
          "encoder.l" + std::to_string(k) + ".r" + std::to_string(r);
      out.push_back({prefix + ".w_target", encoder[k][r].w_target});
      out.push_back({prefix + ".w_source", encoder[k][r].w_source});
      out.push_back({prefix + ".attn", encoder[k][r].attn});
      out.push_back({prefix + ".w_weight", encoder[k][r].w_weight});
    }
    out.push_back({"encoder.l" + std::to_string(k) + ".residual", residual[k]});
  }
  out.push_back({"gru.wz", gru_wz});
  out.push_back({"gru.uz", gru_uz});
  out.push_back({"gru.bz", gru_bz});
  out.push_back({"gru.wr", gru_wr});
  out.push_back({"gru.ur", gru_ur});
  out.push_back({"gru.br", gru_br});
  out.push_back({"gru.wc", gru_wc});
  out.push_back({"gru.uc", gru_uc});
  out.push_back({"gru.bc", gru_bc});
  out.push_back({"context.w_local", w_local});
  out.push_back({"context.w_global", w_global});
  out.push_back({"session.w_message", w_message});
  append_attention(out, "attn.general", attn_general);
  if (!tie_attention) {
    append_attention(out, "attn.current", attn_current);
    append_attention(out, "attn.behavior", attn_behavior);
  }
  out.push_back({"session.w_compose", w_compose});
  out.push_back({"behavior.w", w_behavior});
  out.push_back({"behavior.b", b_behavior});
  return out;
}

namespace {

// Copies every tensor through `copy_one`, preserving the tie aliasing.
ModelParams transform_params(const ModelParams& src,
                             const std::function<Tensor(const Tensor&)>& copy_one) {
  ModelParams p;
  p.dims = src.dims;
  p.tie_attention = src.tie_attention;
  p.item_embeddings = copy_one(src.item_embeddings);
  p.behavior_embeddings = copy_one(src.behavior_embeddings);
  p.position_embeddings = copy_one(src.position_embeddings);
  p.encoder.resize(src.encoder.size());
  p.residual.resize(src.residual.size());
  for (std::size_t k = 0; k < src.encoder.size(); ++k) {
    for (const auto& rel : src.encoder[k]) {
      p.encoder[k].push_back(RelationLayerParams{copy_one(rel.w_target),
                                                 copy_one(rel.w_source),
                                                 copy_one(rel.attn),
                                                 copy_one(rel.w_weight)});
    }
    p.residual[k] = copy_one(src.residual[k]);
  }
  p.gru_wz = copy_one(src.gru_wz);
  p.gru_uz = copy_one(src.gru_uz);
  p.gru_bz = copy_one(src.gru_bz);
  p.gru_wr = copy_one(src.gru_wr);
  p.gru_ur = copy_one(src.gru_ur);
  p.gru_br = copy_one(src.gru_br);
  p.gru_wc = copy_one(src.gru_wc);
  p.gru_uc = copy_one(src.gru_uc);
  p.gru_bc = copy_one(src.gru_bc);
  p.w_local = copy_one(src.w_local);
  p.w_global = copy_one(src.w_global);
  p.w_message = copy_one(src.w_message);
  auto copy_attention = [&](const AttentionInstanceParams& a) {
    return AttentionInstanceParams{copy_one(a.w1), copy_one(a.w2), copy_one(a.r),
                                   copy_one(a.b)};
  };
  p.attn_general = copy_attention(src.attn_general);
  if (src.tie_attention) {
    p.attn_current = p.attn_general;
    p.attn_behavior = p.attn_general;
  } else {
    p.attn_current = copy_attention(src.attn_current);
    p.attn_behavior = copy_attention(src.attn_behavior);
  }
  p.w_compose = copy_one(src.w_compose);
  p.w_behavior = copy_one(src.w_behavior);
  p.b_behavior = copy_one(src.b_behavior);
  return p;
}

}  // namespace

ModelParams ModelParams::detached_copy() const {
  return transform_params(*this, [](const Tensor& t) { return t.detach(); });
}

ModelParams ModelParams::clone() const {
  return transform_params(*this, [](const Tensor& t) {
    return Tensor::from_values(t.shape(), t.values(), true);
  });
}

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["d"] = c.d;
  j["gnn_layers"] = c.gnn_layers;
  j["max_session_len"] = c.max_session_len;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["lambda_weights"] = c.lambda_weights;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["lr_decay_step"] = c.lr_decay_step;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["task"] = task_name(c.task);
  j["neighbor_cap"] = c.neighbor_cap;
  j["raw_edge_weights"] = c.raw_edge_weights;
  j["normalized_attention"] = c.normalized_attention;
  j["categorical_ce"] = c.categorical_ce;
  j["tie_attention"] = c.tie_attention;
  j["ablate_general_attention"] = c.ablate_general_attention;
  j["ablate_current_attention"] = c.ablate_current_attention;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.value("d", c.d);
  c.gnn_layers = j.value("gnn_layers", c.gnn_layers);
  c.max_session_len = j.value("max_session_len", c.max_session_len);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda_weights = j.value("lambda_weights", c.lambda_weights);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.lr_decay_step = j.value("lr_decay_step", c.lr_decay_step);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.task = task_from_name(j.value("task", task_name(c.task)));
  c.neighbor_cap = j.value("neighbor_cap", c.neighbor_cap);
  c.raw_edge_weights = j.value("raw_edge_weights", c.raw_edge_weights);
  c.normalized_attention = j.value("normalized_attention", c.normalized_attention);
  c.categorical_ce = j.value("categorical_ce", c.categorical_ce);
  c.tie_attention = j.value("tie_attention", c.tie_attention);
  c.ablate_general_attention =
      j.value("ablate_general_attention", c.ablate_general_attention);
  c.ablate_current_attention =
      j.value("ablate_current_attention", c.ablate_current_attention);
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelConfig& config) {
  nlohmann::json j;
  j["format"] = "mgcnet-checkpoint-v1";
  j["dims"] = {{"n_items", params.dims.n_items},
               {"n_behaviors", params.dims.n_behaviors},
               {"d", params.dims.d},
               {"gnn_layers", params.dims.gnn_layers},
               {"max_session_len", params.dims.max_session_len}};
  j["tie_attention"] = params.tie_attention;
  j["config"] = config_to_json(config);
  nlohmann::json jp = nlohmann::json::object();
  for (const auto& [name, tensor] : params.all_parameters()) {
    jp[name] = {{"shape", tensor.shape()}, {"values", tensor.values()}};
  }
  j["params"] = std::move(jp);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid checkpoint (" + e.what() + ")");
  }
  if (!j.is_object() || j.value("format", "") != "mgcnet-checkpoint-v1") {
    throw std::runtime_error(path + ": not an mgcnet checkpoint");
  }
  ModelDims dims;
  dims.n_items = j["dims"]["n_items"].get<int>();
  dims.n_behaviors = j["dims"]["n_behaviors"].get<int>();
  dims.d = j["dims"]["d"].get<int>();
  dims.gnn_layers = j["dims"]["gnn_layers"].get<int>();
  dims.max_session_len = j["dims"]["max_session_len"].get<int>();

  Rng rng(0);
  ModelParams params = init_params(dims, j["tie_attention"].get<bool>(), rng);
  for (auto& [name, tensor] : params.all_parameters()) {
    if (!j["params"].contains(name)) {
      throw std::runtime_error(path + ": checkpoint is missing parameter '" + name + "'");
    }
    const auto& entry = j["params"][name];
    const auto shape = entry["shape"].get<Shape>();
    if (shape != tensor.shape()) {
      throw std::runtime_error(path + ": parameter '" + name + "' has shape " +
                               shape_str(shape) + ", expected " +
                               shape_str(tensor.shape()));
    }
    auto values = entry["values"].get<std::vector<double>>();
    if (values.size() != tensor.numel()) {
      throw std::runtime_error(path + ": parameter '" + name + "' has wrong size");
    }
    tensor.mutable_values() = std::move(values);
  }

  Checkpoint checkpoint;
  checkpoint.params = std::move(params);
  checkpoint.config = config_from_json(j.value("config", nlohmann::json::object()));
  return checkpoint;
}

}  // namespace mgcnet
