#include "bwexp/policy_net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace bwexp {

void NetConfig::validate() const {
  if (d < 1) throw Error("NetConfig: d must be positive");
  if (encoder_layers < 1) throw Error("NetConfig: need at least one encoder layer");
  if (!(utility_cap > 0.0)) throw Error("NetConfig: utility_cap must be positive");
  if (!(logit_clip > 0.0)) throw Error("NetConfig: logit_clip must be positive");
}

AttentionResult attention(const Matrix& hq, const Matrix& hkv, const Matrix& mask, const AttentionWeights& w) {
  const Eigen::Index d = w.wq.rows();
  if (hq.rows() != w.wq.cols() || hkv.rows() != w.wk.cols()) throw Error("attention: feature width mismatch");
  if (mask.rows() != hq.cols() || mask.cols() != hkv.cols()) throw Error("attention: mask shape mismatch");
  const Matrix q = w.wq * hq;
  const Matrix k = w.wk * hkv;
  const Matrix v = w.wv * hkv;
  const Matrix u = (q.transpose() * k) / std::sqrt(static_cast<double>(d));
  AttentionResult r;
  r.weights = Matrix::Zero(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      if (mask(i, j) == 0.0) m = std::max(m, u(i, j));
    if (m == -std::numeric_limits<double>::infinity()) throw Error("attention: query row fully masked");
    double z = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      if (mask(i, j) == 0.0) {
        r.weights(i, j) = std::exp(u(i, j) - m);
        z += r.weights(i, j);
      }
    r.weights.row(i) /= z;
  }
  r.output = v * r.weights.transpose();
  return r;
}

Matrix raw_vertex_inputs(const InformativeGraph& g, double utility_cap) {
  Matrix x(5, g.size());
  const double ex = g.extent_x_m > 0.0 ? g.extent_x_m : 1.0;
  const double ey = g.extent_y_m > 0.0 ? g.extent_y_m : 1.0;
  for (int i = 0; i < g.size(); ++i) {
    const Vertex& v = g.vertices[i];
    x(0, i) = v.coords.x / ex;
    x(1, i) = v.coords.y / ey;
    x(2, i) = v.utility / utility_cap;
    x(3, i) = v.guidepost;
    x(4, i) = v.occupancy;
  }
  return x;
}

namespace layers {

Var Linear::apply(Tape& t, Var x) const { return t.add_bias(t.matmul(t.param(*w), x), t.param(*b)); }

Var Attention::apply(Tape& t, Var hq, Var hkv, const Matrix& mask) const {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(wq->value.rows()));
  const Var q = t.matmul(t.param(*wq), hq);
  const Var k = t.matmul(t.param(*wk), hkv);
  const Var v = t.matmul(t.param(*wv), hkv);
  const Var u = t.scale(t.matmul(t.transpose(q), k), inv_sqrt_d);
  const Var w = t.masked_softmax_rows(u, mask);
  return t.matmul(v, t.transpose(w));
}

Var Attention::values(Tape& t, Var h) const { return t.matmul(t.param(*wv), h); }

Var LayerNorm::apply(Tape& t, Var x) const { return t.layer_norm_cols(x, t.param(*gain), t.param(*bias)); }

Var EncoderLayer::apply(Tape& t, Var h, const Matrix& mask) const {
  const Var a = attn.apply(t, h, h, mask);
  if (!feed_forward) return a;
  const Var h1 = norm1.apply(t, t.add(h, a));
  const Var f = ff2.apply(t, t.gelu(ff1.apply(t, h1)));
  return norm2.apply(t, t.add(h1, f));
}

Linear make_linear(nn::ParameterStore& s, const std::string& name, int in, int out, std::mt19937_64& rng) {
  Linear l;
  l.w = &s.add(name + ".w", nn::glorot(out, in, rng));
  l.b = &s.add(name + ".b", Matrix::Zero(out, 1));
  return l;
}

Attention make_attention(nn::ParameterStore& s, const std::string& name, int d, std::mt19937_64& rng) {
  Attention a;
  a.wq = &s.add(name + ".wq", nn::glorot(d, d, rng));
  a.wk = &s.add(name + ".wk", nn::glorot(d, d, rng));
  a.wv = &s.add(name + ".wv", nn::glorot(d, d, rng));
  return a;
}

LayerNorm make_layer_norm(nn::ParameterStore& s, const std::string& name, int d) {
  LayerNorm n;
  n.gain = &s.add(name + ".gain", Matrix::Ones(d, 1));
  n.bias = &s.add(name + ".bias", Matrix::Zero(d, 1));
  return n;
}

}  // namespace layers

GraphEncoder::GraphEncoder(nn::ParameterStore& store, const std::string& prefix, const NetConfig& config,
                           std::mt19937_64& rng)
    : config_(config) {
  const int d = config.d;
  project_ = layers::make_linear(store, prefix + "project", 5, d, rng);
  for (int l = 0; l < config.encoder_layers; ++l) {
    const std::string p = prefix + "encoder" + std::to_string(l);
    layers::EncoderLayer layer;
    layer.attn = layers::make_attention(store, p + ".attn", d, rng);
    layer.feed_forward = config.feed_forward;
    if (config.feed_forward) {
      layer.norm1 = layers::make_layer_norm(store, p + ".norm1", d);
      layer.ff1 = layers::make_linear(store, p + ".ff1", d, config.hidden(), rng);
      layer.ff2 = layers::make_linear(store, p + ".ff2", config.hidden(), d, rng);
      layer.norm2 = layers::make_layer_norm(store, p + ".norm2", d);
    }
    layers_.push_back(layer);
  }
  state_attn_ = layers::make_attention(store, prefix + "state.attn", d, rng);
  state_out_ = layers::make_linear(store, prefix + "state.out", 2 * d, d, rng);
}

Var GraphEncoder::project_raw(Tape& t, const InformativeGraph& graph) const {
  return project_.apply(t, t.constant(raw_vertex_inputs(graph, config_.utility_cap)));
}

Var GraphEncoder::encode(Tape& t, Var raw, const Matrix& edge_mask) const {
  Var h = raw;
  for (const auto& layer : layers_) h = layer.apply(t, h, edge_mask);
  return h;
}

Var GraphEncoder::decode_current_state(Tape& t, Var fhat, int current) const {
  if (current < 0 || current >= t.cols(fhat)) throw Error("decode_current_state: bad current index");
  const Var fc = t.col(fhat, current);
  const Var attended = state_attn_.apply(t, fc, fhat, Matrix::Zero(1, t.cols(fhat)));
  return state_out_.apply(t, t.concat_rows(attended, fc));
}

PolicyNet::PolicyNet(const NetConfig& config) : config_(config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  encoder_ = GraphEncoder(store_, "", config, rng);
  coop_attn_ = layers::make_attention(store_, "coop.attn", config.d, rng);
  fuse_ = layers::make_linear(store_, "pointer.fuse", 2 * config.d, config.d, rng);
  ptr_wq_ = &store_.add("pointer.wq", nn::glorot(config.d, config.d, rng));
  ptr_wk_ = &store_.add("pointer.wk", nn::glorot(config.d, config.d, rng));
}

RobotEncoding PolicyNet::encode_robot(Tape& t, const InformativeGraph& graph) const {
  RobotEncoding enc;
  const Var raw = encoder_.project_raw(t, graph);
  enc.fhat = encoder_.encode(t, raw, graph.edge_mask());
  enc.message = encoder_.decode_current_state(t, enc.fhat, graph.current_index);
  enc.neighbors = graph.navigable_neighbors(graph.current_index);
  return enc;
}

Var PolicyNet::decode_cooperation(Tape& t, Var own, const std::vector<Var>& others) const {
  if (others.empty()) return coop_attn_.values(t, own);
  const Var keys = t.concat_cols(others);
  return coop_attn_.apply(t, own, keys, Matrix::Zero(1, t.cols(keys)));
}

Var PolicyNet::pointer_query(Tape& t, Var own, Var cooperative) const {
  return fuse_.apply(t, t.concat_rows(own, cooperative));
}

Var PolicyNet::pointer_log_probs(Tape& t, Var query, Var neighbor_features) const {
  if (t.cols(neighbor_features) < 1) throw Error("pointer_log_probs: no navigable neighbours");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.d));
  const Var q = t.matmul(t.param(*ptr_wq_), query);
  const Var k = t.matmul(t.param(*ptr_wk_), neighbor_features);
  const Var scores = t.scale(t.matmul(t.transpose(k), q), inv_sqrt_d);
  const Var logits = t.scale(t.tanh(scores), config_.logit_clip);
  return t.log_softmax_col(logits);
}

Var PolicyNet::action_log_probs(Tape& t, const RobotEncoding& enc, const std::vector<Var>& others) const {
  if (enc.neighbors.empty()) throw Error("action_log_probs: robot has no navigable neighbour");
  const Var coop = decode_cooperation(t, enc.message, others);
  const Var query = pointer_query(t, enc.message, coop);
  return pointer_log_probs(t, query, t.gather_cols(enc.fhat, enc.neighbors));
}

CriticNet::CriticNet(const NetConfig& config) : config_(config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  encoder_ = GraphEncoder(store_, "", config, rng);
  head1_ = layers::make_linear(store_, "q.hidden", 2 * config.d, config.hidden(), rng);
  head2_ = layers::make_linear(store_, "q.out", config.hidden(), 1, rng);
}

Var CriticNet::q_values(Tape& t, const InformativeGraph& graph, const std::vector<int>& action_vertices) const {
  if (action_vertices.empty()) throw Error("q_values: empty action set");
  const Var raw = encoder_.project_raw(t, graph);
  const Var fhat = encoder_.encode(t, raw, graph.edge_mask());
  const Var state = encoder_.decode_current_state(t, fhat, graph.current_index);
  const int k = static_cast<int>(action_vertices.size());
  const Var pairs = t.concat_rows(t.repeat_cols(state, k), t.gather_cols(fhat, action_vertices));
  const Var q = head2_.apply(t, t.gelu(head1_.apply(t, pairs)));
  return t.transpose(q);
}

int choose_action(const Vector& log_probs, bool train_mode, std::mt19937_64& rng) {
  if (log_probs.size() == 0) throw Error("choose_action: empty distribution");
  if (!train_mode) {
    Eigen::Index best = 0;
    log_probs.maxCoeff(&best);
    return static_cast<int>(best);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < log_probs.size(); ++i) {
    acc += std::exp(log_probs(i));
    if (r < acc) return static_cast<int>(i);
  }
  return static_cast<int>(log_probs.size() - 1);
}

namespace {

constexpr const char* kFormat = "bwexp-checkpoint";
constexpr int kVersion = 1;

nlohmann::json config_json(const NetConfig& c) {
  return {{"d", c.d},
          {"encoder_layers", c.encoder_layers},
          {"feed_forward", c.feed_forward},
          {"ff_hidden", c.ff_hidden},
          {"utility_cap", c.utility_cap},
          {"logit_clip", c.logit_clip},
          {"seed", c.seed}};
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["config"] = config_json(ckpt.config);
  manifest["meta"] = ckpt.meta;
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& [name, m] : ckpt.arrays) arrays.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  manifest["arrays"] = arrays;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_checkpoint: cannot open " + path);
  os << manifest.dump() << '\n';
  for (const auto& [name, m] : ckpt.arrays)
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!os) throw Error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw Error("load_checkpoint: missing manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("load_checkpoint: bad manifest: ") + e.what());
  }
  if (manifest.value("format", "") != kFormat) throw Error("load_checkpoint: not a checkpoint file");
  if (manifest.value("version", 0) != kVersion) throw Error("load_checkpoint: unsupported version");

  Checkpoint ckpt;
  const auto& c = manifest.at("config");
  ckpt.config.d = c.at("d");
  ckpt.config.encoder_layers = c.at("encoder_layers");
  ckpt.config.feed_forward = c.at("feed_forward");
  ckpt.config.ff_hidden = c.at("ff_hidden");
  ckpt.config.utility_cap = c.at("utility_cap");
  ckpt.config.logit_clip = c.at("logit_clip");
  ckpt.config.seed = c.at("seed");
  ckpt.meta = manifest.at("meta").get<std::map<std::string, std::string>>();
  for (const auto& a : manifest.at("arrays")) {
    Matrix m(a.at("rows").get<Eigen::Index>(), a.at("cols").get<Eigen::Index>());
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw Error("load_checkpoint: truncated array data");
    ckpt.arrays.emplace(a.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

void store_into(Checkpoint& ckpt, const std::string& prefix, const nn::ParameterStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) ckpt.arrays[prefix + store[i].name] = store[i].value;
}

void load_from(const Checkpoint& ckpt, const std::string& prefix, nn::ParameterStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto it = ckpt.arrays.find(prefix + store[i].name);
    if (it == ckpt.arrays.end()) throw Error("checkpoint is missing " + prefix + store[i].name);
    if (it->second.rows() != store[i].value.rows() || it->second.cols() != store[i].value.cols())
      throw Error("checkpoint shape mismatch for " + prefix + store[i].name);
    store[i].value = it->second;
  }
}

std::unique_ptr<PolicyNet> load_policy(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  auto net = std::make_unique<PolicyNet>(ckpt.config);
  load_from(ckpt, "policy/", net->params());
  return net;
}

}  // namespace bwexp
