#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bwexp/graph.hpp"
#include "bwexp/nn/autodiff.hpp"

namespace bwexp {

using nn::Matrix;
using nn::Tape;
using nn::Var;
using nn::Vector;

struct NetConfig {
  int d = 64;
  int encoder_layers = 6;
  // Position-wise feed-forward with residual + layer norm after each attention
  // layer. Off gives bare stacked attention.
  bool feed_forward = true;
  int ff_hidden = 0;  // 0 means 2 * d
  double utility_cap = 30.0;
  double logit_clip = 10.0;
  std::uint64_t seed = 1;

  int hidden() const { return ff_hidden > 0 ? ff_hidden : 2 * d; }
  void validate() const;
};

/// Plain weight matrices of one attention layer (all d x d).
struct AttentionWeights {
  Matrix wq, wk, wv;
};

struct AttentionResult {
  Matrix output;   // d x A
  Matrix weights;  // A x B, rows sum to 1, zero where masked
};

/// Masked scaled dot-product attention on plain matrices. Columns of hq / hkv
/// are the query / key-value feature vectors; mask(i, j) = 1 blocks key j for query i.
AttentionResult attention(const Matrix& hq, const Matrix& hkv, const Matrix& mask, const AttentionWeights& w);

/// 5 x N raw vertex inputs: x / extent_x, y / extent_y, utility / cap, guidepost, occupancy.
Matrix raw_vertex_inputs(const InformativeGraph& graph, double utility_cap);

namespace layers {

struct Linear {
  nn::Parameter* w = nullptr;
  nn::Parameter* b = nullptr;
  Var apply(Tape& t, Var x) const;
};

struct Attention {
  nn::Parameter* wq = nullptr;
  nn::Parameter* wk = nullptr;
  nn::Parameter* wv = nullptr;
  Var apply(Tape& t, Var hq, Var hkv, const Matrix& mask) const;
  /// Value path only; used when there are no keys.
  Var values(Tape& t, Var h) const;
  AttentionWeights weights() const { return {wq->value, wk->value, wv->value}; }
};

struct LayerNorm {
  nn::Parameter* gain = nullptr;
  nn::Parameter* bias = nullptr;
  Var apply(Tape& t, Var x) const;
};

struct EncoderLayer {
  Attention attn;
  LayerNorm norm1, norm2;
  Linear ff1, ff2;
  bool feed_forward = true;
  Var apply(Tape& t, Var h, const Matrix& mask) const;
};

Linear make_linear(nn::ParameterStore& s, const std::string& name, int in, int out, std::mt19937_64& rng);
Attention make_attention(nn::ParameterStore& s, const std::string& name, int d, std::mt19937_64& rng);
LayerNorm make_layer_norm(nn::ParameterStore& s, const std::string& name, int d);

}  // namespace layers

/// Raw projection, masked self-attention encoder and current-state decoder.
/// Shared architecture of the policy and of each critic.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(nn::ParameterStore& store, const std::string& prefix, const NetConfig& config, std::mt19937_64& rng);

  Var project_raw(Tape& t, const InformativeGraph& graph) const;
  Var encode(Tape& t, Var raw, const Matrix& edge_mask) const;
  /// Cross-attention of the current vertex over all vertices, concatenated with
  /// the current feature and re-projected to d.
  Var decode_current_state(Tape& t, Var fhat, int current) const;

  const std::vector<layers::EncoderLayer>& encoder_layers() const { return layers_; }

 private:
  NetConfig config_;
  layers::Linear project_;
  std::vector<layers::EncoderLayer> layers_;
  layers::Attention state_attn_;
  layers::Linear state_out_;
};

/// Tape handles for one robot's encoding pass.
struct RobotEncoding {
  Var fhat;
  Var message;
  std::vector<int> neighbors;  // navigable neighbour vertex ids, the action support
};

class PolicyNet {
 public:
  explicit PolicyNet(const NetConfig& config);
  PolicyNet(const PolicyNet&) = delete;
  PolicyNet& operator=(const PolicyNet&) = delete;

  const NetConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const GraphEncoder& encoder() const { return encoder_; }

  RobotEncoding encode_robot(Tape& t, const InformativeGraph& graph) const;

  /// Cross-attention: own message queries the other robots' messages. With no
  /// other messages the output is the value projection of the own message.
  Var decode_cooperation(Tape& t, Var own, const std::vector<Var>& others) const;

  /// Log-probabilities (K x 1) over the navigable neighbours.
  Var action_log_probs(Tape& t, const RobotEncoding& enc, const std::vector<Var>& others) const;

  /// Pointer head: clipped compatibility of the query with each neighbour column.
  Var pointer_log_probs(Tape& t, Var query, Var neighbor_features) const;

  /// Fuses own message and cooperative feature into the pointer query.
  Var pointer_query(Tape& t, Var own, Var cooperative) const;

 private:
  NetConfig config_;
  nn::ParameterStore store_;
  GraphEncoder encoder_;
  layers::Attention coop_attn_;
  layers::Linear fuse_;
  nn::Parameter* ptr_wq_ = nullptr;
  nn::Parameter* ptr_wk_ = nullptr;
};

/// Discrete-action critic: encoder + current-state decoder (no communication) and a
/// per-action head scoring the decoded state against each candidate vertex.
class CriticNet {
 public:
  explicit CriticNet(const NetConfig& config);
  CriticNet(const CriticNet&) = delete;
  CriticNet& operator=(const CriticNet&) = delete;

  const NetConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  /// Q-values (K x 1), one per entry of action_vertices (vertex ids in graph).
  Var q_values(Tape& t, const InformativeGraph& graph, const std::vector<int>& action_vertices) const;

 private:
  NetConfig config_;
  nn::ParameterStore store_;
  GraphEncoder encoder_;
  layers::Linear head1_;
  layers::Linear head2_;
};

struct PolicyOutput {
  Vector log_probs;            // over navigable neighbours of the current vertex
  std::vector<int> neighbors;  // vertex ids, same order
  int action = -1;             // index into neighbors
};

/// Samples when train_mode, else argmax.
int choose_action(const Vector& log_probs, bool train_mode, std::mt19937_64& rng);

// Checkpoint: one JSON manifest line, then the named arrays as raw little-endian doubles.
struct Checkpoint {
  NetConfig config;
  std::map<std::string, Matrix> arrays;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Builds a policy from the "policy/" arrays of a saved checkpoint.
std::unique_ptr<PolicyNet> load_policy(const std::string& path);

void store_into(Checkpoint& ckpt, const std::string& prefix, const nn::ParameterStore& store);
void load_from(const Checkpoint& ckpt, const std::string& prefix, nn::ParameterStore& store);

}  // namespace bwexp
