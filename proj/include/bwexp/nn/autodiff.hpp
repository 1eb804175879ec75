#pragma once

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation of one forward pass; backward() walks the
// records in reverse and accumulates gradients into the Parameters that were
// read through Tape::param().

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace bwexp::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Owns named parameters with stable addresses, in insertion order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(std::string name, Matrix init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  std::size_t scalar_count() const;

  /// Requires identical names and shapes.
  void copy_values_from(const ParameterStore& other);
  /// value <- (1 - tau) * value + tau * other.value
  void soft_update_from(const ParameterStore& other, double tau);
  bool values_equal(const ParameterStore& other) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  Var constant(Matrix value);
  Var param(Parameter& p);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  int rows(Var v) const { return static_cast<int>(nodes_[v.id].value.rows()); }
  int cols(Var v) const { return static_cast<int>(nodes_[v.id].value.cols()); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  /// a (r x c) plus a column bias (r x 1) broadcast across columns.
  Var add_bias(Var a, Var bias);
  Var transpose(Var a);
  Var tanh(Var a);
  Var gelu(Var a);
  Var relu(Var a);
  Var exp(Var a);
  /// Row-wise softmax where mask(i,j) != 0 forces weight 0. Every row needs an unmasked entry.
  Var masked_softmax_rows(Var scores, const Matrix& mask);
  /// Row-wise softmax without a mask.
  Var softmax_rows(Var scores);
  /// Log-softmax over all entries of a column vector.
  Var log_softmax_col(Var a);
  /// Per-column layer normalisation with gain and bias (both r x 1).
  Var layer_norm_cols(Var a, Var gain, Var bias, double eps = 1e-5);
  Var concat_rows(Var top, Var bottom);
  Var concat_cols(const std::vector<Var>& parts);
  Var gather_cols(Var a, const std::vector<int>& cols);
  Var col(Var a, int j) { return gather_cols(a, {j}); }
  Var repeat_cols(Var a, int times);
  Var element(Var a, int i, int j);
  Var sum(Var a);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 node, propagates, and adds into Parameter::grad.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> back;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Matrix value, bool needs_grad, std::function<void(Tape&, int)> back);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  Matrix& g(int id) { return nodes_[id].grad; }
  const Matrix& val(int id) const { return nodes_[id].value; }
  void accum(int id, const Matrix& d);

  std::vector<Node> nodes_;
};

/// Glorot-uniform initialisation.
Matrix glorot(int rows, int cols, std::mt19937_64& rng);

}  // namespace bwexp::nn
