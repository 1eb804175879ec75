#include "bwexp/nn/autodiff.hpp"

#include <cmath>
#include <numbers>

#include "bwexp/geometry.hpp"

namespace bwexp::nn {

Parameter& ParameterStore::add(std::string name, Matrix init) {
  if (find(name)) throw Error("ParameterStore: duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

namespace {
void check_compatible(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) throw Error("ParameterStore: parameter count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].value.rows() != b[i].value.rows() || a[i].value.cols() != b[i].value.cols())
      throw Error("ParameterStore: layout mismatch at " + a[i].name);
  }
}
}  // namespace

void ParameterStore::copy_values_from(const ParameterStore& other) {
  check_compatible(*this, other);
  for (std::size_t i = 0; i < size(); ++i) params_[i]->value = other[i].value;
}

void ParameterStore::soft_update_from(const ParameterStore& other, double tau) {
  check_compatible(*this, other);
  for (std::size_t i = 0; i < size(); ++i) {
    if (tau == 1.0)
      params_[i]->value = other[i].value;
    else
      params_[i]->value = (1.0 - tau) * params_[i]->value + tau * other[i].value;
  }
}

bool ParameterStore::values_equal(const ParameterStore& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (params_[i]->name != other[i].name || params_[i]->value != other[i].value) return false;
  return true;
}

Var Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::accum(int id, const Matrix& d) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = d;
  else
    n.grad += d;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value, true, nullptr);
  nodes_[v.id].param = &p;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  if (cols(a) != rows(b)) throw Error("Tape::matmul: shape mismatch");
  return push(val(a.id) * val(b.id), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Matrix& d = t.g(self);
    if (t.needs(a)) t.accum(a.id, d * t.val(b.id).transpose());
    if (t.needs(b)) t.accum(b.id, t.val(a.id).transpose() * d);
  });
}

Var Tape::add(Var a, Var b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw Error("Tape::add: shape mismatch");
  return push(val(a.id) + val(b.id), needs(a) || needs(b), [a, b](Tape& t, int self) {
    t.accum(a.id, t.g(self));
    t.accum(b.id, t.g(self));
  });
}

Var Tape::sub(Var a, Var b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw Error("Tape::sub: shape mismatch");
  return push(val(a.id) - val(b.id), needs(a) || needs(b), [a, b](Tape& t, int self) {
    t.accum(a.id, t.g(self));
    if (t.needs(b)) t.accum(b.id, -t.g(self));
  });
}

Var Tape::hadamard(Var a, Var b) {
  if (rows(a) != rows(b) || cols(a) != cols(b)) throw Error("Tape::hadamard: shape mismatch");
  return push(val(a.id).cwiseProduct(val(b.id)), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Matrix& d = t.g(self);
    if (t.needs(a)) t.accum(a.id, d.cwiseProduct(t.val(b.id)));
    if (t.needs(b)) t.accum(b.id, d.cwiseProduct(t.val(a.id)));
  });
}

Var Tape::scale(Var a, double s) {
  return push(s * val(a.id), needs(a), [a, s](Tape& t, int self) { t.accum(a.id, s * t.g(self)); });
}

Var Tape::add_scalar(Var a, double s) {
  return push(val(a.id).array() + s, needs(a), [a](Tape& t, int self) { t.accum(a.id, t.g(self)); });
}

Var Tape::add_bias(Var a, Var bias) {
  if (cols(bias) != 1 || rows(bias) != rows(a)) throw Error("Tape::add_bias: shape mismatch");
  Matrix out = val(a.id).colwise() + val(bias.id).col(0);
  return push(std::move(out), needs(a) || needs(bias), [a, bias](Tape& t, int self) {
    const Matrix& d = t.g(self);
    t.accum(a.id, d);
    if (t.needs(bias)) t.accum(bias.id, d.rowwise().sum());
  });
}

Var Tape::transpose(Var a) {
  return push(val(a.id).transpose(), needs(a), [a](Tape& t, int self) { t.accum(a.id, t.g(self).transpose()); });
}

Var Tape::tanh(Var a) {
  Matrix y = val(a.id).array().tanh().matrix();
  return push(std::move(y), needs(a), [a](Tape& t, int self) {
    const Matrix& y = t.val(self);
    t.accum(a.id, t.g(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var Tape::gelu(Var a) {
  const Matrix& x = val(a.id);
  Matrix y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))); });
  return push(std::move(y), needs(a), [a](Tape& t, int self) {
    const Matrix dydx = t.val(a.id).unaryExpr([](double v) {
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    });
    t.accum(a.id, t.g(self).cwiseProduct(dydx));
  });
}

Var Tape::relu(Var a) {
  Matrix y = val(a.id).cwiseMax(0.0);
  return push(std::move(y), needs(a), [a](Tape& t, int self) {
    const Matrix mask = (t.val(a.id).array() > 0.0).cast<double>().matrix();
    t.accum(a.id, t.g(self).cwiseProduct(mask));
  });
}

Var Tape::exp(Var a) {
  Matrix y = val(a.id).array().exp().matrix();
  return push(std::move(y), needs(a), [a](Tape& t, int self) { t.accum(a.id, t.g(self).cwiseProduct(t.val(self))); });
}

Var Tape::masked_softmax_rows(Var scores, const Matrix& mask) {
  const Matrix& u = val(scores.id);
  if (mask.rows() != u.rows() || mask.cols() != u.cols()) throw Error("masked_softmax_rows: mask shape mismatch");
  Matrix w = Matrix::Zero(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      if (mask(i, j) == 0.0) m = std::max(m, u(i, j));
    if (m == -std::numeric_limits<double>::infinity()) throw Error("masked_softmax_rows: fully masked row");
    double z = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      if (mask(i, j) == 0.0) {
        w(i, j) = std::exp(u(i, j) - m);
        z += w(i, j);
      }
    w.row(i) /= z;
  }
  return push(std::move(w), needs(scores), [scores](Tape& t, int self) {
    const Matrix& w = t.val(self);
    const Matrix& d = t.g(self);
    const Vector inner = w.cwiseProduct(d).rowwise().sum();
    Matrix du = w.cwiseProduct(d.colwise() - inner);
    t.accum(scores.id, du);
  });
}

Var Tape::softmax_rows(Var scores) {
  return masked_softmax_rows(scores, Matrix::Zero(rows(scores), cols(scores)));
}

Var Tape::log_softmax_col(Var a) {
  if (cols(a) != 1) throw Error("log_softmax_col: expects a column vector");
  const Matrix& z = val(a.id);
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  Matrix y = z.array() - lse;
  return push(std::move(y), needs(a), [a](Tape& t, int self) {
    const Matrix& y = t.val(self);
    const Matrix& d = t.g(self);
    const Matrix p = y.array().exp().matrix();
    t.accum(a.id, d - p * d.sum());
  });
}

Var Tape::layer_norm_cols(Var a, Var gain, Var bias, double eps) {
  const Matrix& x = val(a.id);
  const Eigen::Index r = x.rows();
  if (rows(gain) != r || rows(bias) != r) throw Error("layer_norm_cols: parameter shape mismatch");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  const Eigen::RowVectorXd inv_std =
      ((centered.array().square().colwise().sum() / static_cast<double>(r)) + eps).rsqrt().matrix();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix y = (xhat.array().colwise() * val(gain.id).col(0).array()).matrix();
  y.colwise() += val(bias.id).col(0);
  const bool ng = needs(a) || needs(gain) || needs(bias);
  return push(std::move(y), ng, [a, gain, bias, xhat, inv_std, r](Tape& t, int self) {
    const Matrix& d = t.g(self);
    if (t.needs(gain)) t.accum(gain.id, d.cwiseProduct(xhat).rowwise().sum());
    if (t.needs(bias)) t.accum(bias.id, d.rowwise().sum());
    if (t.needs(a)) {
      const Matrix dxhat = (d.array().colwise() * t.val(gain.id).col(0).array()).matrix();
      const Eigen::RowVectorXd mean_d = dxhat.colwise().mean();
      const Eigen::RowVectorXd mean_dx = dxhat.cwiseProduct(xhat).colwise().mean();
      Matrix dx = dxhat.rowwise() - mean_d;
      dx -= (xhat.array().rowwise() * mean_dx.array()).matrix();
      dx = (dx.array().rowwise() * inv_std.array()).matrix();
      t.accum(a.id, dx);
    }
    (void)r;
  });
}

Var Tape::concat_rows(Var top, Var bottom) {
  if (cols(top) != cols(bottom)) throw Error("concat_rows: column mismatch");
  const int rt = rows(top);
  Matrix out(rt + rows(bottom), cols(top));
  out << val(top.id), val(bottom.id);
  return push(std::move(out), needs(top) || needs(bottom), [top, bottom, rt](Tape& t, int self) {
    const Matrix& d = t.g(self);
    if (t.needs(top)) t.accum(top.id, d.topRows(rt));
    if (t.needs(bottom)) t.accum(bottom.id, d.bottomRows(d.rows() - rt));
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat_cols: no parts");
  const int r = rows(parts.front());
  int total = 0;
  bool ng = false;
  for (Var p : parts) {
    if (rows(p) != r) throw Error("concat_cols: row mismatch");
    total += cols(p);
    ng = ng || needs(p);
  }
  Matrix out(r, total);
  int at = 0;
  for (Var p : parts) {
    out.middleCols(at, cols(p)) = val(p.id);
    at += cols(p);
  }
  return push(std::move(out), ng, [parts](Tape& t, int self) {
    const Matrix& d = t.g(self);
    int at = 0;
    for (Var p : parts) {
      const int c = t.cols(p);
      if (t.needs(p)) t.accum(p.id, d.middleCols(at, c));
      at += c;
    }
  });
}

Var Tape::gather_cols(Var a, const std::vector<int>& idx) {
  const Matrix& x = val(a.id);
  Matrix out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= x.cols()) throw Error("gather_cols: index out of range");
    out.col(static_cast<Eigen::Index>(k)) = x.col(idx[k]);
  }
  return push(std::move(out), needs(a), [a, idx](Tape& t, int self) {
    const Matrix& d = t.g(self);
    Matrix full = Matrix::Zero(t.rows(a), t.cols(a));
    for (std::size_t k = 0; k < idx.size(); ++k) full.col(idx[k]) += d.col(static_cast<Eigen::Index>(k));
    t.accum(a.id, full);
  });
}

Var Tape::repeat_cols(Var a, int times) {
  if (cols(a) != 1) throw Error("repeat_cols: expects a column vector");
  Matrix out = val(a.id).replicate(1, times);
  return push(std::move(out), needs(a), [a](Tape& t, int self) { t.accum(a.id, t.g(self).rowwise().sum()); });
}

Var Tape::element(Var a, int i, int j) {
  Matrix out(1, 1);
  out(0, 0) = val(a.id)(i, j);
  return push(std::move(out), needs(a), [a, i, j](Tape& t, int self) {
    Matrix full = Matrix::Zero(t.rows(a), t.cols(a));
    full(i, j) = t.g(self)(0, 0);
    t.accum(a.id, full);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = val(a.id).sum();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.accum(a.id, Matrix::Constant(t.rows(a), t.cols(a), t.g(self)(0, 0)));
  });
}

void Tape::backward(Var loss) {
  if (rows(loss) != 1 || cols(loss) != 1) throw Error("Tape::backward: loss must be 1x1");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param) {
      n.param->grad += n.grad;
    } else if (n.back) {
      n.back(*this, i);
    }
  }
}

Matrix glorot(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace bwexp::nn
