#include "bwexp/nn/optim.hpp"

#include <cmath>

namespace bwexp::nn {

Adam::Adam(ParameterStore& params, AdamConfig config) : params_(&params), config_(config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
    v_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
  }
}

double Adam::step() {
  double sq = 0.0;
  for (std::size_t i = 0; i < params_->size(); ++i) sq += (*params_)[i].grad.squaredNorm();
  const double norm = std::sqrt(sq);
  double clip = 1.0;
  if (config_.grad_clip_norm > 0.0 && norm > config_.grad_clip_norm) clip = config_.grad_clip_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_->size(); ++i) {
    Parameter& p = (*params_)[i];
    const Matrix g = clip * p.grad;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.value.array() -= config_.learning_rate * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.eps);
  }
  return norm;
}

}  // namespace bwexp::nn
