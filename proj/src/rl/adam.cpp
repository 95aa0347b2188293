#include "marlsig/rl/adam.hpp"

#include <cmath>

#include "marlsig/contract.hpp"

namespace marlsig::rl {

AdamState::AdamState(const Mlp& mlp, AdamParams params)
    : params_(params), m_(mlp.zero_gradients()), v_(mlp.zero_gradients()) {}

void AdamState::step(Mlp& mlp, const MlpGradients& grads) {
  MARLSIG_EXPECTS(grads.weights.size() == mlp.layers().size());
  MARLSIG_EXPECTS(m_.weights.size() == mlp.layers().size());
  ++steps_;
  const double b1 = params_.beta1;
  const double b2 = params_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = params_.learning_rate;
  const double eps = params_.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    auto& layer = mlp.layers()[l];
    update(layer.weights, m_.weights[l], v_.weights[l], grads.weights[l]);
    update(layer.bias, m_.bias[l], v_.bias[l], grads.bias[l]);
  }
}

}  // namespace marlsig::rl
