#include "marlsig/rl/mlp.hpp"

#include <cmath>

#include "marlsig/contract.hpp"

namespace marlsig::rl {

void MlpGradients::add(const MlpGradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    bias[l] += other.bias[l];
  }
}

double MlpGradients::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].size() > 0) m = std::max(m, weights[l].cwiseAbs().maxCoeff());
    if (bias[l].size() > 0) m = std::max(m, bias[l].cwiseAbs().maxCoeff());
  }
  return m;
}

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  MARLSIG_EXPECTS(widths_.size() >= 2);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    MARLSIG_EXPECTS(widths_[l] > 0 && widths_[l + 1] > 0);
    layers_.push_back({Matrix::Zero(widths_[l + 1], widths_[l]), Vector::Zero(widths_[l + 1])});
  }
}

Mlp Mlp::he_initialized(std::vector<int> widths, std::mt19937_64& rng) {
  Mlp mlp(std::move(widths));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& layer : mlp.layers_) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.weights.cols()));
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = scale * normal(rng);
  }
  return mlp;
}

Vector Mlp::forward(const Vector& input) const {
  MARLSIG_EXPECTS(input.size() == input_width());
  Vector a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector z = layers_[l].weights * a + layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Matrix Mlp::forward_batch(const Matrix& inputs, ForwardCache* cache) const {
  MARLSIG_EXPECTS(inputs.rows() == input_width());
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

MlpGradients Mlp::backward(const ForwardCache& cache, const Matrix& grad_out) const {
  MARLSIG_EXPECTS(cache.inputs.size() == layers_.size());
  MARLSIG_EXPECTS(grad_out.rows() == output_width());
  MlpGradients g;
  g.weights.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix delta = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    g.weights[l].noalias() = delta * cache.inputs[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l > 0) delta = layers_[l].weights.transpose() * delta;
  }
  return g;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (const auto& layer : layers_) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

double& Mlp::parameter(std::size_t k) {
  for (auto& layer : layers_) {
    const auto nw = static_cast<std::size_t>(layer.weights.size());
    if (k < nw) return layer.weights.data()[k];
    k -= nw;
    const auto nb = static_cast<std::size_t>(layer.bias.size());
    if (k < nb) return layer.bias.data()[k];
    k -= nb;
  }
  MARLSIG_EXPECTS(false);
  return layers_.front().bias.data()[0];
}

double Mlp::parameter(std::size_t k) const { return const_cast<Mlp*>(this)->parameter(k); }

bool Mlp::all_finite() const {
  for (const auto& layer : layers_)
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

MlpGradients backward(const Mlp& mlp, const Vector& input, const Vector& grad_out) {
  ForwardCache cache;
  mlp.forward_batch(input, &cache);
  return mlp.backward(cache, grad_out);
}

double gradient_entry(const MlpGradients& g, std::size_t k) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(g.weights[l].size());
    if (k < nw) return g.weights[l].data()[k];
    k -= nw;
    const auto nb = static_cast<std::size_t>(g.bias[l].size());
    if (k < nb) return g.bias[l].data()[k];
    k -= nb;
  }
  MARLSIG_EXPECTS(false);
  return 0.0;
}

}  // namespace marlsig::rl
