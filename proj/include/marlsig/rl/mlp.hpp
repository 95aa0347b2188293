#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace marlsig::rl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kNumActions = 4;
using ActionMask = std::array<bool, kNumActions>;

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;

  void add(const MlpGradients& other);
  double max_abs() const;
};

// Activations kept by forward_batch for the backward pass. Column j is sample j.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

// Fully connected network: ReLU on hidden layers, identity on the output layer.
class Mlp {
 public:
  Mlp() = default;
  // All parameters zero.
  explicit Mlp(std::vector<int> widths);
  // He-normal weights, zero biases.
  static Mlp he_initialized(std::vector<int> widths, std::mt19937_64& rng);

  const std::vector<int>& widths() const { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Vector forward(const Vector& input) const;
  // inputs: input_width x batch. Returns output_width x batch.
  Matrix forward_batch(const Matrix& inputs, ForwardCache* cache = nullptr) const;
  // Reverse-mode gradients of sum(grad_out .* output) with respect to every parameter.
  MlpGradients backward(const ForwardCache& cache, const Matrix& grad_out) const;

  MlpGradients zero_gradients() const;
  std::size_t parameter_count() const;
  // Flat view over parameters, layer by layer: weights column-major, then bias.
  double& parameter(std::size_t k);
  double parameter(std::size_t k) const;
  bool all_finite() const;

 private:
  std::vector<int> widths_;
  std::vector<DenseLayer> layers_;
};

MlpGradients backward(const Mlp& mlp, const Vector& input, const Vector& grad_out);

// Same flat indexing as Mlp::parameter.
double gradient_entry(const MlpGradients& g, std::size_t k);

}  // namespace marlsig::rl
