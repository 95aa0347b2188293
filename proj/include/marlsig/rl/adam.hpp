#pragma once

#include <cstdint>

#include "marlsig/rl/mlp.hpp"

namespace marlsig::rl {

struct AdamParams {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(const Mlp& mlp, AdamParams params);

  const AdamParams& params() const { return params_; }
  std::int64_t steps() const { return steps_; }

  // One descent step on mlp with bias-corrected moments.
  void step(Mlp& mlp, const MlpGradients& grads);

 private:
  AdamParams params_;
  MlpGradients m_;
  MlpGradients v_;
  std::int64_t steps_ = 0;
};

}  // namespace marlsig::rl
