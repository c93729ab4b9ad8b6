#pragma once

#include <cstdint>
#include <vector>

#include "addps/numerics.hpp"

namespace addps {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  enum class Optimizer { Sgd, Adam } optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

/// First/second-moment state for Adam over a list of parameter arrays.
class OptimizerState {
 public:
  void step(std::vector<Vec*>& params, const std::vector<Vec>& grads, const TrainConfig& tc);

 private:
  std::vector<Vec> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace addps
