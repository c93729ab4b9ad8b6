#include "addps/train.hpp"

#include <cmath>

namespace addps {

void OptimizerState::step(std::vector<Vec*>& params, const std::vector<Vec>& grads,
                          const TrainConfig& tc) {
  if (params.size() != grads.size())
    raise(Errc::DimensionMismatch, "optimizer: params vs grads count");
  if (tc.optimizer == TrainConfig::Optimizer::Sgd) {
    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t i = 0; i < params[p]->size(); ++i)
        (*params[p])[i] -= tc.learning_rate * grads[p][i];
    return;
  }

  if (m_.empty()) {
    for (const Vec& g : grads) {
      m_.emplace_back(g.size(), 0.0);
      v_.emplace_back(g.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Vec& m = m_[p];
    Vec& v = v_[p];
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      const double g = grads[p][i];
      m[i] = tc.adam_beta1 * m[i] + (1.0 - tc.adam_beta1) * g;
      v[i] = tc.adam_beta2 * v[i] + (1.0 - tc.adam_beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      (*params[p])[i] -= tc.learning_rate * mhat / (std::sqrt(vhat) + tc.adam_eps);
    }
  }
}

}  // namespace addps
