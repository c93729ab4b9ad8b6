#pragma once

#include <vector>

#include "addps/autodiff.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"

namespace addps {

/// Fully connected net with tanh hidden activations and a linear output
/// layer. Small enough that forward passes and pullbacks run as plain loops.
struct MlpNet {
  struct Layer {
    Matrix w;
    Vec b;
  };
  std::vector<Layer> layers;

  static MlpNet make(const std::vector<std::size_t>& widths, SeededRng& rng);

  std::size_t in_dim() const { return layers.front().w.cols(); }
  std::size_t out_dim() const { return layers.back().w.rows(); }

  Vec forward(const Vec& x) const;

  /// J^T cotangent at x.
  Vec pullback(const Vec& x, const Vec& cotangent) const;

  /// Records the forward pass on a tape with the weights held constant.
  NodeId record(Tape& t, NodeId x) const;

  /// Records with weights as differentiable nodes (training). Appends the
  /// created weight/bias node ids in layer order: w0, b0, w1, b1, ...
  NodeId record_trainable(Tape& t, NodeId x, std::vector<NodeId>& param_nodes) const;

  std::vector<Vec*> param_arrays();
  std::vector<const Vec*> param_arrays() const;
};

}  // namespace addps
