#include "addps/mlp.hpp"

#include <cmath>

namespace addps {

MlpNet MlpNet::make(const std::vector<std::size_t>& widths, SeededRng& rng) {
  if (widths.size() < 2) raise(Errc::ValidationError, "mlp needs at least two widths");
  MlpNet net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
    // Xavier-style scale keeps tanh pre-activations in range
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (auto& v : w.mutable_entries()) v = scale * rng.normal();
    net.layers.push_back({std::move(w), Vec(fan_out, 0.0)});
  }
  return net;
}

Vec MlpNet::forward(const Vec& x) const {
  Vec h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = vec_add(matvec(layers[l].w, h), layers[l].b);
    if (l + 1 < layers.size())
      for (auto& v : h) v = std::tanh(v);
  }
  return h;
}

Vec MlpNet::pullback(const Vec& x, const Vec& cotangent) const {
  // forward, keeping post-activation values per layer
  std::vector<Vec> acts;
  acts.reserve(layers.size());
  Vec h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = vec_add(matvec(layers[l].w, h), layers[l].b);
    if (l + 1 < layers.size())
      for (auto& v : h) v = std::tanh(v);
    acts.push_back(h);
  }
  Vec g = cotangent;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) {
      const Vec& a = acts[l];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - a[i] * a[i];
    }
    g = matvec_transposed(layers[l].w, g);
  }
  return g;
}

NodeId MlpNet::record(Tape& t, NodeId x) const {
  NodeId h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = t.add(t.matvec(layers[l].w, h), t.constant(layers[l].b));
    if (l + 1 < layers.size()) h = t.tanh(h);
  }
  return h;
}

NodeId MlpNet::record_trainable(Tape& t, NodeId x, std::vector<NodeId>& param_nodes) const {
  NodeId h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const NodeId w = t.input(layers[l].w.entries());
    const NodeId b = t.input(layers[l].b);
    param_nodes.push_back(w);
    param_nodes.push_back(b);
    h = t.add(t.matvec_node(w, layers[l].w.rows(), layers[l].w.cols(), h), b);
    if (l + 1 < layers.size()) h = t.tanh(h);
  }
  return h;
}

std::vector<Vec*> MlpNet::param_arrays() {
  std::vector<Vec*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.w.mutable_entries());
    out.push_back(&layer.b);
  }
  return out;
}

std::vector<const Vec*> MlpNet::param_arrays() const {
  std::vector<const Vec*> out;
  for (const auto& layer : layers) {
    out.push_back(&layer.w.entries());
    out.push_back(&layer.b);
  }
  return out;
}

}  // namespace addps
