#include "addps/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "addps/errors.hpp"

namespace addps {
namespace {

constexpr std::size_t kMlpHidden = 32;

void check_even_rows(std::size_t rows) {
  if (rows == 0 || rows % 2 != 0) {
    raise(Errc::ValidationError,
          "codec latent dimension must be a positive even number of reals (got " +
              std::to_string(rows) + ")");
  }
}

Vec latent(const CodecModel& m, const Vec& x) {
  if (x.size() != m.n_source) {
    raise(Errc::DimensionMismatch, "encode: expected source length " +
                                       std::to_string(m.n_source) + ", got " +
                                       std::to_string(x.size()));
  }
  switch (m.kind) {
    case CodecKind::Identity:
      return x;
    case CodecKind::Linear:
      return matvec(m.a, x);
    case CodecKind::Mlp:
      return m.enc.forward(x);
  }
  raise(Errc::ValidationError, "unknown codec kind");
}

}  // namespace

CodecModel CodecModel::identity(std::size_t n, double power) {
  check_even_rows(n);
  CodecModel m;
  m.kind = CodecKind::Identity;
  m.n_source = n;
  m.k_channel = n / 2;
  m.power = power;
  return m;
}

CodecModel CodecModel::linear(Matrix a, double power) {
  check_even_rows(a.rows());
  if (a.rows() > a.cols()) {
    raise(Errc::ValidationError, "linear codec matrix must have rows <= cols for full row rank");
  }
  const Vec sv = singular_values(a);
  if (sv.size() < a.rows() || sv[a.rows() - 1] <= 1e-8) {
    raise(Errc::ValidationError, "linear codec matrix is row-rank deficient");
  }
  CodecModel m;
  m.kind = CodecKind::Linear;
  m.n_source = a.cols();
  m.k_channel = a.rows() / 2;
  m.power = power;
  m.pinv = matmul(a.transposed(), spd_inverse(matmul(a, a.transposed())));
  m.a = std::move(a);
  return m;
}

CodecModel CodecModel::mlp(std::size_t n, std::size_t k, SeededRng& rng, double power) {
  if (n == 0 || k == 0) raise(Errc::ValidationError, "mlp codec needs n > 0 and k > 0");
  CodecModel m;
  m.kind = CodecKind::Mlp;
  m.n_source = n;
  m.k_channel = k;
  m.power = power;
  m.enc = MlpNet::make({n, kMlpHidden, 2 * k}, rng);
  m.dec = MlpNet::make({2 * k, kMlpHidden, n}, rng);
  return m;
}

ChannelSignal encode(const CodecModel& m, const Vec& x) {
  return power_normalize(latent(m, x), m.k_channel, m.power);
}

Vec decode(const CodecModel& m, const ChannelSignal& z_hat) {
  if (z_hat.values.size() != 2 * m.k_channel) {
    raise(Errc::DimensionMismatch, "decode: expected signal length " +
                                       std::to_string(2 * m.k_channel) + ", got " +
                                       std::to_string(z_hat.values.size()));
  }
  switch (m.kind) {
    case CodecKind::Identity:
      return z_hat.values;
    case CodecKind::Linear:
      return matvec(m.pinv, z_hat.values);
    case CodecKind::Mlp:
      return m.dec.forward(z_hat.values);
  }
  raise(Errc::ValidationError, "unknown codec kind");
}

Vec encoder_pullback(const CodecModel& m, const Vec& x, const Vec& cotangent) {
  if (cotangent.size() != 2 * m.k_channel) {
    raise(Errc::DimensionMismatch, "encoder_pullback: cotangent length " +
                                       std::to_string(cotangent.size()) + ", expected " +
                                       std::to_string(2 * m.k_channel));
  }
  const Vec u = latent(m, x);
  // z = g(u) u with g = sqrt(kP)/||u||, so
  // J_norm^T c = g (c - (u.c / ||u||^2) u).
  const double un2 = vec_squared_norm(u);
  if (un2 == 0.0) raise(Errc::ZeroSignal, "encoder_pullback at an all-zero latent");
  const double g = std::sqrt(static_cast<double>(m.k_channel) * m.power / un2);
  const Vec cu = vec_scale(vec_sub(cotangent, vec_scale(u, vec_dot(u, cotangent) / un2)), g);
  switch (m.kind) {
    case CodecKind::Identity:
      return cu;
    case CodecKind::Linear:
      return matvec_transposed(m.a, cu);
    case CodecKind::Mlp:
      return m.enc.pullback(x, cu);
  }
  raise(Errc::ValidationError, "unknown codec kind");
}

NodeId record_encode(const CodecModel& m, Tape& t, NodeId x) {
  NodeId u = -1;
  switch (m.kind) {
    case CodecKind::Identity:
      u = x;
      break;
    case CodecKind::Linear:
      u = t.matvec(m.a, x);
      break;
    case CodecKind::Mlp:
      u = m.enc.record(t, x);
      break;
  }
  const NodeId inv_norm = t.pow_scalar(t.squared_norm(u), -0.5);
  const NodeId gain = t.scale(inv_norm, std::sqrt(static_cast<double>(m.k_channel) * m.power));
  return t.scale_by(gain, u);
}

NodeId record_decode(const CodecModel& m, Tape& t, NodeId z_hat) {
  switch (m.kind) {
    case CodecKind::Identity:
      return z_hat;
    case CodecKind::Linear:
      return t.matvec(m.pinv, z_hat);
    case CodecKind::Mlp:
      return m.dec.record(t, z_hat);
  }
  raise(Errc::ValidationError, "unknown codec kind");
}

CodecModel train_deepjscc(const CodecModel& m, const std::vector<Vec>& dataset,
                          const ChannelConfig& cfg, const TrainConfig& tc,
                          double* first_epoch_loss, double* final_epoch_loss) {
  if (m.kind != CodecKind::Mlp) {
    raise(Errc::ValidationError, "train_deepjscc requires an Mlp codec");
  }
  if (dataset.empty()) raise(Errc::ValidationError, "train_deepjscc: empty dataset");
  for (const Vec& x : dataset) {
    if (x.size() != m.n_source) raise(Errc::DimensionMismatch, "train_deepjscc: sample length mismatch");
  }

  CodecModel out = m;
  SeededRng rng(tc.seed, /*stream=*/0x7261696eULL);
  SeededRng noise_rng = rng.split(1);
  const double noise_sd = std::sqrt(snr_to_noise_variance(cfg) / 2.0);
  const double inv_n = 1.0 / static_cast<double>(m.n_source);

  std::vector<Vec*> params = out.enc.param_arrays();
  {
    std::vector<Vec*> dec_params = out.dec.param_arrays();
    params.insert(params.end(), dec_params.begin(), dec_params.end());
  }
  OptimizerState opt;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  Tape t;
  std::vector<NodeId> param_nodes;
  double first_loss = 0.0, last_loss = 0.0;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    // Fisher-Yates reshuffle per epoch.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t stop = std::min(order.size(), start + tc.batch_size);
      std::vector<Vec> grads(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) grads[p].assign(params[p]->size(), 0.0);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const Vec& x = dataset[order[idx]];
        t.reset();
        param_nodes.clear();
        const NodeId xin = t.constant(x);
        const NodeId u = out.enc.record_trainable(t, xin, param_nodes);
        const NodeId inv_norm = t.pow_scalar(t.squared_norm(u), -0.5);
        const NodeId gain =
            t.scale(inv_norm, std::sqrt(static_cast<double>(out.k_channel) * out.power));
        NodeId z = t.scale_by(gain, u);
        if (noise_sd > 0.0) {
          Vec noise(2 * out.k_channel);
          for (double& v : noise) v = noise_sd * noise_rng.normal();
          z = t.add(z, t.constant(noise));
        }
        const NodeId xr = out.dec.record_trainable(t, z, param_nodes);
        const NodeId loss = t.scale(t.squared_norm(t.sub(xr, xin)), inv_n);
        const double loss_value = t.scalar_value(loss);
        if (!std::isfinite(loss_value)) {
          raise(Errc::NonFiniteLoss, "train_deepjscc diverged at epoch " + std::to_string(epoch));
        }
        epoch_loss += loss_value;
        t.backward(loss);
        for (std::size_t p = 0; p < params.size(); ++p) {
          const Vec& g = t.adjoint(param_nodes[p]);
          for (std::size_t j = 0; j < g.size(); ++j) grads[p][j] += g[j];
        }
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (Vec& g : grads)
        for (double& v : g) v *= inv_batch;
      opt.step(params, grads, tc);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (epoch == 0) first_loss = epoch_loss;
    last_loss = epoch_loss;
  }
  if (first_epoch_loss) *first_epoch_loss = first_loss;
  if (final_epoch_loss) *final_epoch_loss = last_loss;
  return out;
}

std::vector<NamedArray> codec_to_arrays(const CodecModel& m) {
  std::vector<NamedArray> arrays;
  arrays.push_back({"meta",
                    {4},
                    {static_cast<double>(static_cast<int>(m.kind)), static_cast<double>(m.n_source),
                     static_cast<double>(m.k_channel), m.power}});
  auto push_net = [&arrays](const std::string& prefix, const MlpNet& net) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const MlpNet::Layer& layer = net.layers[l];
      arrays.push_back({prefix + ".w" + std::to_string(l),
                        {layer.w.rows(), layer.w.cols()},
                        layer.w.entries()});
      arrays.push_back({prefix + ".b" + std::to_string(l), {layer.b.size()}, layer.b});
    }
  };
  switch (m.kind) {
    case CodecKind::Identity:
      break;
    case CodecKind::Linear:
      arrays.push_back({"A", {m.a.rows(), m.a.cols()}, m.a.entries()});
      break;
    case CodecKind::Mlp:
      push_net("enc", m.enc);
      push_net("dec", m.dec);
      break;
  }
  return arrays;
}

CodecModel codec_from_arrays(const std::vector<NamedArray>& arrays) {
  const NamedArray& meta = find_array(arrays, "meta");
  if (meta.data.size() != 4) raise(Errc::ParseError, "codec meta array must have 4 entries");
  const int kind = static_cast<int>(meta.data[0]);
  const auto n = static_cast<std::size_t>(meta.data[1]);
  const auto k = static_cast<std::size_t>(meta.data[2]);
  const double power = meta.data[3];
  if (power <= 0.0) raise(Errc::ValidationError, "codec checkpoint power must be positive");

  auto load_net = [&arrays](const std::string& prefix, std::size_t in_dim, std::size_t out_dim) {
    MlpNet net;
    for (std::size_t l = 0;; ++l) {
      const std::string wn = prefix + ".w" + std::to_string(l);
      bool present = false;
      for (const NamedArray& a : arrays) present = present || a.name == wn;
      if (!present) break;
      const NamedArray& w = find_array(arrays, wn);
      const NamedArray& b = find_array(arrays, prefix + ".b" + std::to_string(l));
      if (w.shape.size() != 2 || b.shape.size() != 1 || b.data.size() != w.shape[0]) {
        raise(Errc::ParseError, "codec checkpoint layer '" + wn + "' has inconsistent shapes");
      }
      net.layers.push_back({Matrix(w.shape[0], w.shape[1], w.data), b.data});
    }
    if (net.layers.empty() || net.in_dim() != in_dim || net.out_dim() != out_dim) {
      raise(Errc::ParseError, "codec checkpoint net '" + prefix + "' does not match meta dims");
    }
    return net;
  };

  switch (static_cast<CodecKind>(kind)) {
    case CodecKind::Identity: {
      CodecModel m = CodecModel::identity(n, power);
      if (m.k_channel != k) raise(Errc::ParseError, "identity codec meta dims inconsistent");
      return m;
    }
    case CodecKind::Linear: {
      const NamedArray& a = find_array(arrays, "A");
      if (a.shape.size() != 2 || a.shape[0] != 2 * k || a.shape[1] != n) {
        raise(Errc::ParseError, "linear codec matrix shape does not match meta dims");
      }
      return CodecModel::linear(Matrix(a.shape[0], a.shape[1], a.data), power);
    }
    case CodecKind::Mlp: {
      CodecModel m;
      m.kind = CodecKind::Mlp;
      m.n_source = n;
      m.k_channel = k;
      m.power = power;
      m.enc = load_net("enc", n, 2 * k);
      m.dec = load_net("dec", 2 * k, n);
      return m;
    }
    default:
      raise(Errc::ParseError, "unknown codec kind code " + std::to_string(kind));
  }
}

void save_codec(const std::string& path, const CodecModel& m) {
  save_checkpoint(path, codec_to_arrays(m));
}

CodecModel load_codec(const std::string& path) { return codec_from_arrays(load_checkpoint(path)); }

}  // namespace addps
