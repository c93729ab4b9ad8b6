#pragma once

#include <vector>

#include "addps/autodiff.hpp"
#include "addps/channel.hpp"
#include "addps/checkpoint.hpp"
#include "addps/mlp.hpp"
#include "addps/numerics.hpp"
#include "addps/rng.hpp"
#include "addps/train.hpp"

namespace addps {

enum class CodecKind { Identity, Linear, Mlp };

/// Encoder/decoder pair mapping an N-dim source vector to k channel symbols
/// (2k reals) and back. Power normalization is part of the encoder and is
/// differentiated exactly.
struct CodecModel {
  CodecKind kind = CodecKind::Identity;
  std::size_t n_source = 0;
  std::size_t k_channel = 0;
  double power = 1.0;

  Matrix a{0, 0};     // Linear: 2k x N, full row rank
  Matrix pinv{0, 0};  // Linear: N x 2k pseudo-inverse decoder A^T (A A^T)^-1
  MlpNet enc;         // Mlp: widths [N, 32, 2k]
  MlpNet dec;         // Mlp: widths [2k, 32, N]

  static CodecModel identity(std::size_t n, double power = 1.0);
  static CodecModel linear(Matrix a, double power = 1.0);
  static CodecModel mlp(std::size_t n, std::size_t k, SeededRng& rng, double power = 1.0);
};

ChannelSignal encode(const CodecModel& m, const Vec& x);
Vec decode(const CodecModel& m, const ChannelSignal& z_hat);

/// J^T . cotangent for J the Jacobian of encode at x, normalization included.
Vec encoder_pullback(const CodecModel& m, const Vec& x, const Vec& cotangent);

/// Tape versions used by guidance gradients; weights are constants.
NodeId record_encode(const CodecModel& m, Tape& t, NodeId x);
NodeId record_decode(const CodecModel& m, Tape& t, NodeId z_hat);

/// End-to-end MSE training of an Mlp codec with the noisy channel in the loop
/// (noise re-sampled every presentation). Returns the trained model and, via
/// out-params if non-null, the first/final epoch mean per-dimension MSE.
CodecModel train_deepjscc(const CodecModel& m, const std::vector<Vec>& dataset,
                          const ChannelConfig& cfg, const TrainConfig& tc,
                          double* first_epoch_loss = nullptr, double* final_epoch_loss = nullptr);

std::vector<NamedArray> codec_to_arrays(const CodecModel& m);
CodecModel codec_from_arrays(const std::vector<NamedArray>& arrays);

void save_codec(const std::string& path, const CodecModel& m);
CodecModel load_codec(const std::string& path);

}  // namespace addps
