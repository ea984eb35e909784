#ifndef SIMSKIP_SIMSKIP_MODEL_HPP_
#define SIMSKIP_SIMSKIP_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "simskip/contrastive_loss.hpp"
#include "simskip/embedding_store.hpp"
#include "simskip/nn_core.hpp"

namespace simskip {

/// Linear -> BatchNorm -> ReLU -> Dropout.
struct EncoderBlock {
  LinearLayer linear;
  BatchNormLayer norm;
  DropoutLayer dropout;
};

/**
 * Weights of the skip-connection encoder and its projector.
 *
 * Encoder:   h = x + out_linear(layer2(layer1(x)))   (skip_enabled)
 *            h =     out_linear(layer2(layer1(x)))   (ablation)
 * with layer1: d -> d/2, layer2: d/2 -> d, out_linear: d -> d.
 * Projector: z = projector2(relu(projector1(h))), both d -> d.
 */
struct SimSkipParams {
  EncoderBlock layer1;
  EncoderBlock layer2;
  LinearLayer out_linear;
  LinearLayer projector1;
  LinearLayer projector2;
  std::size_t dim = 0;
  bool skip_enabled = true;
};

bool operator==(const SimSkipParams& a, const SimSkipParams& b);

/**
 * Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, identity batch norms.
 * With zero_init_residual_out the out_linear weight and bias are zero, making the
 * encoder the exact identity (skip on) or the zero map (skip off).
 * Throws ValidationError for odd or zero d.
 */
SimSkipParams init_params(std::size_t d, std::uint64_t seed, bool skip_enabled = true,
                          bool zero_init_residual_out = true, double dropout_rate = 0.1);

/// Gradients mirroring the trainable tensors of SimSkipParams.
struct SimSkipGrads {
  struct Block {
    LinearGrads linear;
    BatchNormGrads norm;
  };
  Block layer1;
  Block layer2;
  LinearGrads out_linear;
  LinearGrads projector1;
  LinearGrads projector2;
};

SimSkipGrads zero_grads(const SimSkipParams& params);

/// Trainable tensors in checkpoint order: layer1 W,b,gamma,beta; layer2 W,b,gamma,beta;
/// out_linear W,b; projector1 W,b; projector2 W,b.
std::vector<std::span<double>> trainable_tensors(SimSkipParams& params);
std::vector<std::span<const double>> trainable_tensors(const SimSkipParams& params);
std::vector<std::span<const double>> gradient_tensors(const SimSkipGrads& grads);
std::vector<std::span<double>> gradient_tensors(SimSkipGrads& grads);

/// Concatenation of trainable_tensors, and its inverse.
std::vector<double> flatten_trainable(const SimSkipParams& params);
void assign_trainable(SimSkipParams& params, std::span<const double> flat);
std::vector<double> flatten_gradients(const SimSkipGrads& grads);

struct ParameterCounts {
  std::size_t layer1 = 0;
  std::size_t layer2 = 0;
  std::size_t out_linear = 0;
  std::size_t projector1 = 0;
  std::size_t projector2 = 0;
  std::size_t encoder() const { return layer1 + layer2 + out_linear; }
  std::size_t projector() const { return projector1 + projector2; }
};

/// Weight-matrix entries per layer (biases and batch-norm affine terms excluded).
ParameterCounts parameter_counts(const SimSkipParams& params);

struct BlockCache {
  LinearCache linear;
  BatchNormCache norm;
  ReluCache relu;
  DropoutCache dropout;
};

struct EncoderCache {
  BlockCache layer1;
  BlockCache layer2;
  LinearCache out_linear;
  bool skip_enabled = true;
};

struct ProjectorCache {
  LinearCache projector1;
  ReluCache relu;
  LinearCache projector2;
};

/// Dropout multipliers for the two encoder blocks, used to make Train-mode passes reproducible.
struct FixedDropout {
  Matrix layer1;
  Matrix layer2;
};

/// Pure forward pass; Train-mode batch statistics are left in the cache (see commit_running_stats).
std::pair<Matrix, EncoderCache> encoder_forward(const SimSkipParams& params, const Matrix& x, Mode mode, Rng& rng);
std::pair<Matrix, EncoderCache> encoder_forward(const SimSkipParams& params, const Matrix& x, Mode mode,
                                                const FixedDropout& dropout);

/// Folds the batch statistics of a Train-mode forward into the running estimates.
void commit_running_stats(SimSkipParams& params, const EncoderCache& cache);

struct EncoderBackward {
  SimSkipGrads::Block layer1;
  SimSkipGrads::Block layer2;
  LinearGrads out_linear;
  Matrix input_grad;
};

EncoderBackward encoder_backward(const SimSkipParams& params, const EncoderCache& cache, const Matrix& upstream);

std::pair<Matrix, ProjectorCache> projector_forward(const SimSkipParams& params, const Matrix& h, Mode mode = Mode::Eval);

struct ProjectorBackward {
  LinearGrads projector1;
  LinearGrads projector2;
  Matrix input_grad;
};

ProjectorBackward projector_backward(const SimSkipParams& params, const ProjectorCache& cache,
                                     const Matrix& upstream);

/// Result of one encoder -> projector -> NT-Xent pass with full backward.
struct ContrastiveStep {
  double loss = 0.0;
  SimSkipGrads grads;
  EncoderCache encoder_cache;
};

/// `views` holds 2N rows arranged as positive pairs (2i, 2i+1).
ContrastiveStep contrastive_step(const SimSkipParams& params, const Matrix& views, double tau, Mode mode, Rng& rng,
                                 NtXentDenominator denominator = NtXentDenominator::AllButSelf);
ContrastiveStep contrastive_step(const SimSkipParams& params, const Matrix& views, double tau, Mode mode,
                                 const FixedDropout& dropout,
                                 NtXentDenominator denominator = NtXentDenominator::AllButSelf);

/// Eval-mode encoder output for every row; labels carried over. ShapeError on dim mismatch.
EmbeddingDataset refine(const SimSkipParams& params, const EmbeddingDataset& dataset);

inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'K', 'P'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

void save_checkpoint(const SimSkipParams& params, const std::filesystem::path& path);
SimSkipParams load_checkpoint(const std::filesystem::path& path);

}  // namespace simskip

#endif  // SIMSKIP_SIMSKIP_MODEL_HPP_
