#include "simskip/simskip_model.hpp"

#include <cstring>
#include <functional>
#include <string>

#include "byte_io.hpp"

namespace simskip {

namespace {

bool same(const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; }
bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

bool same(const LinearLayer& a, const LinearLayer& b) { return same(a.weight, b.weight) && same(a.bias, b.bias); }

bool same(const EncoderBlock& a, const EncoderBlock& b) {
  return same(a.linear, b.linear) && same(a.norm.gamma, b.norm.gamma) && same(a.norm.beta, b.norm.beta) &&
         same(a.norm.running_mean, b.norm.running_mean) && same(a.norm.running_var, b.norm.running_var) &&
         a.norm.eps == b.norm.eps && a.norm.momentum == b.norm.momentum && a.dropout.rate == b.dropout.rate;
}

EncoderBlock make_block(std::size_t in, std::size_t out, Rng& rng, double dropout_rate) {
  return EncoderBlock{LinearLayer::uniform(in, out, rng), BatchNormLayer::identity(out), DropoutLayer{dropout_rate}};
}

std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

using DropoutFn = std::function<std::pair<Matrix, DropoutCache>(const DropoutLayer&, const Matrix&, int)>;

std::pair<Matrix, BlockCache> block_forward(const EncoderBlock& block, const Matrix& x, Mode mode,
                                            const DropoutFn& dropout, int which) {
  BlockCache cache;
  auto [a, lc] = linear_apply(block.linear, x, mode);
  auto [b, nc] = batchnorm_forward(block.norm, a, mode);
  auto [c, rc] = relu_apply(b);
  auto [y, dc] = dropout(block.dropout, c, which);
  cache.linear = std::move(lc);
  cache.norm = std::move(nc);
  cache.relu = std::move(rc);
  cache.dropout = std::move(dc);
  return {std::move(y), std::move(cache)};
}

std::pair<SimSkipGrads::Block, Matrix> block_backward(const EncoderBlock& block, const BlockCache& cache,
                                                      const Matrix& upstream) {
  const Matrix g_relu = dropout_backward(cache.dropout, upstream);
  const Matrix g_norm = relu_backward(cache.relu, g_relu);
  BatchNormBackward nb = batchnorm_backward(block.norm, cache.norm, g_norm);
  LinearBackward lb = linear_backward(block.linear, cache.linear, nb.input_grad);
  return {SimSkipGrads::Block{std::move(lb.grads), std::move(nb.grads)}, std::move(lb.input_grad)};
}

std::pair<Matrix, EncoderCache> encoder_forward_impl(const SimSkipParams& params, const Matrix& x, Mode mode,
                                                     const DropoutFn& dropout) {
  if (x.cols() != static_cast<Eigen::Index>(params.dim)) {
    throw ShapeError("encoder expects width " + std::to_string(params.dim) + ", got " + std::to_string(x.cols()));
  }
  EncoderCache cache;
  cache.skip_enabled = params.skip_enabled;
  auto [h1, c1] = block_forward(params.layer1, x, mode, dropout, 0);
  auto [h2, c2] = block_forward(params.layer2, h1, mode, dropout, 1);
  auto [r, co] = linear_apply(params.out_linear, h2, mode);
  cache.layer1 = std::move(c1);
  cache.layer2 = std::move(c2);
  cache.out_linear = std::move(co);
  if (params.skip_enabled) {
    r += x;
  }
  return {std::move(r), std::move(cache)};
}

}  // namespace

bool operator==(const SimSkipParams& a, const SimSkipParams& b) {
  return a.dim == b.dim && a.skip_enabled == b.skip_enabled && same(a.layer1, b.layer1) && same(a.layer2, b.layer2) &&
         same(a.out_linear, b.out_linear) && same(a.projector1, b.projector1) && same(a.projector2, b.projector2);
}

SimSkipParams init_params(std::size_t d, std::uint64_t seed, bool skip_enabled, bool zero_init_residual_out,
                          double dropout_rate) {
  if (d == 0 || d % 2 != 0) {
    throw ValidationError("embedding dimension must be even and positive, got " + std::to_string(d));
  }
  Rng rng(seed);
  SimSkipParams p;
  p.dim = d;
  p.skip_enabled = skip_enabled;
  p.layer1 = make_block(d, d / 2, rng, dropout_rate);
  p.layer2 = make_block(d / 2, d, rng, dropout_rate);
  p.out_linear = LinearLayer::uniform(d, d, rng);
  p.projector1 = LinearLayer::uniform(d, d, rng);
  p.projector2 = LinearLayer::uniform(d, d, rng);
  if (zero_init_residual_out) {
    p.out_linear = LinearLayer::zeros(d, d);
  }
  return p;
}

SimSkipGrads zero_grads(const SimSkipParams& params) {
  auto lin = [](const LinearLayer& l) {
    return LinearGrads{Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())};
  };
  auto blk = [&](const EncoderBlock& b) {
    return SimSkipGrads::Block{lin(b.linear),
                               BatchNormGrads{Vector::Zero(b.norm.gamma.size()), Vector::Zero(b.norm.beta.size())}};
  };
  return SimSkipGrads{blk(params.layer1), blk(params.layer2), lin(params.out_linear), lin(params.projector1),
                      lin(params.projector2)};
}

std::vector<std::span<double>> trainable_tensors(SimSkipParams& p) {
  return {view(p.layer1.linear.weight), view(p.layer1.linear.bias), view(p.layer1.norm.gamma),
          view(p.layer1.norm.beta),     view(p.layer2.linear.weight), view(p.layer2.linear.bias),
          view(p.layer2.norm.gamma),    view(p.layer2.norm.beta),     view(p.out_linear.weight),
          view(p.out_linear.bias),      view(p.projector1.weight),    view(p.projector1.bias),
          view(p.projector2.weight),    view(p.projector2.bias)};
}

std::vector<std::span<const double>> trainable_tensors(const SimSkipParams& params) {
  auto mutable_views = trainable_tensors(const_cast<SimSkipParams&>(params));
  return {mutable_views.begin(), mutable_views.end()};
}

std::vector<std::span<double>> gradient_tensors(SimSkipGrads& g) {
  return {view(g.layer1.linear.weight), view(g.layer1.linear.bias), view(g.layer1.norm.gamma),
          view(g.layer1.norm.beta),     view(g.layer2.linear.weight), view(g.layer2.linear.bias),
          view(g.layer2.norm.gamma),    view(g.layer2.norm.beta),     view(g.out_linear.weight),
          view(g.out_linear.bias),      view(g.projector1.weight),    view(g.projector1.bias),
          view(g.projector2.weight),    view(g.projector2.bias)};
}

std::vector<std::span<const double>> gradient_tensors(const SimSkipGrads& grads) {
  auto mutable_views = gradient_tensors(const_cast<SimSkipGrads&>(grads));
  return {mutable_views.begin(), mutable_views.end()};
}

namespace {

std::vector<double> concat(const std::vector<std::span<const double>>& parts) {
  std::vector<double> flat;
  for (const auto& t : parts) flat.insert(flat.end(), t.begin(), t.end());
  return flat;
}

}  // namespace

std::vector<double> flatten_trainable(const SimSkipParams& params) { return concat(trainable_tensors(params)); }

std::vector<double> flatten_gradients(const SimSkipGrads& grads) { return concat(gradient_tensors(grads)); }

void assign_trainable(SimSkipParams& params, std::span<const double> flat) {
  std::size_t offset = 0;
  for (auto t : trainable_tensors(params)) {
    if (offset + t.size() > flat.size()) {
      throw ShapeError("assign_trainable: flat vector too short");
    }
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + t.size()), t.begin());
    offset += t.size();
  }
  if (offset != flat.size()) {
    throw ShapeError("assign_trainable: flat vector too long");
  }
}

ParameterCounts parameter_counts(const SimSkipParams& p) {
  return ParameterCounts{p.layer1.linear.weight_count(), p.layer2.linear.weight_count(), p.out_linear.weight_count(),
                         p.projector1.weight_count(), p.projector2.weight_count()};
}

std::pair<Matrix, EncoderCache> encoder_forward(const SimSkipParams& params, const Matrix& x, Mode mode, Rng& rng) {
  return encoder_forward_impl(params, x, mode, [&rng, mode](const DropoutLayer& layer, const Matrix& in, int) {
    return dropout_apply(layer, in, mode, rng);
  });
}

std::pair<Matrix, EncoderCache> encoder_forward(const SimSkipParams& params, const Matrix& x, Mode mode,
                                                const FixedDropout& fixed) {
  return encoder_forward_impl(params, x, mode, [&fixed, mode](const DropoutLayer&, const Matrix& in, int which) {
    const Matrix& scale = which == 0 ? fixed.layer1 : fixed.layer2;
    if (mode == Mode::Eval || scale.size() == 0) {
      return std::pair<Matrix, DropoutCache>{in, DropoutCache{}};
    }
    return dropout_with_scale(in, scale);
  });
}

void commit_running_stats(SimSkipParams& params, const EncoderCache& cache) {
  update_running_stats(params.layer1.norm, cache.layer1.norm);
  update_running_stats(params.layer2.norm, cache.layer2.norm);
}

EncoderBackward encoder_backward(const SimSkipParams& params, const EncoderCache& cache, const Matrix& upstream) {
  EncoderBackward out;
  LinearBackward ob = linear_backward(params.out_linear, cache.out_linear, upstream);
  out.out_linear = std::move(ob.grads);
  auto [g2, d2] = block_backward(params.layer2, cache.layer2, ob.input_grad);
  auto [g1, d1] = block_backward(params.layer1, cache.layer1, d2);
  out.layer2 = std::move(g2);
  out.layer1 = std::move(g1);
  out.input_grad = std::move(d1);
  if (cache.skip_enabled) {
    out.input_grad += upstream;
  }
  return out;
}

std::pair<Matrix, ProjectorCache> projector_forward(const SimSkipParams& params, const Matrix& h, Mode mode) {
  if (h.cols() != static_cast<Eigen::Index>(params.dim)) {
    throw ShapeError("projector expects width " + std::to_string(params.dim) + ", got " + std::to_string(h.cols()));
  }
  ProjectorCache cache;
  auto [a, c1] = linear_apply(params.projector1, h, mode);
  auto [b, rc] = relu_apply(a);
  auto [z, c2] = linear_apply(params.projector2, b, mode);
  cache.projector1 = std::move(c1);
  cache.relu = std::move(rc);
  cache.projector2 = std::move(c2);
  return {std::move(z), std::move(cache)};
}

ProjectorBackward projector_backward(const SimSkipParams& params, const ProjectorCache& cache,
                                     const Matrix& upstream) {
  ProjectorBackward out;
  LinearBackward b2 = linear_backward(params.projector2, cache.projector2, upstream);
  const Matrix g_relu = relu_backward(cache.relu, b2.input_grad);
  LinearBackward b1 = linear_backward(params.projector1, cache.projector1, g_relu);
  out.projector2 = std::move(b2.grads);
  out.projector1 = std::move(b1.grads);
  out.input_grad = std::move(b1.input_grad);
  return out;
}

namespace {

ContrastiveStep finish_step(const SimSkipParams& params, std::pair<Matrix, EncoderCache> encoded, double tau,
                            Mode mode, NtXentDenominator denominator) {
  auto [z, pc] = projector_forward(params, encoded.first, mode);
  LossValue loss = nt_xent(z, tau, denominator);
  ProjectorBackward pb = projector_backward(params, pc, loss.grad);
  EncoderBackward eb = encoder_backward(params, encoded.second, pb.input_grad);
  ContrastiveStep step;
  step.loss = loss.value;
  step.grads = SimSkipGrads{std::move(eb.layer1), std::move(eb.layer2), std::move(eb.out_linear),
                            std::move(pb.projector1), std::move(pb.projector2)};
  step.encoder_cache = std::move(encoded.second);
  return step;
}

}  // namespace

ContrastiveStep contrastive_step(const SimSkipParams& params, const Matrix& views, double tau, Mode mode, Rng& rng,
                                 NtXentDenominator denominator) {
  return finish_step(params, encoder_forward(params, views, mode, rng), tau, mode, denominator);
}

ContrastiveStep contrastive_step(const SimSkipParams& params, const Matrix& views, double tau, Mode mode,
                                 const FixedDropout& dropout, NtXentDenominator denominator) {
  return finish_step(params, encoder_forward(params, views, mode, dropout), tau, mode, denominator);
}

EmbeddingDataset refine(const SimSkipParams& params, const EmbeddingDataset& dataset) {
  if (dataset.dim() != params.dim) {
    throw ShapeError("model dimension " + std::to_string(params.dim) + " does not match dataset dimension " +
                     std::to_string(dataset.dim()));
  }
  if (dataset.count() == 0) {
    return dataset;
  }
  Rng unused(0);
  auto [h, cache] = encoder_forward(params, dataset.vectors(), Mode::Eval, unused);
  if (!h.allFinite()) {
    throw NumericsError("refine produced non-finite values");
  }
  return EmbeddingDataset(std::move(h), dataset.labels());
}

// SSKP layout: "SSKP", u8 version, u8 flags (bit0 = skip_enabled), u32 d, then f64 tensors:
// layer1 W,b,gamma,beta,mean,var; layer2 likewise; out_linear W,b; projector1 W,b; projector2 W,b.
namespace {

std::vector<Eigen::Index> tensor_sizes(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  const auto h = n / 2;
  return {h * n, h, h, h, h, h, n * h, n, n, n, n, n, n * n, n, n * n, n, n * n, n};
}

std::vector<std::span<double>> checkpoint_tensors(SimSkipParams& p) {
  return {view(p.layer1.linear.weight), view(p.layer1.linear.bias), view(p.layer1.norm.gamma),
          view(p.layer1.norm.beta),     view(p.layer1.norm.running_mean), view(p.layer1.norm.running_var),
          view(p.layer2.linear.weight), view(p.layer2.linear.bias), view(p.layer2.norm.gamma),
          view(p.layer2.norm.beta),     view(p.layer2.norm.running_mean), view(p.layer2.norm.running_var),
          view(p.out_linear.weight),    view(p.out_linear.bias),      view(p.projector1.weight),
          view(p.projector1.bias),      view(p.projector2.weight),    view(p.projector2.bias)};
}

}  // namespace

void save_checkpoint(const SimSkipParams& params, const std::filesystem::path& path) {
  std::vector<unsigned char> out;
  out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  out.push_back(kCheckpointVersion);
  out.push_back(params.skip_enabled ? 1 : 0);
  detail::put_le(out, static_cast<std::uint32_t>(params.dim));
  const auto sizes = tensor_sizes(params.dim);
  const auto tensors = checkpoint_tensors(const_cast<SimSkipParams&>(params));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (static_cast<Eigen::Index>(tensors[i].size()) != sizes[i]) {
      throw ShapeError("save_checkpoint: tensor " + std::to_string(i) + " has unexpected size");
    }
    for (double v : tensors[i]) detail::put_f64(out, v);
  }
  detail::write_file(path.string(), out);
}

SimSkipParams load_checkpoint(const std::filesystem::path& path) {
  const std::string name = path.string();
  const auto bytes = detail::read_file(name);
  detail::ByteReader reader(bytes, name);
  if (reader.remaining() < 10) {
    throw FormatError(name + ": file shorter than SSKP header");
  }
  for (char expected : kCheckpointMagic) {
    if (static_cast<char>(reader.get_le<std::uint8_t>()) != expected) {
      throw FormatError(name + ": bad magic, not an SSKP checkpoint");
    }
  }
  const auto version = reader.get_le<std::uint8_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(name + ": unsupported SSKP version " + std::to_string(version));
  }
  const auto flags = reader.get_le<std::uint8_t>();
  const auto d = reader.get_le<std::uint32_t>();
  if (d == 0 || d % 2 != 0) {
    throw FormatError(name + ": invalid model dimension " + std::to_string(d));
  }
  SimSkipParams p = init_params(d, 0, (flags & 1u) != 0, true);
  std::size_t expected = 0;
  for (auto s : tensor_sizes(d)) expected += static_cast<std::size_t>(s) * 8;
  if (reader.remaining() != expected) {
    throw FormatError(name + ": payload is " + std::to_string(reader.remaining()) + " bytes, expected " +
                      std::to_string(expected));
  }
  for (auto t : checkpoint_tensors(p)) {
    for (double& v : t) v = reader.get_f64();
  }
  return p;
}

}  // namespace simskip
