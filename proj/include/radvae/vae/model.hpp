#pragma once

// 1D convolutional VAE over (2, m) real/imag snapshot encodings.
//
//   encoder: conv(2->c1,3) bn relu pool2 | conv(c1->c2,3) bn relu pool2 |
//            flatten(c2*m/4) -> fc_mu, fc_logvar (q each)
//   decoder: fc(q -> c2*m/4) reshape | up2 conv(c2->c1,3) bn relu |
//            up2 conv(c1->2,3) linear
//
// Convolutions feeding a batch-norm carry no bias (beta plays that role).

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radvae/linalg.hpp"
#include "radvae/rng.hpp"
#include "radvae/vae/layers.hpp"

namespace radvae {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0)
      : shape(std::move(dims)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<std::size_t>& dims) noexcept {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  std::size_t size() const noexcept { return data.size(); }
  double& operator[](std::size_t i) noexcept { return data[i]; }
  double operator[](std::size_t i) const noexcept { return data[i]; }
  std::span<double> span() noexcept { return data; }
  std::span<const double> span() const noexcept { return data; }

  bool all_finite() const noexcept {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

enum class Mode { train, eval };

struct VaeArch {
  std::size_t m = 16;       // snapshot length
  std::size_t latent = 12;  // q
  std::size_t c1 = 16;
  std::size_t c2 = 32;
  static constexpr std::size_t kInChannels = 2;
  static constexpr std::size_t kKernel = 3;

  std::size_t flat() const noexcept { return c2 * (m / 4); }

  void validate() const {
    if (m < 4 || m % 4 != 0)
      throw std::invalid_argument("vae: m must be a positive multiple of 4");
    if (latent == 0 || c1 == 0 || c2 == 0)
      throw std::invalid_argument("vae: layer sizes must be positive");
  }

  friend bool operator==(const VaeArch&, const VaeArch&) = default;
};

struct BatchNormParams {
  Tensor gamma, beta, running_mean, running_var;

  explicit BatchNormParams(std::size_t c = 0)
      : gamma({c}, 1.0), beta({c}, 0.0), running_mean({c}, 0.0),
        running_var({c}, 1.0) {}

  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct VaeParams {
  VaeArch arch;
  Tensor enc_conv1_w;
  BatchNormParams enc_bn1;
  Tensor enc_conv2_w;
  BatchNormParams enc_bn2;
  Tensor fc_mu_w, fc_mu_b;
  Tensor fc_logvar_w, fc_logvar_b;
  Tensor dec_fc_w, dec_fc_b;
  Tensor dec_conv1_w;
  BatchNormParams dec_bn1;
  Tensor dec_out_w, dec_out_b;

  VaeParams() : VaeParams(VaeArch{}) {}

  /// Zero-filled tensors, BN gains 1, running variances 1.
  explicit VaeParams(const VaeArch& a)
      : arch((a.validate(), a)),
        enc_conv1_w({a.c1, VaeArch::kInChannels, VaeArch::kKernel}),
        enc_bn1(a.c1),
        enc_conv2_w({a.c2, a.c1, VaeArch::kKernel}),
        enc_bn2(a.c2),
        fc_mu_w({a.latent, a.flat()}),
        fc_mu_b({a.latent}),
        fc_logvar_w({a.latent, a.flat()}),
        fc_logvar_b({a.latent}),
        dec_fc_w({a.flat(), a.latent}),
        dec_fc_b({a.flat()}),
        dec_conv1_w({a.c1, a.c2, VaeArch::kKernel}),
        dec_bn1(a.c1),
        dec_out_w({VaeArch::kInChannels, a.c1, VaeArch::kKernel}),
        dec_out_b({VaeArch::kInChannels}) {}

  /// Visits every tensor in a fixed order as (name, tensor, trainable).
  template <class F>
  void for_each(F&& f) {
    visit(*this, std::forward<F>(f));
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, std::forward<F>(f));
  }

  template <class F>
  void for_each_trainable(F&& f) {
    for_each([&](const std::string& n, Tensor& t, bool tr) {
      if (tr) f(n, t);
    });
  }
  template <class F>
  void for_each_trainable(F&& f) const {
    for_each([&](const std::string& n, const Tensor& t, bool tr) {
      if (tr) f(n, t);
    });
  }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for_each_trainable([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Tensor& t, bool) { ok = ok && t.all_finite(); });
    return ok;
  }

  friend bool operator==(const VaeParams&, const VaeParams&) = default;

 private:
  template <class Self, class F>
  static void visit(Self& s, F&& f) {
    auto bn = [&](const std::string& prefix, auto& b) {
      f(prefix + ".weight", b.gamma, true);
      f(prefix + ".bias", b.beta, true);
      f(prefix + ".running_mean", b.running_mean, false);
      f(prefix + ".running_var", b.running_var, false);
    };
    f("encoder.conv1.weight", s.enc_conv1_w, true);
    bn("encoder.bn1", s.enc_bn1);
    f("encoder.conv2.weight", s.enc_conv2_w, true);
    bn("encoder.bn2", s.enc_bn2);
    f("encoder.fc_mu.weight", s.fc_mu_w, true);
    f("encoder.fc_mu.bias", s.fc_mu_b, true);
    f("encoder.fc_logvar.weight", s.fc_logvar_w, true);
    f("encoder.fc_logvar.bias", s.fc_logvar_b, true);
    f("decoder.fc.weight", s.dec_fc_w, true);
    f("decoder.fc.bias", s.dec_fc_b, true);
    f("decoder.conv1.weight", s.dec_conv1_w, true);
    bn("decoder.bn1", s.dec_bn1);
    f("decoder.out.weight", s.dec_out_w, true);
    f("decoder.out.bias", s.dec_out_b, true);
  }
};

/// Fan-in scaled uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for conv
/// and FC weights and biases; BN gains 1 and shifts 0.
inline VaeParams init_params(const VaeArch& arch, std::uint64_t seed) {
  VaeParams p(arch);
  Rng rng = Rng::substream(seed, fnv1a("vae-init"), 0);
  auto fill = [&](Tensor& t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.data) v = bound * (2.0 * rng.uniform() - 1.0);
  };
  const std::size_t k = VaeArch::kKernel;
  fill(p.enc_conv1_w, VaeArch::kInChannels * k);
  fill(p.enc_conv2_w, arch.c1 * k);
  fill(p.fc_mu_w, arch.flat());
  fill(p.fc_mu_b, arch.flat());
  fill(p.fc_logvar_w, arch.flat());
  fill(p.fc_logvar_b, arch.flat());
  fill(p.dec_fc_w, arch.latent);
  fill(p.dec_fc_b, arch.latent);
  fill(p.dec_conv1_w, arch.c2 * k);
  fill(p.dec_out_w, arch.c1 * k);
  fill(p.dec_out_b, arch.c1 * k);
  return p;
}

/// Channel 0 = real parts, channel 1 = imaginary parts.
inline Tensor snapshot_to_input(const ComplexVec& z) {
  const std::size_t m = z.size();
  Tensor t({2, m});
  for (std::size_t k = 0; k < m; ++k) {
    t[k] = z[k].real();
    t[m + k] = z[k].imag();
  }
  return t;
}

inline ComplexVec input_to_snapshot(const Tensor& t) {
  if (t.shape.size() != 2 || t.shape[0] != 2)
    throw std::invalid_argument("input_to_snapshot: expected shape (2, m)");
  const std::size_t m = t.shape[1];
  ComplexVec z(m);
  for (std::size_t k = 0; k < m; ++k) z[k] = {t[k], t[m + k]};
  return z;
}

/// Packs snapshots into one (N, 2, m) batch tensor.
inline Tensor make_batch(std::span<const ComplexVec> zs) {
  if (zs.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t m = zs.front().size();
  Tensor t({zs.size(), 2, m});
  for (std::size_t n = 0; n < zs.size(); ++n) {
    if (zs[n].size() != m) throw std::invalid_argument("make_batch: ragged batch");
    for (std::size_t k = 0; k < m; ++k) {
      t[(n * 2) * m + k] = zs[n][k].real();
      t[(n * 2 + 1) * m + k] = zs[n][k].imag();
    }
  }
  return t;
}

struct LatentSample {
  std::vector<double> mu, log_var, eps, x;
};

/// x = mu + exp(log_var / 2) * eps with eps ~ N(0, I) drawn from rng.
inline LatentSample reparameterize(std::span<const double> mu,
                                   std::span<const double> log_var, Rng& rng) {
  if (mu.size() != log_var.size())
    throw std::invalid_argument("reparameterize: size mismatch");
  LatentSample s{{mu.begin(), mu.end()}, {log_var.begin(), log_var.end()}, {}, {}};
  s.eps.resize(mu.size());
  s.x.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s.eps[i] = rng.normal();
    s.x[i] = mu[i] + std::exp(log_var[i] / 2.0) * s.eps[i];
  }
  return s;
}

struct LossParts {
  double total = 0.0, rec = 0.0, kl = 0.0;
};

/// rec = ||z_in - z_rec||^2, kl = -1/2 sum(1 + log_var - mu^2 - exp(log_var)).
inline LossParts loss_vae(std::span<const double> z_in, std::span<const double> z_rec,
                          std::span<const double> mu, std::span<const double> log_var,
                          double beta) {
  if (z_in.size() != z_rec.size() || mu.size() != log_var.size())
    throw std::invalid_argument("loss_vae: shape mismatch");
  LossParts l;
  for (std::size_t i = 0; i < z_in.size(); ++i) {
    const double d = z_in[i] - z_rec[i];
    l.rec += d * d;
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    l.kl += -0.5 * (1.0 + log_var[i] - mu[i] * mu[i] - std::exp(log_var[i]));
  l.total = l.rec + beta * l.kl;
  return l;
}

/// Everything the backward pass needs from one batched forward pass.
struct ForwardCache {
  std::size_t n = 0;
  Mode mode = Mode::train;
  std::vector<double> input;
  // encoder
  std::vector<double> e1, a1, p1, e2, a2, h;
  std::vector<std::size_t> idx1, idx2;
  nn::BatchNormCache bn1, bn2;
  // latent
  std::vector<double> mu, log_var, eps, x;
  // decoder
  std::vector<double> d0, u1, d1, a3, u2, out;
  nn::BatchNormCache bn3;
};

namespace detail {

inline void encoder_forward(const VaeParams& p, ForwardCache& c) {
  const auto& a = p.arch;
  const bool train = c.mode == Mode::train;
  const std::size_t m = a.m, k = VaeArch::kKernel;
  nn::conv1d_forward(c.input, {c.n, 2, m}, p.enc_conv1_w.span(), a.c1, k, {}, c.e1);
  nn::batchnorm_forward(c.e1, {c.n, a.c1, m}, p.enc_bn1.gamma.span(),
                        p.enc_bn1.beta.span(), p.enc_bn1.running_mean.span(),
                        p.enc_bn1.running_var.span(), train, c.a1, c.bn1);
  nn::relu_forward(c.a1);
  nn::maxpool2_forward(c.a1, {c.n, a.c1, m}, c.p1, c.idx1);
  nn::conv1d_forward(c.p1, {c.n, a.c1, m / 2}, p.enc_conv2_w.span(), a.c2, k, {}, c.e2);
  nn::batchnorm_forward(c.e2, {c.n, a.c2, m / 2}, p.enc_bn2.gamma.span(),
                        p.enc_bn2.beta.span(), p.enc_bn2.running_mean.span(),
                        p.enc_bn2.running_var.span(), train, c.a2, c.bn2);
  nn::relu_forward(c.a2);
  nn::maxpool2_forward(c.a2, {c.n, a.c2, m / 2}, c.h, c.idx2);
  nn::linear_forward(c.h, c.n, a.flat(), p.fc_mu_w.span(), p.fc_mu_b.span(), a.latent, c.mu);
  nn::linear_forward(c.h, c.n, a.flat(), p.fc_logvar_w.span(), p.fc_logvar_b.span(),
                     a.latent, c.log_var);
}

inline void decoder_forward(const VaeParams& p, ForwardCache& c) {
  const auto& a = p.arch;
  const bool train = c.mode == Mode::train;
  const std::size_t m = a.m, k = VaeArch::kKernel;
  nn::linear_forward(c.x, c.n, a.latent, p.dec_fc_w.span(), p.dec_fc_b.span(), a.flat(), c.d0);
  nn::upsample2_forward(c.d0, {c.n, a.c2, m / 4}, c.u1);
  nn::conv1d_forward(c.u1, {c.n, a.c2, m / 2}, p.dec_conv1_w.span(), a.c1, k, {}, c.d1);
  nn::batchnorm_forward(c.d1, {c.n, a.c1, m / 2}, p.dec_bn1.gamma.span(),
                        p.dec_bn1.beta.span(), p.dec_bn1.running_mean.span(),
                        p.dec_bn1.running_var.span(), train, c.a3, c.bn3);
  nn::relu_forward(c.a3);
  nn::upsample2_forward(c.a3, {c.n, a.c1, m / 2}, c.u2);
  nn::conv1d_forward(c.u2, {c.n, a.c1, m}, p.dec_out_w.span(), 2, k,
                     p.dec_out_b.span(), c.out);
}

inline void check_batch(const VaeParams& p, const Tensor& batch) {
  if (batch.shape.size() != 3 || batch.shape[1] != 2 || batch.shape[2] != p.arch.m ||
      batch.shape[0] == 0)
    throw std::invalid_argument("vae: expected input batch of shape (N, 2, " +
                                std::to_string(p.arch.m) + ")");
}

}  // namespace detail

/// Full forward pass with latent noise `eps` (N x q, row-major). An empty
/// eps means the mean latent x = mu.
inline ForwardCache forward(const VaeParams& p, const Tensor& batch,
                            std::span<const double> eps, Mode mode) {
  detail::check_batch(p, batch);
  ForwardCache c;
  c.n = batch.shape[0];
  c.mode = mode;
  c.input = batch.data;
  detail::encoder_forward(p, c);
  const std::size_t q = p.arch.latent;
  if (!eps.empty() && eps.size() != c.n * q)
    throw std::invalid_argument("vae: eps must have N*q entries");
  c.eps.assign(c.n * q, 0.0);
  if (!eps.empty()) std::copy(eps.begin(), eps.end(), c.eps.begin());
  c.x.resize(c.n * q);
  for (std::size_t i = 0; i < c.n * q; ++i)
    c.x[i] = c.mu[i] + std::exp(c.log_var[i] / 2.0) * c.eps[i];
  detail::decoder_forward(p, c);
  return c;
}

/// Mean-over-batch loss of a recorded forward pass.
inline LossParts batch_loss(const ForwardCache& c, double beta) {
  const std::size_t per_in = c.input.size() / c.n;
  const std::size_t q = c.mu.size() / c.n;
  LossParts total;
  for (std::size_t n = 0; n < c.n; ++n) {
    const auto l = loss_vae(std::span(c.input).subspan(n * per_in, per_in),
                            std::span(c.out).subspan(n * per_in, per_in),
                            std::span(c.mu).subspan(n * q, q),
                            std::span(c.log_var).subspan(n * q, q), beta);
    total.rec += l.rec;
    total.kl += l.kl;
    total.total += l.total;
  }
  const double inv = 1.0 / static_cast<double>(c.n);
  total.rec *= inv;
  total.kl *= inv;
  total.total *= inv;
  return total;
}

/// Mu and log-variance heads, each (N, q).
struct Encoding {
  std::vector<double> mu, log_var;
};

inline Encoding encode(const VaeParams& p, const Tensor& batch, Mode mode = Mode::eval) {
  detail::check_batch(p, batch);
  ForwardCache c;
  c.n = batch.shape[0];
  c.mode = mode;
  c.input = batch.data;
  detail::encoder_forward(p, c);
  return {std::move(c.mu), std::move(c.log_var)};
}

/// Decodes latent rows x (N x q) into an (N, 2, m) tensor.
inline Tensor decode(const VaeParams& p, std::span<const double> x, Mode mode = Mode::eval) {
  const std::size_t q = p.arch.latent;
  if (x.empty() || x.size() % q != 0)
    throw std::invalid_argument("decode: latent length must be a multiple of q");
  ForwardCache c;
  c.n = x.size() / q;
  c.mode = mode;
  c.x.assign(x.begin(), x.end());
  detail::decoder_forward(p, c);
  Tensor out({c.n, 2, p.arch.m});
  out.data = std::move(c.out);
  return out;
}

/// Gradients share the parameter layout; running statistics are unused.
using VaeGrads = VaeParams;

/// Reverse-mode gradient of mean-over-batch (rec + beta * kl) for the
/// recorded forward pass. In train mode BN backpropagates through the batch
/// statistics.
inline VaeGrads backward(const VaeParams& p, const ForwardCache& c, double beta) {
  if (c.n == 0 || c.out.empty())
    throw std::logic_error("backward: no recorded forward pass");
  const auto& a = p.arch;
  const bool train = c.mode == Mode::train;
  const std::size_t m = a.m, k = VaeArch::kKernel, q = a.latent, N = c.n;
  const double inv_n = 1.0 / static_cast<double>(N);
  VaeGrads g(a);
  for (auto* bn : {&g.enc_bn1, &g.enc_bn2, &g.dec_bn1}) {
    std::fill(bn->gamma.data.begin(), bn->gamma.data.end(), 0.0);
    std::fill(bn->running_var.data.begin(), bn->running_var.data.end(), 0.0);
  }

  // reconstruction term
  std::vector<double> d_out(c.out.size());
  for (std::size_t i = 0; i < d_out.size(); ++i)
    d_out[i] = -2.0 * (c.input[i] - c.out[i]) * inv_n;

  // decoder
  std::vector<double> d_u2, d_a3, d_d1, d_u1, d_d0, d_x;
  nn::conv1d_backward(c.u2, {N, a.c1, m}, p.dec_out_w.span(), 2, k, d_out, &d_u2,
                      g.dec_out_w.span(), g.dec_out_b.span());
  nn::upsample2_backward(d_u2, N * a.c1 * (m / 2), d_a3);
  nn::relu_backward(c.a3, d_a3);
  nn::batchnorm_backward(d_a3, {N, a.c1, m / 2}, p.dec_bn1.gamma.span(), c.bn3, train,
                         d_d1, g.dec_bn1.gamma.span(), g.dec_bn1.beta.span());
  nn::conv1d_backward(c.u1, {N, a.c2, m / 2}, p.dec_conv1_w.span(), a.c1, k, d_d1, &d_u1,
                      g.dec_conv1_w.span(), {});
  nn::upsample2_backward(d_u1, N * a.flat(), d_d0);
  nn::linear_backward(c.x, N, q, p.dec_fc_w.span(), a.flat(), d_d0, &d_x,
                      g.dec_fc_w.span(), g.dec_fc_b.span());

  // reparameterization and KL
  std::vector<double> d_mu(N * q), d_lv(N * q);
  for (std::size_t i = 0; i < N * q; ++i) {
    const double sd = std::exp(c.log_var[i] / 2.0);
    d_mu[i] = d_x[i] + beta * c.mu[i] * inv_n;
    d_lv[i] = d_x[i] * c.eps[i] * 0.5 * sd + beta * 0.5 * (std::exp(c.log_var[i]) - 1.0) * inv_n;
  }

  // encoder
  std::vector<double> d_h, d_h2, d_a2, d_e2, d_p1, d_a1, d_e1;
  nn::linear_backward(c.h, N, a.flat(), p.fc_mu_w.span(), q, d_mu, &d_h,
                      g.fc_mu_w.span(), g.fc_mu_b.span());
  nn::linear_backward(c.h, N, a.flat(), p.fc_logvar_w.span(), q, d_lv, &d_h2,
                      g.fc_logvar_w.span(), g.fc_logvar_b.span());
  for (std::size_t i = 0; i < d_h.size(); ++i) d_h[i] += d_h2[i];
  nn::maxpool2_backward(d_h, c.idx2, c.a2.size(), d_a2);
  nn::relu_backward(c.a2, d_a2);
  nn::batchnorm_backward(d_a2, {N, a.c2, m / 2}, p.enc_bn2.gamma.span(), c.bn2, train,
                         d_e2, g.enc_bn2.gamma.span(), g.enc_bn2.beta.span());
  nn::conv1d_backward(c.p1, {N, a.c1, m / 2}, p.enc_conv2_w.span(), a.c2, k, d_e2, &d_p1,
                      g.enc_conv2_w.span(), {});
  nn::maxpool2_backward(d_p1, c.idx1, c.a1.size(), d_a1);
  nn::relu_backward(c.a1, d_a1);
  nn::batchnorm_backward(d_a1, {N, a.c1, m}, p.enc_bn1.gamma.span(), c.bn1, train,
                         d_e1, g.enc_bn1.gamma.span(), g.enc_bn1.beta.span());
  nn::conv1d_backward(c.input, {N, 2, m}, p.enc_conv1_w.span(), a.c1, k, d_e1, nullptr,
                      g.enc_conv1_w.span(), {});
  return g;
}

/// Folds the batch statistics of a train-mode pass into the running
/// estimates (momentum 0.1, unbiased variance).
inline void update_running_stats(VaeParams& p, const ForwardCache& c,
                                 double momentum = 0.1) {
  if (c.mode != Mode::train) return;
  const std::size_t m = p.arch.m;
  auto fold = [&](BatchNormParams& bn, const nn::BatchNormCache& bc, std::size_t len) {
    const double count = static_cast<double>(c.n * len);
    const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
    for (std::size_t ch = 0; ch < bn.gamma.size(); ++ch) {
      bn.running_mean[ch] = (1.0 - momentum) * bn.running_mean[ch] + momentum * bc.batch_mean[ch];
      bn.running_var[ch] =
          (1.0 - momentum) * bn.running_var[ch] + momentum * bc.batch_var[ch] * unbias;
    }
  };
  fold(p.enc_bn1, c.bn1, m);
  fold(p.enc_bn2, c.bn2, m / 2);
  fold(p.dec_bn1, c.bn3, m / 2);
}

}  // namespace radvae
