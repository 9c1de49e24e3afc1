#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "radvae/scenario.hpp"
#include "radvae/vae/model.hpp"

namespace radvae {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  VaeParams m, v;
  long t = 0;

  explicit AdamState(const VaeArch& arch) : m(zeroed(arch)), v(zeroed(arch)) {}

 private:
  static VaeParams zeroed(const VaeArch& arch) {
    VaeParams z(arch);
    z.for_each([](const std::string&, Tensor& t, bool) {
      std::fill(t.data.begin(), t.data.end(), 0.0);
    });
    return z;
  }
};

/// One bias-corrected Adam update of every trainable tensor.
inline void adam_step(VaeParams& params, const VaeGrads& grads, AdamState& state,
                      double lr, const AdamConfig& cfg = {}) {
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  std::vector<Tensor*> ps, ms, vs;
  std::vector<const Tensor*> gs;
  params.for_each_trainable([&](const std::string&, Tensor& t) { ps.push_back(&t); });
  state.m.for_each_trainable([&](const std::string&, Tensor& t) { ms.push_back(&t); });
  state.v.for_each_trainable([&](const std::string&, Tensor& t) { vs.push_back(&t); });
  grads.for_each_trainable([&](const std::string&, const Tensor& t) { gs.push_back(&t); });
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& p = ps[k]->data;
    auto& m = ms[k]->data;
    auto& v = vs[k]->data;
    const auto& g = gs[k]->data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

/// `beta` weights the KL term of the loss rec + beta * kl.
struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  double beta = 100.0;
  std::size_t batch_size = 128;
  std::size_t latent = 12;
  std::uint64_t seed = 0;
  double train_fraction = 2.0 / 3.0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: lr must be > 0");
    if (!(beta >= 0.0)) throw std::invalid_argument("train: beta must be >= 0");
    if (batch_size < 2) throw std::invalid_argument("train: batch size must be >= 2");
    if (latent < 1) throw std::invalid_argument("train: latent dimension must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw std::invalid_argument("train: train fraction must lie in (0, 1)");
  }
};

struct EpochStats {
  int epoch = 0;
  LossParts train, val;
};

struct TrainResult {
  VaeParams params;
  std::vector<EpochStats> history;
};

/// Mean loss over `data` in eval mode, one latent draw per snapshot.
inline LossParts evaluate_loss(const VaeParams& p, std::span<const ComplexVec> data,
                               double beta, Rng& rng, std::size_t chunk = 512) {
  LossParts acc;
  for (std::size_t s = 0; s < data.size(); s += chunk) {
    const std::size_t n = std::min(chunk, data.size() - s);
    const Tensor batch = make_batch(data.subspan(s, n));
    std::vector<double> eps(n * p.arch.latent);
    for (auto& e : eps) e = rng.normal();
    const auto c = forward(p, batch, eps, Mode::eval);
    const auto l = batch_loss(c, beta);
    const double w = static_cast<double>(n);
    acc.total += l.total * w;
    acc.rec += l.rec * w;
    acc.kl += l.kl * w;
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  return {acc.total * inv, acc.rec * inv, acc.kl * inv};
}

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains on a target-free data set: the first train_fraction of the
/// snapshots are used for training, the rest for validation. Mini-batches
/// are reshuffled every epoch from the seed; the last-epoch parameters are
/// returned.
inline TrainResult train(std::span<const Snapshot> dataset, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& s : dataset)
    if (s.hypothesis != Hypothesis::h0)
      throw std::invalid_argument("train: dataset must be target-free (H0 only)");
  const std::size_t total = dataset.size();
  const auto n_train = static_cast<std::size_t>(
      std::llround(cfg.train_fraction * static_cast<double>(total)));
  if (n_train < 2 || n_train >= total)
    throw std::invalid_argument("train: dataset too small to split");

  std::vector<ComplexVec> zs;
  zs.reserve(total);
  for (const auto& s : dataset) zs.push_back(s.z);
  const std::span<const ComplexVec> train_set(zs.data(), n_train);
  const std::span<const ComplexVec> val_set(zs.data() + n_train, total - n_train);

  VaeArch arch;
  arch.m = zs.front().size();
  arch.latent = cfg.latent;
  TrainResult result{init_params(arch, cfg.seed), {}};
  VaeParams& p = result.params;
  AdamState adam(arch);

  std::vector<std::size_t> order(n_train);
  std::vector<ComplexVec> batch_z;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = Rng::substream(cfg.seed, fnv1a("vae-epoch"), static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n_train - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(order[i], order[j]);
    }
    LossParts acc;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < n_train; s += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, n_train - s);
      // A trailing batch of one would make batch statistics degenerate.
      if (n < 2) break;
      batch_z.clear();
      for (std::size_t i = 0; i < n; ++i) batch_z.push_back(train_set[order[s + i]]);
      const Tensor batch = make_batch(batch_z);
      std::vector<double> eps(n * arch.latent);
      for (auto& e : eps) e = rng.normal();
      const auto cache = forward(p, batch, eps, Mode::train);
      const auto l = batch_loss(cache, cfg.beta);
      const auto grads = backward(p, cache, cfg.beta);
      adam_step(p, grads, adam, cfg.learning_rate);
      update_running_stats(p, cache);
      const double w = static_cast<double>(n);
      acc.total += l.total * w;
      acc.rec += l.rec * w;
      acc.kl += l.kl * w;
      seen += n;
    }
    if (!p.all_finite())
      throw std::runtime_error("train: non-finite parameters at epoch " + std::to_string(epoch));
    EpochStats st;
    st.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(seen);
    st.train = {acc.total * inv, acc.rec * inv, acc.kl * inv};
    Rng vrng = Rng::substream(cfg.seed, fnv1a("vae-val"), static_cast<std::uint64_t>(epoch));
    st.val = evaluate_loss(p, val_set, cfg.beta, vrng);
    result.history.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return result;
}

}  // namespace radvae
