#pragma once

// Central finite-difference check of the analytic VAE gradients.

#include <cmath>
#include <string>
#include <vector>

#include "radvae/vae/model.hpp"

namespace radvae {

struct TensorGradCheck {
  std::string name;
  std::size_t size = 0;
  double rel_error = 0.0;  // ||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||)
  double norm = 0.0;       // ||g_fd||
};

/// Compares backward() against central differences of the mean batch loss
/// for every trainable tensor, with the latent noise frozen. The pass runs
/// in train mode, so BN uses batch statistics on both sides.
inline std::vector<TensorGradCheck> gradient_check(const VaeParams& params, const Tensor& batch,
                                                   std::span<const double> eps, double beta,
                                                   double step = 1e-5) {
  const auto analytic = backward(params, forward(params, batch, eps, Mode::train), beta);
  VaeParams probe = params;
  auto loss = [&] { return batch_loss(forward(probe, batch, eps, Mode::train), beta).total; };

  std::vector<const Tensor*> grads;
  analytic.for_each_trainable([&](const std::string&, const Tensor& t) { grads.push_back(&t); });

  std::vector<TensorGradCheck> out;
  std::size_t k = 0;
  probe.for_each_trainable([&](const std::string& name, Tensor& t) {
    const Tensor& g = *grads[k++];
    double diff2 = 0, a2 = 0, f2 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = t[i];
      t[i] = keep + step;
      const double up = loss();
      t[i] = keep - step;
      const double down = loss();
      t[i] = keep;
      const double fd = (up - down) / (2.0 * step);
      diff2 += (g[i] - fd) * (g[i] - fd);
      a2 += g[i] * g[i];
      f2 += fd * fd;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(f2), 1e-300});
    out.push_back({name, t.size(), std::sqrt(diff2) / denom, std::sqrt(f2)});
  });
  return out;
}

}  // namespace radvae
