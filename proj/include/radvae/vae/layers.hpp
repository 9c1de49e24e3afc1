#pragma once

// Batched 1D layer kernels on (N, C, L) row-major buffers, forward and
// reverse mode. Backward kernels accumulate into their gradient outputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace radvae::nn {

struct Shape3 {
  std::size_t n, c, l;
  std::size_t size() const noexcept { return n * c * l; }
};

// 'same' convolution, odd kernel, zero padding. bias may be empty.
inline void conv1d_forward(std::span<const double> x, Shape3 xs,
                           std::span<const double> w, std::size_t cout,
                           std::size_t k, std::span<const double> bias,
                           std::vector<double>& y) {
  const std::size_t pad = k / 2;
  const std::size_t L = xs.l;
  y.assign(xs.n * cout * L, 0.0);
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t co = 0; co < cout; ++co) {
      double* yr = &y[(n * cout + co) * L];
      const double b = bias.empty() ? 0.0 : bias[co];
      for (std::size_t t = 0; t < L; ++t) yr[t] = b;
      for (std::size_t ci = 0; ci < xs.c; ++ci) {
        const double* xr = &x[(n * xs.c + ci) * L];
        const double* wr = &w[(co * xs.c + ci) * k];
        for (std::size_t j = 0; j < k; ++j) {
          const double wv = wr[j];
          // input index t + j - pad must land in [0, L)
          const std::size_t t0 = j < pad ? pad - j : 0;
          const std::size_t t1 = std::min(L, L + pad - j);
          for (std::size_t t = t0; t < t1; ++t) yr[t] += wv * xr[t + j - pad];
        }
      }
    }
}

inline void conv1d_backward(std::span<const double> x, Shape3 xs,
                            std::span<const double> w, std::size_t cout,
                            std::size_t k, std::span<const double> dy,
                            std::vector<double>* dx, std::span<double> dw,
                            std::span<double> dbias) {
  const std::size_t pad = k / 2;
  const std::size_t L = xs.l;
  if (dx) dx->assign(xs.size(), 0.0);
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t co = 0; co < cout; ++co) {
      const double* dyr = &dy[(n * cout + co) * L];
      if (!dbias.empty()) {
        double s = 0.0;
        for (std::size_t t = 0; t < L; ++t) s += dyr[t];
        dbias[co] += s;
      }
      for (std::size_t ci = 0; ci < xs.c; ++ci) {
        const double* xr = &x[(n * xs.c + ci) * L];
        const double* wr = &w[(co * xs.c + ci) * k];
        double* dwr = &dw[(co * xs.c + ci) * k];
        double* dxr = dx ? &(*dx)[(n * xs.c + ci) * L] : nullptr;
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t t0 = j < pad ? pad - j : 0;
          const std::size_t t1 = std::min(L, L + pad - j);
          double s = 0.0;
          for (std::size_t t = t0; t < t1; ++t) s += dyr[t] * xr[t + j - pad];
          dwr[j] += s;
          if (dxr) {
            const double wv = wr[j];
            for (std::size_t t = t0; t < t1; ++t) dxr[t + j - pad] += wv * dyr[t];
          }
        }
      }
    }
}

struct BatchNormCache {
  std::vector<double> xhat;
  std::vector<double> invstd;  // per channel
  std::vector<double> batch_mean, batch_var;  // train mode only (biased var)
};

inline constexpr double kBatchNormEps = 1e-5;

/// Per-channel normalization over (N, L). In train mode the batch
/// statistics are used; otherwise the supplied running statistics.
inline void batchnorm_forward(std::span<const double> x, Shape3 s,
                              std::span<const double> gamma,
                              std::span<const double> beta,
                              std::span<const double> running_mean,
                              std::span<const double> running_var, bool train,
                              std::vector<double>& y, BatchNormCache& cache) {
  const double count = static_cast<double>(s.n * s.l);
  cache.xhat.resize(s.size());
  cache.invstd.resize(s.c);
  y.resize(s.size());
  if (train) {
    cache.batch_mean.assign(s.c, 0.0);
    cache.batch_var.assign(s.c, 0.0);
  }
  for (std::size_t c = 0; c < s.c; ++c) {
    double mean, var;
    if (train) {
      double sum = 0.0;
      for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t t = 0; t < s.l; ++t) sum += x[(n * s.c + c) * s.l + t];
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t t = 0; t < s.l; ++t) {
          const double dv = x[(n * s.c + c) * s.l + t] - mean;
          sq += dv * dv;
        }
      var = sq / count;
      cache.batch_mean[c] = mean;
      cache.batch_var[c] = var;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
    cache.invstd[c] = inv;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t t = 0; t < s.l; ++t) {
        const std::size_t i = (n * s.c + c) * s.l + t;
        const double xh = (x[i] - mean) * inv;
        cache.xhat[i] = xh;
        y[i] = gamma[c] * xh + beta[c];
      }
  }
}

inline void batchnorm_backward(std::span<const double> dy, Shape3 s,
                               std::span<const double> gamma,
                               const BatchNormCache& cache, bool train,
                               std::vector<double>& dx, std::span<double> dgamma,
                               std::span<double> dbeta) {
  const double count = static_cast<double>(s.n * s.l);
  dx.resize(s.size());
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t t = 0; t < s.l; ++t) {
        const std::size_t i = (n * s.c + c) * s.l + t;
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * cache.xhat[i];
      }
    dgamma[c] += sum_dy_xhat;
    dbeta[c] += sum_dy;
    const double g = gamma[c] * cache.invstd[c];
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t t = 0; t < s.l; ++t) {
        const std::size_t i = (n * s.c + c) * s.l + t;
        dx[i] = train ? g * (dy[i] - sum_dy / count -
                             cache.xhat[i] * sum_dy_xhat / count)
                      : g * dy[i];
      }
  }
}

inline void relu_forward(std::vector<double>& x) {
  for (auto& v : x) v = v > 0.0 ? v : 0.0;
}

// dy *= 1[y > 0], where y is the relu output.
inline void relu_backward(std::span<const double> y, std::vector<double>& dy) {
  for (std::size_t i = 0; i < dy.size(); ++i)
    if (!(y[i] > 0.0)) dy[i] = 0.0;
}

// Window 2, stride 2. argmax holds the flat input index of each output.
inline void maxpool2_forward(std::span<const double> x, Shape3 s,
                             std::vector<double>& y,
                             std::vector<std::size_t>& argmax) {
  const std::size_t lo = s.l / 2;
  y.resize(s.n * s.c * lo);
  argmax.resize(y.size());
  for (std::size_t nc = 0; nc < s.n * s.c; ++nc)
    for (std::size_t t = 0; t < lo; ++t) {
      const std::size_t i0 = nc * s.l + 2 * t;
      const std::size_t pick = x[i0 + 1] > x[i0] ? i0 + 1 : i0;
      y[nc * lo + t] = x[pick];
      argmax[nc * lo + t] = pick;
    }
}

inline void maxpool2_backward(std::span<const double> dy,
                              std::span<const std::size_t> argmax,
                              std::size_t input_size, std::vector<double>& dx) {
  dx.assign(input_size, 0.0);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
}

// Nearest-neighbour x2.
inline void upsample2_forward(std::span<const double> x, Shape3 s,
                              std::vector<double>& y) {
  y.resize(s.size() * 2);
  for (std::size_t i = 0; i < s.size(); ++i) y[2 * i] = y[2 * i + 1] = x[i];
}

inline void upsample2_backward(std::span<const double> dy, std::size_t input_size,
                               std::vector<double>& dx) {
  dx.resize(input_size);
  for (std::size_t i = 0; i < input_size; ++i) dx[i] = dy[2 * i] + dy[2 * i + 1];
}

// y (N, out) = x (N, in) W^T + b, with W stored (out, in).
inline void linear_forward(std::span<const double> x, std::size_t n,
                           std::size_t in, std::span<const double> w,
                           std::span<const double> b, std::size_t out,
                           std::vector<double>& y) {
  y.resize(n * out);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = &x[r * in];
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = &w[o * in];
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += wr[i] * xr[i];
      y[r * out + o] = s;
    }
  }
}

inline void linear_backward(std::span<const double> x, std::size_t n,
                            std::size_t in, std::span<const double> w,
                            std::size_t out, std::span<const double> dy,
                            std::vector<double>* dx, std::span<double> dw,
                            std::span<double> db) {
  if (dx) dx->assign(n * in, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = &x[r * in];
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[r * out + o];
      if (g == 0.0) continue;
      db[o] += g;
      double* dwr = &dw[o * in];
      const double* wr = &w[o * in];
      for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
      if (dx) {
        double* dxr = &(*dx)[r * in];
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
      }
    }
  }
}

}  // namespace radvae::nn
