#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qaconv/errors.hpp"
#include "qaconv/rng.hpp"

namespace qaconv {

/// Trainable BN-FC-BN block mapping a 2hw similarity vector to one
/// probability. BN1 normalizes each of the 2hw features over the batch of
/// pairs, the FC layer maps to a single logit, BN2 normalizes that scalar.
/// Batch statistics use the biased variance; running statistics are updated
/// as r <- (1-momentum)*r + momentum*stat with the unbiased variance.
struct HeadParams {
  enum class Mode { train, eval };

  int feat = 0;  ///< 2hw of the active profile
  std::vector<double> bn1_gamma, bn1_beta, bn1_rmean, bn1_rvar;
  std::vector<double> fc_weight;
  double fc_bias = 0.0;
  double bn2_gamma = 1.0, bn2_beta = 0.0, bn2_rmean = 0.0, bn2_rvar = 1.0;
  double momentum = 0.1;
  Mode mode = Mode::eval;

  static constexpr double bn_eps = 1e-5;

  static HeadParams identity(int feat) {
    HeadParams p;
    p.feat = feat;
    p.bn1_gamma.assign(feat, 1.0);
    p.bn1_beta.assign(feat, 0.0);
    p.bn1_rmean.assign(feat, 0.0);
    p.bn1_rvar.assign(feat, 1.0);
    p.fc_weight.assign(feat, 0.0);
    return p;
  }

  /// Fresh head for training: identity BNs, FC weight uniform in
  /// [-1/sqrt(feat), 1/sqrt(feat)].
  static HeadParams init(int feat, Rng& rng) {
    HeadParams p = identity(feat);
    const double bound = 1.0 / std::sqrt(static_cast<double>(feat));
    for (auto& w : p.fc_weight) w = rng.uniform(-bound, bound);
    return p;
  }

  bool valid() const {
    auto sized = [&](const std::vector<double>& v) {
      return v.size() == static_cast<std::size_t>(feat);
    };
    if (feat <= 0 || !sized(bn1_gamma) || !sized(bn1_beta) || !sized(bn1_rmean) ||
        !sized(bn1_rvar) || !sized(fc_weight))
      return false;
    for (double v : bn1_rvar)
      if (v < 0.0) return false;
    return bn2_rvar >= 0.0 && momentum > 0.0 && momentum < 1.0;
  }
};

inline double stable_sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// Keeps probabilities strictly inside (0,1) for any finite logit.
inline double clamp_probability(double p) {
  return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
}

namespace detail {

struct HeadForwardCache {
  std::size_t n = 0;
  std::vector<double> mean, var, inv_std;  // per feature (batch or running)
  std::vector<double> xhat;                // n x feat
  std::vector<double> z;                   // n logits
  double z_mean = 0.0, z_var = 0.0, z_inv_std = 1.0;
  std::vector<double> zhat;  // n
  std::vector<double> p;     // n probabilities
};

/// One forward implementation for both modes; mutates nothing.
/// `batch` is row-major n x feat, single precision (pooled vectors).
inline void head_forward_cached(const float* batch, std::size_t n, const HeadParams& params,
                                HeadForwardCache& c) {
  if (!params.valid()) throw PreconditionError("head_forward: malformed HeadParams");
  if (n == 0) throw PreconditionError("head_forward: empty batch");
  const bool train = params.mode == HeadParams::Mode::train;
  if (train && n < 2) throw PreconditionError("head_forward: train mode needs batch size >= 2");
  const int F = params.feat;

  c.n = n;
  c.mean.assign(F, 0.0);
  c.var.assign(F, 0.0);
  c.inv_std.assign(F, 0.0);
  if (train) {
    for (std::size_t r = 0; r < n; ++r)
      for (int f = 0; f < F; ++f) c.mean[f] += batch[r * F + f];
    for (int f = 0; f < F; ++f) c.mean[f] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (int f = 0; f < F; ++f) {
        const double dlt = batch[r * F + f] - c.mean[f];
        c.var[f] += dlt * dlt;
      }
    for (int f = 0; f < F; ++f) c.var[f] /= static_cast<double>(n);
  } else {
    c.mean = params.bn1_rmean;
    c.var = params.bn1_rvar;
  }
  for (int f = 0; f < F; ++f) c.inv_std[f] = 1.0 / std::sqrt(c.var[f] + HeadParams::bn_eps);

  c.xhat.assign(n * F, 0.0);
  c.z.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double z = params.fc_bias;
    for (int f = 0; f < F; ++f) {
      const double xh = (batch[r * F + f] - c.mean[f]) * c.inv_std[f];
      c.xhat[r * F + f] = xh;
      z += params.fc_weight[f] * (params.bn1_gamma[f] * xh + params.bn1_beta[f]);
    }
    c.z[r] = z;
  }

  if (train) {
    double zm = 0.0;
    for (double z : c.z) zm += z;
    zm /= static_cast<double>(n);
    double zv = 0.0;
    for (double z : c.z) zv += (z - zm) * (z - zm);
    zv /= static_cast<double>(n);
    c.z_mean = zm;
    c.z_var = zv;
  } else {
    c.z_mean = params.bn2_rmean;
    c.z_var = params.bn2_rvar;
  }
  c.z_inv_std = 1.0 / std::sqrt(c.z_var + HeadParams::bn_eps);

  c.zhat.assign(n, 0.0);
  c.p.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    c.zhat[r] = (c.z[r] - c.z_mean) * c.z_inv_std;
    const double u = params.bn2_gamma * c.zhat[r] + params.bn2_beta;
    c.p[r] = clamp_probability(stable_sigmoid(u));
  }
}

inline void update_running_stats(const HeadForwardCache& c, HeadParams& params) {
  const double m = params.momentum;
  const double n = static_cast<double>(c.n);
  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  for (int f = 0; f < params.feat; ++f) {
    params.bn1_rmean[f] = (1.0 - m) * params.bn1_rmean[f] + m * c.mean[f];
    params.bn1_rvar[f] = (1.0 - m) * params.bn1_rvar[f] + m * c.var[f] * unbias;
  }
  params.bn2_rmean = (1.0 - m) * params.bn2_rmean + m * c.z_mean;
  params.bn2_rvar = (1.0 - m) * params.bn2_rvar + m * c.z_var * unbias;
}

}  // namespace detail

/// BN over each feature -> FC to one logit -> scalar BN -> sigmoid.
/// Train mode uses batch statistics and updates the running statistics;
/// eval mode uses the frozen running statistics. Outputs lie in (0,1).
inline std::vector<double> head_forward(const float* batch, std::size_t n, HeadParams& params) {
  detail::HeadForwardCache c;
  detail::head_forward_cached(batch, n, params, c);
  if (params.mode == HeadParams::Mode::train) detail::update_running_stats(c, params);
  return c.p;
}

inline std::vector<double> head_forward(const std::vector<float>& batch, std::size_t n,
                                        HeadParams& params) {
  if (batch.size() != n * static_cast<std::size_t>(params.feat))
    throw PreconditionError("head_forward: batch size mismatch");
  return head_forward(batch.data(), n, params);
}

/// Single-vector eval-mode forward; shared by pairwise and batched matching.
inline double head_forward_eval(const float* vec, const HeadParams& params) {
  if (params.mode != HeadParams::Mode::eval)
    throw PreconditionError("head_forward_eval: params must be in eval mode");
  detail::HeadForwardCache c;
  detail::head_forward_cached(vec, 1, params, c);
  return c.p[0];
}

}  // namespace qaconv
