#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qaconv/head.hpp"

namespace qaconv {

inline constexpr double kLossProbClamp = 1e-7;

namespace detail {

inline double clamp_phat(double v) {
  return std::min(std::max(v, kLossProbClamp), 1.0 - kLossProbClamp);
}

/// -(1-p^)^gamma * log(p^) for one pair, p^ already clamped.
inline double focal_term(double phat, double gamma) {
  return -std::pow(1.0 - phat, gamma) * std::log(phat);
}

/// d/dp^ of the summed (unnormalized) focal term. Zero when gamma is zero
/// kills the 0 * (1-p^)^-1 indeterminate form.
inline double focal_term_dphat(double phat, double gamma) {
  double t = -std::pow(1.0 - phat, gamma) / phat;
  if (gamma > 0.0) t += gamma * std::pow(1.0 - phat, gamma - 1.0) * std::log(phat);
  return t;
}

}  // namespace detail

/// Focal-weighted binary cross entropy over a batch of b samples scored
/// against all c classes:
///   loss = -(1/b) * sum_ij (1 - p^_ij)^gamma * log(p^_ij),
/// with p^_ij = p_ij for the positive class of sample i and 1 - p_ij
/// otherwise. Probabilities are clamped to [1e-7, 1-1e-7] before the log.
inline double focal_bce_loss(const std::vector<double>& probs, std::size_t b, std::size_t c,
                             const std::vector<int>& labels, double gamma) {
  if (gamma < 0.0) throw PreconditionError("focal_bce_loss: gamma must be nonnegative");
  if (b == 0 || c == 0 || probs.size() != b * c || labels.size() != b)
    throw PreconditionError("focal_bce_loss: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
      throw PreconditionError("focal_bce_loss: label out of range");
    for (std::size_t j = 0; j < c; ++j) {
      const double p = probs[i * c + j];
      const double phat = detail::clamp_phat(labels[i] == static_cast<int>(j) ? p : 1.0 - p);
      total += detail::focal_term(phat, gamma);
    }
  }
  return total / static_cast<double>(b);
}

/// Gradients of the focal loss with respect to every trainable head field,
/// plus the loss and probabilities of the forward pass they belong to.
struct HeadGradients {
  std::vector<double> bn1_gamma, bn1_beta;
  std::vector<double> fc_weight;
  double fc_bias = 0.0;
  double bn2_gamma = 0.0, bn2_beta = 0.0;
  double loss = 0.0;
  std::vector<double> probs;
};

/// Analytic gradients of focal_bce_loss through the train-mode head, with
/// batch statistics treated as functions of the batch (full BN backward).
/// `positive` flags each row of the (sample, class) pair batch; the loss is
/// normalized by `batch_divisor` (the sample count b, per the loss formula).
/// Mutates nothing; running statistics stay untouched.
inline HeadGradients head_backward(const std::vector<float>& batch, std::size_t n,
                                   const std::vector<std::uint8_t>& positive,
                                   double batch_divisor, double gamma,
                                   const HeadParams& params) {
  if (params.mode != HeadParams::Mode::train)
    throw PreconditionError("head_backward: params must be in train mode");
  if (n < 2) throw PreconditionError("head_backward: batch size must be >= 2");
  if (positive.size() != n || batch.size() != n * static_cast<std::size_t>(params.feat))
    throw PreconditionError("head_backward: shape mismatch");
  if (gamma < 0.0) throw PreconditionError("head_backward: gamma must be nonnegative");
  if (batch_divisor <= 0.0) throw PreconditionError("head_backward: bad batch divisor");

  detail::HeadForwardCache c;
  detail::head_forward_cached(batch.data(), n, params, c);
  const int F = params.feat;

  HeadGradients g;
  g.bn1_gamma.assign(F, 0.0);
  g.bn1_beta.assign(F, 0.0);
  g.fc_weight.assign(F, 0.0);
  g.probs = c.p;

  // Loss and dL/du per row (u is the pre-sigmoid logit after BN2).
  std::vector<double> gu(n, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double p = c.p[r];
    const double phat_raw = positive[r] ? p : 1.0 - p;
    const double phat = detail::clamp_phat(phat_raw);
    loss += detail::focal_term(phat, gamma);
    // The clamp is flat outside its range, so those rows pass no gradient.
    double dphat = 0.0;
    if (phat_raw > kLossProbClamp && phat_raw < 1.0 - kLossProbClamp)
      dphat = detail::focal_term_dphat(phat, gamma);
    const double dp = positive[r] ? dphat : -dphat;
    gu[r] = (dp / batch_divisor) * p * (1.0 - p);
  }
  g.loss = loss / batch_divisor;

  // BN2: parameter gradients, then full backward to the logits.
  double gu_mean = 0.0, guz_mean = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    g.bn2_gamma += gu[r] * c.zhat[r];
    g.bn2_beta += gu[r];
    gu_mean += gu[r];
    guz_mean += gu[r] * c.zhat[r];
  }
  gu_mean /= static_cast<double>(n);
  guz_mean /= static_cast<double>(n);

  std::vector<double> dz(n);
  for (std::size_t r = 0; r < n; ++r)
    dz[r] = params.bn2_gamma * c.z_inv_std * (gu[r] - gu_mean - c.zhat[r] * guz_mean);

  // FC and BN1 affine parameters (BN1 statistics depend only on the data, so
  // no further statistic chain is needed for these).
  for (std::size_t r = 0; r < n; ++r) {
    g.fc_bias += dz[r];
    for (int f = 0; f < F; ++f) {
      const double xh = c.xhat[r * F + f];
      const double y1 = params.bn1_gamma[f] * xh + params.bn1_beta[f];
      g.fc_weight[f] += dz[r] * y1;
      const double dy1 = dz[r] * params.fc_weight[f];
      g.bn1_gamma[f] += dy1 * xh;
      g.bn1_beta[f] += dy1;
    }
  }
  return g;
}

}  // namespace qaconv
