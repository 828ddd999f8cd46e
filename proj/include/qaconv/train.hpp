#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "qaconv/class_memory.hpp"
#include "qaconv/loss.hpp"
#include "qaconv/matcher.hpp"
#include "qaconv/rng.hpp"

namespace qaconv {

struct TrainConfig {
  int batch_size = 32;
  double gamma = 2.0;  ///< focusing parameter
  double lr = 0.01;
  double lr_decay = 0.1;
  int lr_decay_epoch = 40;  ///< decay applies to epochs after this one
  int epochs = 60;
  MemoryUpdateMode update_mode = MemoryUpdateMode::direct;
  double ema_decay = 0.5;
  int kernel_size = 1;

  void validate() const {
    if (gamma < 0.0) throw PreconditionError("TrainConfig: gamma must be nonnegative");
    if (batch_size < 2) throw PreconditionError("TrainConfig: batch size must be >= 2");
    if (epochs < 1) throw PreconditionError("TrainConfig: epochs must be >= 1");
    if (lr <= 0.0) throw PreconditionError("TrainConfig: lr must be positive");
    if (update_mode == MemoryUpdateMode::ema && (ema_decay <= 0.0 || ema_decay >= 1.0))
      throw PreconditionError("TrainConfig: ema_decay must lie in (0,1)");
    if (kernel_size < 1 || kernel_size % 2 == 0)
      throw PreconditionError("TrainConfig: kernel size must be odd");
  }
};

struct TrainResult {
  HeadParams params;  ///< eval mode, running statistics frozen
  std::vector<std::pair<int, double>> loss_trace;  ///< (epoch, mean batch loss)
  double final_train_accuracy = 0.0;
};

namespace detail {

inline std::vector<float> pair_rows_against_memory(const std::vector<FeatureMap>& batch,
                                                   const ClassMemory& mem, int kernel_size) {
  const int hw = batch.front().spatial_size();
  const std::size_t feat = 2 * static_cast<std::size_t>(hw);
  std::vector<float> rows;
  rows.reserve(batch.size() * mem.buffer.size() * feat);
  for (const auto& sample : batch)
    for (const auto& slot : mem.buffer) {
      const PooledSimilarity raw = qaconv_raw_similarity(sample, slot, kernel_size);
      rows.insert(rows.end(), raw.values.begin(), raw.values.end());
    }
  return rows;
}

}  // namespace detail

/// SGD training of the head against the class memory. Per epoch: shuffle,
/// batch, score each sample against every memory class, focal loss, SGD step,
/// then the memory update (strictly after the loss computation).
/// Deterministic for a fixed seed.
inline TrainResult train_head(const std::vector<FeatureMap>& features,
                              const std::vector<int>& labels, const TrainConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  if (features.empty() || features.size() != labels.size())
    throw PreconditionError("train_head: features/labels mismatch");
  for (const auto& fm : features)
    if (!fm.same_profile(features.front()))
      throw ProfileMismatch("train_head: mixed feature profiles");

  int num_classes = 0;
  std::set<int> distinct;
  for (int l : labels) {
    if (l < 0) throw PreconditionError("train_head: labels must be nonnegative");
    distinct.insert(l);
    num_classes = std::max(num_classes, l + 1);
  }
  if (distinct.size() < 2) throw PreconditionError("train_head: need at least 2 classes");

  const FeatureMap& proto = features.front();
  std::vector<FeatureMap> normalized;
  normalized.reserve(features.size());
  for (const auto& fm : features) normalized.push_back(l2_normalize_channels(fm));

  Rng rng(seed);
  HeadParams head = HeadParams::init(2 * proto.spatial_size(), rng);
  head.mode = HeadParams::Mode::train;
  ClassMemory mem(num_classes, proto.d, proto.h, proto.w);

  TrainResult result;
  std::vector<std::size_t> order(normalized.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = epoch > cfg.lr_decay_epoch ? cfg.lr * cfg.lr_decay : cfg.lr;
    rng.shuffle(order);

    double epoch_loss = 0.0;
    int num_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) break;  // a trailing singleton cannot feed batch norm
      std::vector<FeatureMap> batch;
      std::vector<int> batch_labels;
      for (std::size_t t = start; t < end; ++t) {
        batch.push_back(normalized[order[t]]);
        batch_labels.push_back(labels[order[t]]);
      }
      const std::size_t b = batch.size();
      const std::size_t rows = b * num_classes;

      const std::vector<float> pair_rows =
          detail::pair_rows_against_memory(batch, mem, cfg.kernel_size);
      std::vector<std::uint8_t> positive(rows, 0);
      for (std::size_t i = 0; i < b; ++i) positive[i * num_classes + batch_labels[i]] = 1;

      // Forward once to advance the running statistics, then the gradient
      // pass (which reuses the same batch statistics without mutating).
      head_forward(pair_rows, rows, head);
      const HeadGradients g =
          head_backward(pair_rows, rows, positive, static_cast<double>(b), cfg.gamma, head);

      for (int f = 0; f < head.feat; ++f) {
        head.bn1_gamma[f] -= lr * g.bn1_gamma[f];
        head.bn1_beta[f] -= lr * g.bn1_beta[f];
        head.fc_weight[f] -= lr * g.fc_weight[f];
      }
      head.fc_bias -= lr * g.fc_bias;
      head.bn2_gamma -= lr * g.bn2_gamma;
      head.bn2_beta -= lr * g.bn2_beta;

      memory_update(mem, batch, batch_labels, cfg.update_mode, cfg.ema_decay);
      epoch_loss += g.loss;
      ++num_batches;
    }
    if (num_batches == 0) throw PreconditionError("train_head: no usable batches");
    result.loss_trace.emplace_back(epoch, epoch_loss / num_batches);
  }

  head.mode = HeadParams::Mode::eval;

  // Training accuracy: argmax class over the final memory, eval-mode head.
  std::size_t correct = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    int best_class = 0;
    double best_prob = -1.0;
    for (int j = 0; j < num_classes; ++j) {
      const PooledSimilarity raw =
          qaconv_raw_similarity(normalized[i], mem.buffer[j], cfg.kernel_size);
      const double p = head_forward_eval(raw.values.data(), head);
      if (p > best_prob) {
        best_prob = p;
        best_class = j;
      }
    }
    if (best_class == labels[i]) ++correct;
  }
  result.final_train_accuracy = static_cast<double>(correct) / normalized.size();
  result.params = std::move(head);
  return result;
}

}  // namespace qaconv
