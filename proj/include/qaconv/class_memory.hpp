#pragma once

#include <cstdint>
#include <vector>

#include "qaconv/feature_map.hpp"

namespace qaconv {

enum class MemoryUpdateMode { direct, ema };

/// Per-class buffer caching the most recent feature map of each training
/// class, used as the comparison bank for the loss. Starts all zero.
struct ClassMemory {
  std::vector<FeatureMap> buffer;

  ClassMemory() = default;
  ClassMemory(int classes, int d, int h, int w) {
    if (classes <= 0) throw PreconditionError("ClassMemory: class count must be positive");
    buffer.assign(classes, FeatureMap(d, h, w));
  }

  int classes() const { return static_cast<int>(buffer.size()); }
};

/// Writes the batch into the memory. Direct mode assigns each sample to its
/// class slot in batch order, so the last occurrence of a class wins. EMA mode
/// blends: mem <- decay*mem + (1-decay)*sample.
inline void memory_update(ClassMemory& mem, const std::vector<FeatureMap>& batch,
                          const std::vector<int>& labels,
                          MemoryUpdateMode mode = MemoryUpdateMode::direct,
                          double ema_decay = 0.5) {
  if (batch.size() != labels.size())
    throw PreconditionError("memory_update: batch/label count mismatch");
  if (mode == MemoryUpdateMode::ema && (ema_decay <= 0.0 || ema_decay >= 1.0))
    throw PreconditionError("memory_update: ema_decay must lie in (0,1)");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int cls = labels[i];
    if (cls < 0 || cls >= mem.classes())
      throw PreconditionError("memory_update: label out of range");
    if (!batch[i].same_profile(mem.buffer[cls]))
      throw ProfileMismatch("memory_update: sample profile differs from memory");
    if (mode == MemoryUpdateMode::direct) {
      mem.buffer[cls] = batch[i];
    } else {
      auto& slot = mem.buffer[cls].data;
      for (std::size_t t = 0; t < slot.size(); ++t)
        slot[t] = static_cast<float>(ema_decay * slot[t] + (1.0 - ema_decay) * batch[i].data[t]);
    }
  }
}

}  // namespace qaconv
