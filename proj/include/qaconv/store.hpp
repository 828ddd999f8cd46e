#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qaconv/feature_map.hpp"

namespace qaconv {

/// Per-sample metadata. Identity labels are test-time ground truth used by
/// evaluation; camera and time feed TLift. Frame/fps are kept for provenance.
struct MetaRecord {
  std::int64_t identity = -1;
  int camera = -1;
  bool has_time = false;
  double time = 0.0;  ///< seconds
  std::optional<std::int64_t> frame;
  std::optional<double> fps;
};

/// Ordered collection of feature maps plus (optional) metadata, the unit of
/// batched matching. meta is either empty or one record per map.
struct GalleryStore {
  std::vector<FeatureMap> maps;
  std::vector<MetaRecord> meta;

  std::size_t size() const { return maps.size(); }

  bool uniform_profile() const {
    for (const auto& m : maps)
      if (!m.same_profile(maps.front()) || !m.well_formed()) return false;
    return true;
  }

  void check(const char* what) const {
    if (maps.empty()) throw PreconditionError(std::string(what) + ": empty store");
    if (!uniform_profile()) throw ProfileMismatch(std::string(what) + ": mixed profiles in store");
    if (!meta.empty() && meta.size() != maps.size())
      throw PreconditionError(std::string(what) + ": metadata count mismatch");
  }
};

}  // namespace qaconv
