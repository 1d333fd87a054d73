#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sessrec/dataio.hpp"

namespace sessrec {

// Session generator with planted interest structure: every session mixes
// items from two pools, with tight gaps inside an interest and one loose
// gap between them in chunked mode.
struct SynthConfig {
  std::vector<std::vector<std::string>> interest_pools;  // disjoint, non-empty
  int64_t sessions = 2000;
  int64_t items_lo = 3, items_hi = 5;        // items drawn per chosen pool
  int64_t intra_gap_lo = 1, intra_gap_hi = 10;        // seconds
  int64_t inter_gap_lo = 1800, inter_gap_hi = 7200;   // seconds
  bool chunked = true;  // false: interleave the two pools
  enum class TargetRule { LatestInterest, Uniform };
  TargetRule target_rule = TargetRule::LatestInterest;
  uint64_t seed = 7;
  double test_fraction = 0.1;

  void validate() const;
};

// Pools named p<i>_<j>, i.e. pool_count disjoint pools of pool_size items.
std::vector<std::vector<std::string>> make_disjoint_pools(int64_t pool_count,
                                                          int64_t pool_size);

struct SynthResult {
  DatasetSplit split;                 // one example per generated session
  std::vector<int64_t> item_pool_of;  // dense item index -> pool
  std::vector<std::string> session_ids;   // generation order
  std::vector<int64_t> session_target_pool;
};

// Targets are always unseen items from the designated pool, so a predictor
// that recovers the pool can rank them ahead of everything else.
SynthResult generate(const SynthConfig& cfg);

// Sidecar with the ground-truth pool labels.
void save_labels(const SynthResult& result, const std::string& path);

}  // namespace sessrec
