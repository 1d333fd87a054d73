#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sessrec/dataio.hpp"

namespace sessrec {

struct VvEdge {
  int64_t src = 0;
  int64_t dst = 0;
  int64_t bucket = 0;  // bucketed |t_src - t_dst| of the transition
};

// Per-session heterogeneous graph: one node per distinct item plus
// interest_count interest nodes, fully connected item<->interest.
struct MultiInterestGraph {
  std::vector<int64_t> item_nodes;  // node -> dense item index
  int64_t interest_count = 0;
  std::vector<int64_t> relative_steps;  // bucketed offset from session start
  std::vector<int64_t> last_steps;      // bucketed offset from session end
  std::vector<VvEdge> edges_vv;         // insertion order, deduplicated
  std::vector<std::pair<int64_t, int64_t>> edges_vu;  // (item node, interest)
  std::vector<std::pair<int64_t, int64_t>> edges_uv;  // (interest, item node)

  // edges_vv resorted by destination for grouped attention; group ids are
  // compact over destinations that actually receive edges.
  std::vector<int64_t> vv_src_sorted;
  std::vector<int64_t> vv_dst_sorted;
  std::vector<int64_t> vv_bucket_sorted;
  std::vector<int64_t> vv_group;
  int64_t vv_group_count = 0;
  std::vector<bool> node_has_in;

  int64_t node_count() const {
    return static_cast<int64_t>(item_nodes.size());
  }
};

// Distinct items merge into one node; adjacent transitions become directed
// edges (deduplicated, first occurrence fixing the interval attribute;
// reverse copies added when bidirectional). Per-node step offsets use the
// node's latest occurrence. Self-transitions are dropped.
MultiInterestGraph build_graph(const SessionRecord& session,
                               int64_t interest_count, int64_t bucket_width,
                               bool bidirectional, int64_t max_step);

// Textual edge-list dump, one block per relation.
std::string dump_graph(const MultiInterestGraph& g);

}  // namespace sessrec
