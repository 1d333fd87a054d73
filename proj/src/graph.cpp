#include "sessrec/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

namespace sessrec {

MultiInterestGraph build_graph(const SessionRecord& session,
                               int64_t interest_count, int64_t bucket_width,
                               bool bidirectional, int64_t max_step) {
  if (interest_count < 1)
    throw ConfigError("build_graph: interest count must be at least 1");
  if (session.items.empty())
    throw ContractError("build_graph: empty session");
  if (session.items.size() != session.timestamps.size())
    throw ContractError("build_graph: item/timestamp length mismatch");

  MultiInterestGraph g;
  g.interest_count = interest_count;

  std::unordered_map<int64_t, int64_t> node_of;
  std::vector<int64_t> node_time;  // latest occurrence per node
  for (size_t i = 0; i < session.items.size(); ++i) {
    auto it = node_of.find(session.items[i]);
    if (it == node_of.end()) {
      node_of.emplace(session.items[i], g.node_count());
      g.item_nodes.push_back(session.items[i]);
      node_time.push_back(session.timestamps[i]);
    } else {
      node_time[static_cast<size_t>(it->second)] = session.timestamps[i];
    }
  }

  const int64_t n = g.node_count();
  const int64_t first_ts = session.timestamps.front();
  const int64_t last_ts = session.timestamps.back();
  g.relative_steps.reserve(static_cast<size_t>(n));
  g.last_steps.reserve(static_cast<size_t>(n));
  for (int64_t v = 0; v < n; ++v) {
    g.relative_steps.push_back(
        bucket_interval(node_time[static_cast<size_t>(v)], first_ts,
                        bucket_width, max_step));
    g.last_steps.push_back(bucket_interval(
        last_ts, node_time[static_cast<size_t>(v)], bucket_width, max_step));
  }

  std::set<std::pair<int64_t, int64_t>> seen;
  for (size_t k = 0; k + 1 < session.items.size(); ++k) {
    int64_t src = node_of[session.items[k]];
    int64_t dst = node_of[session.items[k + 1]];
    if (src == dst) continue;
    if (!seen.emplace(src, dst).second) continue;
    g.edges_vv.push_back(
        {src, dst,
         bucket_interval(session.timestamps[k], session.timestamps[k + 1],
                         bucket_width, max_step)});
  }
  if (bidirectional) {
    const size_t forward = g.edges_vv.size();
    for (size_t e = 0; e < forward; ++e) {
      const VvEdge& fwd = g.edges_vv[e];
      if (seen.emplace(fwd.dst, fwd.src).second)
        g.edges_vv.push_back({fwd.dst, fwd.src, fwd.bucket});
    }
  }

  for (int64_t v = 0; v < n; ++v)
    for (int64_t h = 0; h < interest_count; ++h) g.edges_vu.emplace_back(v, h);
  for (int64_t h = 0; h < interest_count; ++h)
    for (int64_t v = 0; v < n; ++v) g.edges_uv.emplace_back(h, v);

  std::vector<int64_t> order(g.edges_vv.size());
  for (size_t e = 0; e < order.size(); ++e)
    order[e] = static_cast<int64_t>(e);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return g.edges_vv[static_cast<size_t>(a)].dst <
           g.edges_vv[static_cast<size_t>(b)].dst;
  });
  g.node_has_in.assign(static_cast<size_t>(n), false);
  int64_t prev_dst = -1;
  for (int64_t e : order) {
    const VvEdge& edge = g.edges_vv[static_cast<size_t>(e)];
    if (edge.dst != prev_dst) {
      ++g.vv_group_count;
      prev_dst = edge.dst;
    }
    g.vv_src_sorted.push_back(edge.src);
    g.vv_dst_sorted.push_back(edge.dst);
    g.vv_bucket_sorted.push_back(edge.bucket);
    g.vv_group.push_back(g.vv_group_count - 1);
    g.node_has_in[static_cast<size_t>(edge.dst)] = true;
  }
  return g;
}

std::string dump_graph(const MultiInterestGraph& g) {
  std::ostringstream os;
  os << "graph N=" << g.node_count() << " H=" << g.interest_count << "\n";
  os << "nodes\n";
  for (int64_t v = 0; v < g.node_count(); ++v)
    os << v << " item=" << g.item_nodes[static_cast<size_t>(v)]
       << " rel=" << g.relative_steps[static_cast<size_t>(v)]
       << " last=" << g.last_steps[static_cast<size_t>(v)] << "\n";
  os << "item-item\n";
  for (const VvEdge& e : g.edges_vv)
    os << e.src << " -> " << e.dst << " bucket=" << e.bucket << "\n";
  os << "item-interest\n";
  for (auto [v, h] : g.edges_vu) os << v << " -> u" << h << "\n";
  os << "interest-item\n";
  for (auto [h, v] : g.edges_uv) os << "u" << h << " -> " << v << "\n";
  return os.str();
}

}  // namespace sessrec
