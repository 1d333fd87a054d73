#include "sessrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "sessrec/rng.hpp"

namespace sessrec {

void SynthConfig::validate() const {
  if (interest_pools.size() < 2)
    throw ConfigError("synth: need at least two interest pools");
  std::unordered_set<std::string> seen;
  for (const auto& pool : interest_pools) {
    if (pool.empty()) throw ConfigError("synth: pools must be non-empty");
    for (const std::string& item : pool)
      if (!seen.insert(item).second)
        throw ConfigError("synth: pools must be disjoint, item '" + item +
                          "' repeats");
  }
  if (items_lo < 1 || items_hi < items_lo)
    throw ConfigError("synth: bad items-per-pool range");
  if (intra_gap_lo < 1 || intra_gap_hi < intra_gap_lo ||
      inter_gap_lo < 1 || inter_gap_hi < inter_gap_lo)
    throw ConfigError("synth: gap ranges must be positive and ordered");
  if (intra_gap_hi >= inter_gap_lo)
    throw ConfigError(
        "synth: intra-gap maximum must stay below the inter-gap minimum");
  for (const auto& pool : interest_pools)
    if (static_cast<int64_t>(pool.size()) <= items_hi)
      throw ConfigError(
          "synth: every pool needs more items than the per-session draw so "
          "an unseen target exists");
  if (sessions < 1) throw ConfigError("synth: session count must be positive");
  if (test_fraction < 0.0 || test_fraction > 1.0)
    throw ConfigError("synth: test fraction must lie in [0, 1]");
}

std::vector<std::vector<std::string>> make_disjoint_pools(int64_t pool_count,
                                                          int64_t pool_size) {
  if (pool_count < 1 || pool_size < 1)
    throw ConfigError("synth: pool count and size must be positive");
  std::vector<std::vector<std::string>> pools;
  for (int64_t p = 0; p < pool_count; ++p) {
    std::vector<std::string> pool;
    for (int64_t i = 0; i < pool_size; ++i)
      pool.push_back("p" + std::to_string(p) + "_" + std::to_string(i));
    pools.push_back(std::move(pool));
  }
  return pools;
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthResult result;
  DatasetSplit& split = result.split;
  std::vector<std::vector<int64_t>> dense_pools;
  for (size_t p = 0; p < cfg.interest_pools.size(); ++p) {
    std::vector<int64_t> dense;
    for (const std::string& item : cfg.interest_pools[p]) {
      int64_t id = static_cast<int64_t>(split.item_names.size());
      split.vocab.emplace(item, id);
      split.item_names.push_back(item);
      result.item_pool_of.push_back(static_cast<int64_t>(p));
      dense.push_back(id);
    }
    dense_pools.push_back(std::move(dense));
  }
  split.item_count = static_cast<int64_t>(split.item_names.size());

  const int64_t pool_count = static_cast<int64_t>(dense_pools.size());
  std::vector<Example> examples;
  examples.reserve(static_cast<size_t>(cfg.sessions));
  for (int64_t s = 0; s < cfg.sessions; ++s) {
    Rng rng(Rng::derive(cfg.seed, static_cast<uint64_t>(s)));
    const int64_t first_pool = rng.uniform_int(pool_count);
    int64_t second_pool = rng.uniform_int(pool_count - 1);
    if (second_pool >= first_pool) ++second_pool;
    const int64_t first_count = rng.uniform_range(cfg.items_lo, cfg.items_hi);
    const int64_t second_count = rng.uniform_range(cfg.items_lo, cfg.items_hi);
    std::vector<int64_t> first_items = rng.sample_without_replacement(
        dense_pools[static_cast<size_t>(first_pool)], first_count);
    std::vector<int64_t> second_items = rng.sample_without_replacement(
        dense_pools[static_cast<size_t>(second_pool)], second_count);

    std::vector<int64_t> items;
    std::vector<int64_t> pools;
    if (cfg.chunked) {
      for (int64_t v : first_items) {
        items.push_back(v);
        pools.push_back(first_pool);
      }
      for (int64_t v : second_items) {
        items.push_back(v);
        pools.push_back(second_pool);
      }
    } else {
      const size_t longest = std::max(first_items.size(), second_items.size());
      for (size_t i = 0; i < longest; ++i) {
        if (i < first_items.size()) {
          items.push_back(first_items[i]);
          pools.push_back(first_pool);
        }
        if (i < second_items.size()) {
          items.push_back(second_items[i]);
          pools.push_back(second_pool);
        }
      }
    }

    std::vector<int64_t> timestamps;
    int64_t t = 1000000 * (s + 1);
    for (size_t i = 0; i < items.size(); ++i) {
      if (i > 0) {
        const bool boundary =
            cfg.chunked && i == first_items.size();  // the one loose gap
        t += boundary ? rng.uniform_range(cfg.inter_gap_lo, cfg.inter_gap_hi)
                      : rng.uniform_range(cfg.intra_gap_lo, cfg.intra_gap_hi);
      }
      timestamps.push_back(t);
    }

    int64_t target_pool;
    switch (cfg.target_rule) {
      case SynthConfig::TargetRule::LatestInterest:
        target_pool = pools.back();
        break;
      case SynthConfig::TargetRule::Uniform:
      default:
        target_pool = rng.uniform() < 0.5 ? first_pool : second_pool;
        break;
    }
    std::vector<int64_t> unseen;
    const std::vector<int64_t>& drawn =
        target_pool == first_pool ? first_items : second_items;
    for (int64_t v : dense_pools[static_cast<size_t>(target_pool)])
      if (std::find(drawn.begin(), drawn.end(), v) == drawn.end())
        unseen.push_back(v);
    const int64_t target =
        unseen[static_cast<size_t>(rng.uniform_int(
            static_cast<int64_t>(unseen.size())))];

    Example e;
    e.session_id = "synth" + std::to_string(s);
    e.items = std::move(items);
    e.timestamps = std::move(timestamps);
    e.target = target;
    result.session_ids.push_back(e.session_id);
    result.session_target_pool.push_back(target_pool);
    examples.push_back(std::move(e));
  }

  const int64_t test_count = static_cast<int64_t>(
      std::floor(static_cast<double>(cfg.sessions) * cfg.test_fraction));
  const int64_t train_count = cfg.sessions - test_count;
  for (int64_t s = 0; s < cfg.sessions; ++s) {
    if (s < train_count)
      split.train.push_back(std::move(examples[static_cast<size_t>(s)]));
    else
      split.test.push_back(std::move(examples[static_cast<size_t>(s)]));
  }
  return result;
}

void save_labels(const SynthResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "sessrec-labels v1\n";
  out << "items " << result.item_pool_of.size() << "\n";
  for (size_t i = 0; i < result.item_pool_of.size(); ++i)
    out << result.split.item_names[i] << '\t' << result.item_pool_of[i]
        << '\n';
  out << "sessions " << result.session_ids.size() << "\n";
  for (size_t s = 0; s < result.session_ids.size(); ++s)
    out << result.session_ids[s] << '\t' << result.session_target_pool[s]
        << '\n';
  if (!out) throw IoError("failed while writing " + path);
}

}  // namespace sessrec
