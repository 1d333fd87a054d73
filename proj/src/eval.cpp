#include "sessrec/eval.hpp"

#include <cmath>
#include <sstream>

namespace sessrec {

int64_t rank_of_target(const std::vector<Real>& scores, int64_t target) {
  if (target < 0 || target >= static_cast<int64_t>(scores.size()))
    throw IndexError("rank_of_target: target " + std::to_string(target) +
                     " outside score vector of " +
                     std::to_string(scores.size()));
  const Real ts = scores[static_cast<size_t>(target)];
  int64_t rank = 1;
  for (int64_t i = 0; i < static_cast<int64_t>(scores.size()); ++i) {
    const Real s = scores[static_cast<size_t>(i)];
    if (s > ts || (s == ts && i < target)) ++rank;
  }
  return rank;
}

namespace {

void require_ranks(const std::vector<int64_t>& ranks, int64_t k) {
  if (k < 1) throw ConfigError("metric cutoff k must be at least 1");
  if (ranks.empty()) throw EvalError("no examples to evaluate");
}

}  // namespace

double hit_at_k(const std::vector<int64_t>& ranks, int64_t k) {
  require_ranks(ranks, k);
  int64_t hits = 0;
  for (int64_t r : ranks)
    if (r <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ndcg_at_k(const std::vector<int64_t>& ranks, int64_t k) {
  require_ranks(ranks, k);
  double gain = 0;
  for (int64_t r : ranks)
    if (r <= k) gain += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  return gain / static_cast<double>(ranks.size());
}

Metrics metrics_from_ranks(const std::vector<int64_t>& ranks) {
  Metrics m;
  m.examples = static_cast<int64_t>(ranks.size());
  m.hit10 = hit_at_k(ranks, 10);
  m.ndcg10 = ndcg_at_k(ranks, 10);
  m.hit20 = hit_at_k(ranks, 20);
  m.ndcg20 = ndcg_at_k(ranks, 20);
  return m;
}

std::vector<int64_t> model_ranks(const Model& model,
                                 const std::vector<Example>& examples) {
  const ModelConfig& cfg = model.config();
  std::vector<int64_t> ranks;
  ranks.reserve(examples.size());
  for (const Example& e : examples) {
    SessionRecord session{e.session_id, e.items, e.timestamps};
    MultiInterestGraph g =
        build_graph(session, cfg.interest_count, cfg.bucket_width,
                    cfg.bidirectional_edges, cfg.max_step);
    Tape tape(false);
    ForwardTrace trace = model.forward(tape, g);
    ranks.push_back(rank_of_target(trace.scores.values(), e.target));
  }
  return ranks;
}

Metrics evaluate_model(const Model& model,
                       const std::vector<Example>& examples) {
  return metrics_from_ranks(model_ranks(model, examples));
}

std::vector<Real> popularity_scores(const std::vector<Example>& train,
                                    int64_t item_count) {
  if (train.empty())
    throw EvalError("popularity baseline needs a non-empty train split");
  std::vector<Real> counts(static_cast<size_t>(item_count), Real(0));
  for (const Example& e : train) {
    if (e.target < 0 || e.target >= item_count)
      throw IndexError("popularity baseline: target outside vocabulary");
    counts[static_cast<size_t>(e.target)] += Real(1);
  }
  return counts;
}

Metrics evaluate_popularity(const std::vector<Example>& train,
                            const std::vector<Example>& test,
                            int64_t item_count) {
  std::vector<Real> scores = popularity_scores(train, item_count);
  std::vector<int64_t> ranks;
  ranks.reserve(test.size());
  for (const Example& e : test)
    ranks.push_back(rank_of_target(scores, e.target));
  return metrics_from_ranks(ranks);
}

std::string format_metrics_report(const Metrics& m) {
  std::ostringstream os;
  os << "sessrec-metrics v1\n";
  os << "examples " << m.examples << "\n";
  os << "k hit ndcg\n";
  char line[96];
  std::snprintf(line, sizeof(line), "10 %.6f %.6f\n", m.hit10, m.ndcg10);
  os << line;
  std::snprintf(line, sizeof(line), "20 %.6f %.6f\n", m.hit20, m.ndcg20);
  os << line;
  return os.str();
}

}  // namespace sessrec
