#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sessrec/dataio.hpp"
#include "sessrec/model.hpp"

namespace sessrec {

struct Metrics {
  int64_t examples = 0;
  double hit10 = 0, ndcg10 = 0;
  double hit20 = 0, ndcg20 = 0;
};

// 1-based rank of the target under descending scores; ties go to the lower
// item index.
int64_t rank_of_target(const std::vector<Real>& scores, int64_t target);

// Fraction of examples whose target rank is <= k.
double hit_at_k(const std::vector<int64_t>& ranks, int64_t k);

// Mean of 1/log2(rank+1) over examples, zero past the cutoff.
double ndcg_at_k(const std::vector<int64_t>& ranks, int64_t k);

Metrics metrics_from_ranks(const std::vector<int64_t>& ranks);

// Target ranks for every example under the model's scores.
std::vector<int64_t> model_ranks(const Model& model,
                                 const std::vector<Example>& examples);
Metrics evaluate_model(const Model& model,
                       const std::vector<Example>& examples);

// Items scored by how often they occur as training targets (ties by index).
std::vector<Real> popularity_scores(const std::vector<Example>& train,
                                    int64_t item_count);
Metrics evaluate_popularity(const std::vector<Example>& train,
                            const std::vector<Example>& test,
                            int64_t item_count);

std::string format_metrics_report(const Metrics& m);

}  // namespace sessrec
