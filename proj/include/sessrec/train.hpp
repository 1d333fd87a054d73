#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sessrec/eval.hpp"
#include "sessrec/model.hpp"

namespace sessrec {

struct TrainConfig {
  double learning_rate = 0.001;
  double lr_decay = 0.1;    // multiplied into the rate every decay_step epochs
  int64_t decay_step = 3;
  int64_t batch_size = 512;
  int64_t epochs = 10;
  double lambda = 0.0;  // interest-independence coefficient
  uint64_t seed = 7;
  int64_t patience = 0;  // early stop on validation hit@20; 0 disables

  // optional sweep values for the grid runner; must stay within the
  // published sweep sets
  std::vector<double> grid_learning_rates;  // subset of {0.001, 0.01, 0.1}
  std::vector<double> grid_decays;          // subset of {0.01, 0.05, 0.1, 0.5}
  std::vector<int64_t> grid_decay_steps;    // subset of {2, 3, 4}
  std::vector<double> grid_lambdas;         // subset of {1, 3, 10, 30}

  void validate() const;
};

// Sum over interest pairs of cosine similarity, Tensor [H,d] -> scalar.
// H=1 yields a constant zero.
Tensor corr_loss(Tape& tape, const Tensor& interests);

// Binary-style cross entropy over the whole score vector plus
// lambda * corr. Scores are clamped by eps=1e-8 inside the logs.
Tensor total_loss(Tape& tape, const Tensor& scores, int64_t target,
                  const Tensor& corr, double lambda);

class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // Applies one update from the accumulated gradients; grad_scale is
  // multiplied into every gradient (1/batch for mean-loss training).
  void step(std::vector<Tensor>& params, double lr, double grad_scale);

 private:
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  int64_t steps_ = 0;
  double beta1_, beta2_, eps_;
};

struct EpochStats {
  int64_t epoch = 0;
  double mean_loss = 0;
  double learning_rate = 0;
  bool has_metrics = false;
  Metrics metrics;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  bool diverged = false;
};

// Shuffled mini-batch training. Writes one line per epoch to log when
// given; the log content is a pure function of the inputs (no wall times).
// On divergence the model is restored to the last finite-loss epoch and
// the result is flagged.
TrainResult train_epochs(Model& model, const std::vector<Example>& train,
                         const TrainConfig& cfg,
                         const std::vector<Example>* validation = nullptr,
                         std::ostream* log = nullptr);

}  // namespace sessrec
