#include "sessrec/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace sessrec {

void TrainConfig::validate() const {
  if (learning_rate <= 0 || lr_decay <= 0)
    throw ConfigError("train config: learning rate and decay must be positive");
  if (decay_step < 1 || batch_size < 1 || epochs < 1)
    throw ConfigError(
        "train config: decay step, batch size and epochs must be positive");
  if (lambda < 0)
    throw ConfigError("train config: lambda must be nonnegative");
  if (patience < 0)
    throw ConfigError("train config: patience must be nonnegative");
  auto check_set = [](const std::vector<double>& got,
                      std::initializer_list<double> allowed,
                      const char* what) {
    for (double g : got) {
      bool ok = false;
      for (double a : allowed)
        if (g == a) ok = true;
      if (!ok)
        throw ConfigError(std::string("train config: ") + what + " " +
                          std::to_string(g) + " is outside the sweep set");
    }
  };
  check_set(grid_learning_rates, {0.001, 0.01, 0.1}, "grid learning rate");
  check_set(grid_decays, {0.01, 0.05, 0.1, 0.5}, "grid decay");
  check_set(grid_lambdas, {1.0, 3.0, 10.0, 30.0}, "grid lambda");
  for (int64_t s : grid_decay_steps)
    if (s != 2 && s != 3 && s != 4)
      throw ConfigError("train config: grid decay step " + std::to_string(s) +
                        " is outside the sweep set");
}

Tensor corr_loss(Tape& tape, const Tensor& interests) {
  if (interests.shape().size() != 2)
    throw DimensionError("corr_loss: expected [H, d] interests, got " +
                         shape_str(interests.shape()));
  const int64_t h = interests.rows();
  if (h == 1) return Tensor::scalar_value(0);
  Tensor unit = l2_normalize_rows(tape, interests, Real(1e-12));
  Tensor gram = matmul(tape, unit, transpose(tape, unit));
  Tensor upper = Tensor::zeros({h, h});
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = i + 1; j < h; ++j)
      upper.values_mut()[static_cast<size_t>(i * h + j)] = Real(1);
  return sum(tape, mul(tape, gram, upper));
}

Tensor total_loss(Tape& tape, const Tensor& scores, int64_t target,
                  const Tensor& corr, double lambda) {
  if (scores.shape().size() != 1)
    throw DimensionError("total_loss: expected a flat score vector, got " +
                         shape_str(scores.shape()));
  if (target < 0 || target >= scores.size())
    throw IndexError("total_loss: target " + std::to_string(target) +
                     " outside vocabulary of " + std::to_string(scores.size()));
  for (Real s : scores.values())
    if (std::isnan(static_cast<double>(s)))
      throw NumericError("total_loss: score vector contains NaN");

  const Real eps = Real(1e-8);
  Tensor log_hit = log_guard(tape, scores, eps);
  Tensor log_miss =
      log_guard(tape, affine(tape, scores, Real(-1), Real(1)), eps);
  const std::vector<int64_t> at_target = {target};
  Tensor hit_term = gather(tape, log_hit, at_target);
  Tensor miss_sum = sum(tape, log_miss);
  Tensor miss_at_target = gather(tape, log_miss, at_target);
  Tensor ce = affine(
      tape,
      add(tape, hit_term, sub(tape, miss_sum, miss_at_target)),
      Real(-1), Real(0));
  if (lambda == 0.0) return ce;
  return add(tape, ce,
             affine(tape, corr, static_cast<Real>(lambda), Real(0)));
}

Adam::Adam(double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<Tensor>& params, double lr, double grad_scale) {
  if (first_.empty()) {
    for (Tensor& p : params) {
      first_.emplace_back(p.values().size(), 0.0);
      second_.emplace_back(p.values().size(), 0.0);
    }
  }
  if (first_.size() != params.size())
    throw ContractError("optimizer state does not match the parameter list");
  ++steps_;
  const double correct1 =
      1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double correct2 =
      1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    std::vector<double>& m = first_[i];
    std::vector<double>& v = second_[i];
    if (m.size() != p.values().size())
      throw ContractError("optimizer state does not match parameter " +
                          std::to_string(i));
    const std::vector<Real>& g = p.grad();
    std::vector<Real>& value = p.values_mut();
    for (size_t j = 0; j < value.size(); ++j) {
      const double gj = static_cast<double>(g[j]) * grad_scale;
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      value[j] -= static_cast<Real>(
          lr * (m[j] / correct1) / (std::sqrt(v[j] / correct2) + eps_));
    }
  }
}

namespace {

void write_epoch_line(std::ostream& log, const EpochStats& stats) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "epoch %lld loss %.17g lr %.17g",
                static_cast<long long>(stats.epoch), stats.mean_loss,
                stats.learning_rate);
  log << buf;
  if (stats.has_metrics) {
    std::snprintf(buf, sizeof(buf),
                  " hit10 %.6f ndcg10 %.6f hit20 %.6f ndcg20 %.6f",
                  stats.metrics.hit10, stats.metrics.ndcg10,
                  stats.metrics.hit20, stats.metrics.ndcg20);
    log << buf;
  }
  log << "\n";
}

}  // namespace

TrainResult train_epochs(Model& model, const std::vector<Example>& train,
                         const TrainConfig& cfg,
                         const std::vector<Example>* validation,
                         std::ostream* log) {
  cfg.validate();
  if (train.empty())
    throw ContractError("train_epochs: empty training split");
  const ModelConfig& mc = model.config();
  std::vector<Tensor> params = model.parameters();
  Adam optimizer;
  Rng shuffle_rng(Rng::derive(cfg.seed, 1));
  double lr = cfg.learning_rate;

  // graphs are pure functions of the examples; build once
  std::vector<MultiInterestGraph> graphs;
  graphs.reserve(train.size());
  for (const Example& e : train) {
    SessionRecord session{e.session_id, e.items, e.timestamps};
    graphs.push_back(build_graph(session, mc.interest_count, mc.bucket_width,
                                 mc.bidirectional_edges, mc.max_step));
  }

  TrainResult result;
  std::vector<std::vector<Real>> last_good = model.snapshot_values();
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_validation = -1.0;
  int64_t epochs_since_best = 0;

  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0;
    bool blew_up = false;
    for (size_t start = 0; start < order.size() && !blew_up;
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      model.zero_grads();
      for (size_t pos = start; pos < stop; ++pos) {
        const Example& ex = train[order[pos]];
        try {
          Tape tape;
          ForwardTrace trace = model.forward(tape, graphs[order[pos]]);
          Tensor corr = cfg.lambda == 0.0
                            ? Tensor::scalar_value(0)
                            : corr_loss(tape, trace.final_interests);
          Tensor loss =
              total_loss(tape, trace.scores, ex.target, corr, cfg.lambda);
          const double value = static_cast<double>(loss.at(0));
          if (!std::isfinite(value))
            throw NumericError("loss is not finite");
          tape.backward(loss);
          loss_sum += value;
        } catch (const NumericError&) {
          blew_up = true;
          break;
        }
      }
      if (blew_up) break;
      optimizer.step(params, lr, 1.0 / static_cast<double>(stop - start));
    }
    if (blew_up) {
      model.restore_values(last_good);
      result.diverged = true;
      if (log)
        *log << "epoch " << epoch
             << " diverged; parameters restored to the last finite epoch\n";
      break;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(train.size());
    stats.learning_rate = lr;
    if (validation && !validation->empty()) {
      stats.has_metrics = true;
      stats.metrics = evaluate_model(model, *validation);
    }
    result.epochs.push_back(stats);
    if (log) write_epoch_line(*log, stats);
    last_good = model.snapshot_values();

    if (epoch % cfg.decay_step == 0) lr *= cfg.lr_decay;
    if (cfg.patience > 0 && stats.has_metrics) {
      if (stats.metrics.hit20 > best_validation) {
        best_validation = stats.metrics.hit20;
        epochs_since_best = 0;
      } else if (++epochs_since_best >= cfg.patience) {
        if (log) *log << "early stop after epoch " << epoch << "\n";
        break;
      }
    }
  }
  return result;
}

}  // namespace sessrec
