// Command-line front end: preprocess | synth | train | eval | predict |
// ablate. Every subcommand is deterministic for a fixed --seed. Exit codes:
// 0 ok, 2 usage/config, 3 data, 4 numeric failure, 1 anything else.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sessrec/checkpoint.hpp"
#include "sessrec/dataio.hpp"
#include "sessrec/errors.hpp"
#include "sessrec/eval.hpp"
#include "sessrec/graph.hpp"
#include "sessrec/model.hpp"
#include "sessrec/rng.hpp"
#include "sessrec/synth.hpp"
#include "sessrec/train.hpp"

using namespace sessrec;

namespace {

struct ModelFlags {
  ModelConfig cfg;
  bool unidirectional = false;

  void attach(CLI::App* sub) {
    sub->add_option("--dim", cfg.embedding_dim, "embedding width");
    sub->add_option("--interests", cfg.interest_count, "interest node count");
    sub->add_option("--layers", cfg.layer_count, "relation layer count");
    sub->add_option("--max-step", cfg.max_step,
                    "largest interval bucket index");
    sub->add_option("--bucket-width", cfg.bucket_width,
                    "seconds per interval bucket");
    sub->add_flag("--unidirectional", unidirectional,
                  "drop the reversed transition edges");
    sub->add_flag("--no-v2v-time", cfg.disable_vv_time,
                  "item-item attention from a learned constant");
    sub->add_flag("--no-u2v-time", cfg.disable_uv_time,
                  "drop the temporal term when attaching interests");
    sub->add_flag("--no-last-time", cfg.disable_last_time,
                  "readout without the time-to-end embedding");
    sub->add_flag("--first-time", cfg.use_first_time,
                  "readout clocks run from the session start");
    sub->add_flag("--single-interest", cfg.single_interest,
                  "replace interest nodes with one learned query");
  }

  ModelConfig resolve() const {
    ModelConfig out = cfg;
    out.bidirectional_edges = !unidirectional;
    if (out.single_interest) out.interest_count = 1;
    out.validate();
    return out;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  bool validate_during = false;

  void attach(CLI::App* sub) {
    sub->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    sub->add_option("--decay", cfg.lr_decay,
                    "multiplicative decay applied every decay step");
    sub->add_option("--decay-step", cfg.decay_step, "epochs between decays");
    sub->add_option("--batch", cfg.batch_size, "mini-batch size");
    sub->add_option("--epochs", cfg.epochs, "training epochs");
    sub->add_option("--lambda", cfg.lambda,
                    "interest-independence penalty weight");
    sub->add_option("--patience", cfg.patience,
                    "early-stop patience on validation hit@20; 0 disables");
    sub->add_option("--seed", cfg.seed, "shuffle and init seed");
    sub->add_flag("--validate", validate_during,
                  "score the test split after every epoch");
    sub->add_option("--grid-lr", cfg.grid_learning_rates,
                    "learning rates to sweep")
        ->delimiter(',');
    sub->add_option("--grid-decay", cfg.grid_decays, "decays to sweep")
        ->delimiter(',');
    sub->add_option("--grid-decay-step", cfg.grid_decay_steps,
                    "decay steps to sweep")
        ->delimiter(',');
    sub->add_option("--grid-lambda", cfg.grid_lambdas,
                    "penalty weights to sweep")
        ->delimiter(',');
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out.good()) throw IoError("cannot write " + path);
  return out;
}

// CLI11 only reads config files registered on the root parser, so a
// subcommand's --config is applied by hand: flat key=value lines, '#'
// comments, command-line flags win over file values.
void apply_config_file(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in.good()) throw IoError("cannot read config file " + path);
  auto trim = [](const std::string& s) {
    const char* ws = " \t\r";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    return s.substr(a, s.find_last_not_of(ws) - a + 1);
  };
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key=value, got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (key == "config")
      throw ConfigError(where + ": config files do not nest");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw ConfigError(where + ": unknown option '" + key + "' for " +
                        sub->get_name());
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void require_value(const std::string& value, const char* flag) {
  if (value.empty())
    throw ConfigError(std::string(flag) +
                      " is required (flag or config file)");
}

// -------------------------------------------------------------- preprocess

struct PreprocessCmd {
  std::string config, input, output;
  PreprocessOptions opt;

  void run() const {
    require_value(input, "--input");
    require_value(output, "--output");
    auto sessions = parse_sessions_file(input);
    DatasetSplit split = preprocess(std::move(sessions), opt);
    save_dataset(split, output);
    std::printf("wrote %s: %zu train / %zu test examples over %lld items\n",
                output.c_str(), split.train.size(), split.test.size(),
                static_cast<long long>(split.item_count));
  }
};

// ------------------------------------------------------------------- synth

struct SynthCmd {
  std::string config, output, labels;
  int64_t pools = 2, pool_size = 20;
  bool interleaved = false;
  std::string target_rule = "latest";
  SynthConfig cfg;

  void run() {
    require_value(output, "--output");
    cfg.interest_pools = make_disjoint_pools(pools, pool_size);
    cfg.chunked = !interleaved;
    cfg.target_rule = target_rule == "uniform"
                          ? SynthConfig::TargetRule::Uniform
                          : SynthConfig::TargetRule::LatestInterest;
    SynthResult result = generate(cfg);
    save_dataset(result.split, output);
    const std::string label_path =
        labels.empty() ? output + ".labels" : labels;
    save_labels(result, label_path);
    std::printf(
        "wrote %s (+%s): %zu train / %zu test sessions, %lld items\n",
        output.c_str(), label_path.c_str(), result.split.train.size(),
        result.split.test.size(),
        static_cast<long long>(result.split.item_count));
  }
};

// ------------------------------------------------------------------- train

struct TrainCmd {
  std::string config, data, checkpoint, log_path;
  ModelFlags model_flags;
  TrainFlags train_flags;

  TrainResult train_once(const DatasetSplit& split, const TrainConfig& tc,
                         Model& model, std::ostream* log) const {
    const std::vector<Example>* validation =
        train_flags.validate_during ? &split.test : nullptr;
    return train_epochs(model, split.train, tc, validation, log);
  }

  void run() const {
    require_value(data, "--data");
    require_value(checkpoint, "--checkpoint");
    DatasetSplit split = load_dataset(data);
    ModelConfig mc = model_flags.resolve();
    TrainConfig tc = train_flags.cfg;
    tc.validate();

    const bool sweeping = !tc.grid_learning_rates.empty() ||
                          !tc.grid_decays.empty() ||
                          !tc.grid_decay_steps.empty() ||
                          !tc.grid_lambdas.empty();
    if (sweeping) {
      if (!train_flags.validate_during)
        throw ConfigError("grid sweep needs --validate to rank combinations");
      auto axis = [](std::vector<double> grid, double fixed) {
        return grid.empty() ? std::vector<double>{fixed} : grid;
      };
      std::vector<int64_t> steps = tc.grid_decay_steps.empty()
                                       ? std::vector<int64_t>{tc.decay_step}
                                       : tc.grid_decay_steps;
      double best_metric = -1.0;
      TrainConfig best = tc;
      for (double lr : axis(tc.grid_learning_rates, tc.learning_rate))
        for (double decay : axis(tc.grid_decays, tc.lr_decay))
          for (int64_t step : steps)
            for (double lambda : axis(tc.grid_lambdas, tc.lambda)) {
              TrainConfig combo = tc;
              combo.learning_rate = lr;
              combo.lr_decay = decay;
              combo.decay_step = step;
              combo.lambda = lambda;
              Rng rng(combo.seed);
              Model candidate(mc, split.item_count, rng);
              TrainResult r = train_once(split, combo, candidate, nullptr);
              const double metric =
                  r.diverged || r.epochs.empty() || !r.epochs.back().has_metrics
                      ? -1.0
                      : r.epochs.back().metrics.hit20;
              std::printf(
                  "grid lr=%g decay=%g decay-step=%lld lambda=%g hit20=%.6f%s\n",
                  lr, decay, static_cast<long long>(step), lambda, metric,
                  r.diverged ? " (diverged)" : "");
              if (metric > best_metric) {
                best_metric = metric;
                best = combo;
              }
            }
      if (best_metric < 0)
        throw NumericError("every grid combination diverged");
      std::printf("grid winner: lr=%g decay=%g decay-step=%lld lambda=%g\n",
                  best.learning_rate, best.lr_decay,
                  static_cast<long long>(best.decay_step), best.lambda);
      tc = best;
    }

    Rng rng(tc.seed);
    Model model(mc, split.item_count, rng);
    TrainResult result;
    if (log_path.empty()) {
      result = train_once(split, tc, model, &std::cout);
    } else {
      std::ofstream log = open_out(log_path);
      result = train_once(split, tc, model, &log);
    }
    save_checkpoint(model, checkpoint);
    if (result.diverged)
      throw NumericError(
          "training diverged; checkpoint holds the last finite epoch");
    if (!result.epochs.empty())
      std::printf("saved %s after %zu epochs, final loss %.17g\n",
                  checkpoint.c_str(), result.epochs.size(),
                  result.epochs.back().mean_loss);
  }
};

// -------------------------------------------------------------------- eval

struct EvalCmd {
  std::string config, data, checkpoint, output;
  bool popularity = false;

  void run() const {
    require_value(data, "--data");
    DatasetSplit split = load_dataset(data);
    Metrics m;
    if (popularity) {
      if (!checkpoint.empty())
        throw ConfigError("pass either --checkpoint or --popularity");
      m = evaluate_popularity(split.train, split.test, split.item_count);
    } else {
      if (checkpoint.empty())
        throw ConfigError("eval needs --checkpoint or --popularity");
      Model model = load_checkpoint(checkpoint);
      if (model.item_count() != split.item_count)
        throw VocabularyError(
            "checkpoint covers " + std::to_string(model.item_count()) +
            " items but the dataset has " +
            std::to_string(split.item_count));
      m = evaluate_model(model, split.test);
    }
    const std::string report = format_metrics_report(m);
    if (output.empty()) {
      std::fputs(report.c_str(), stdout);
    } else {
      open_out(output) << report;
      std::printf("wrote %s\n", output.c_str());
    }
  }
};

// ----------------------------------------------------------------- predict

struct PredictCmd {
  std::string config, checkpoint, data, session_file;
  std::vector<std::string> items;
  std::vector<int64_t> times;
  int64_t topk = 10;
  bool dump = false;

  SessionRecord resolve_session(const DatasetSplit* split,
                                int64_t item_count) const {
    std::vector<std::string> names = items;
    std::vector<int64_t> stamps = times;
    std::string id = "cli";
    if (!session_file.empty()) {
      if (!names.empty() || !stamps.empty())
        throw ConfigError("pass --session-file or --items/--times, not both");
      auto sessions = parse_sessions_file(session_file);
      if (sessions.size() != 1)
        throw ParseError(session_file + " holds " +
                         std::to_string(sessions.size()) +
                         " sessions, expected exactly one");
      names = sessions[0].items;
      stamps = sessions[0].timestamps;
      id = sessions[0].session_id;
    }
    if (names.empty()) throw ConfigError("no session given");
    if (names.size() != stamps.size())
      throw ConfigError("got " + std::to_string(names.size()) +
                        " items but " + std::to_string(stamps.size()) +
                        " timestamps");
    SessionRecord s;
    s.session_id = id;
    s.timestamps = stamps;
    for (const std::string& name : names) {
      int64_t index = -1;
      if (split) {
        auto it = split->vocab.find(name);
        if (it == split->vocab.end())
          throw VocabularyError("item '" + name +
                                "' is not in the dataset vocabulary");
        index = it->second;
      } else {
        try {
          size_t used = 0;
          index = std::stoll(name, &used);
          if (used != name.size()) throw std::invalid_argument(name);
        } catch (const std::exception&) {
          throw ConfigError("item '" + name +
                            "' is not an index; pass --data for name lookup");
        }
      }
      if (index < 0 || index >= item_count)
        throw VocabularyError("item index " + std::to_string(index) +
                              " outside the checkpoint vocabulary of " +
                              std::to_string(item_count));
      s.items.push_back(index);
    }
    return s;
  }

  void run() const {
    require_value(checkpoint, "--checkpoint");
    Model model = load_checkpoint(checkpoint);
    DatasetSplit split;
    const bool with_names = !data.empty();
    if (with_names) {
      split = load_dataset(data);
      if (split.item_count != model.item_count())
        throw VocabularyError("dataset vocabulary size " +
                              std::to_string(split.item_count) +
                              " does not match the checkpoint's " +
                              std::to_string(model.item_count()));
    }
    SessionRecord session = resolve_session(with_names ? &split : nullptr,
                                            model.item_count());
    const ModelConfig& mc = model.config();
    MultiInterestGraph g =
        build_graph(session, mc.interest_count, mc.bucket_width,
                    mc.bidirectional_edges, mc.max_step);
    if (dump) std::fputs(dump_graph(g).c_str(), stdout);

    Tape tape(false);
    ForwardTrace trace = model.forward(tape, g);
    const std::vector<Real>& scores = trace.scores.values();
    std::vector<int64_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int64_t a, int64_t b) {
                       return scores[static_cast<size_t>(a)] >
                              scores[static_cast<size_t>(b)];
                     });
    const int64_t k =
        std::min<int64_t>(topk, static_cast<int64_t>(scores.size()));
    auto label = [&](int64_t index) {
      return with_names ? split.item_names[static_cast<size_t>(index)]
                        : std::to_string(index);
    };
    for (int64_t r = 0; r < k; ++r)
      std::printf("%lld %s %.6f\n", static_cast<long long>(r + 1),
                  label(order[static_cast<size_t>(r)]).c_str(),
                  static_cast<double>(
                      scores[static_cast<size_t>(order[static_cast<size_t>(r)])]));

    const Tensor& alpha = trace.layers.back().alpha;
    if (alpha.defined()) {
      std::printf("assignment weights\n");
      std::printf("interest");
      for (int64_t node : g.item_nodes)
        std::printf(" %s", label(node).c_str());
      std::printf("\n");
      for (int64_t h = 0; h < alpha.rows(); ++h) {
        std::printf("u%lld", static_cast<long long>(h));
        for (int64_t j = 0; j < alpha.cols(); ++j)
          std::printf(" %.4f", static_cast<double>(alpha.at(h, j)));
        std::printf("\n");
      }
    } else {
      std::printf("single-interest model: no assignment weights\n");
    }
  }
};

// ------------------------------------------------------------------ ablate

struct AblateCmd {
  std::string config, data, output;
  ModelFlags model_flags;
  TrainFlags train_flags;

  void run() const {
    require_value(data, "--data");
    DatasetSplit split = load_dataset(data);
    ModelConfig base = model_flags.resolve();
    TrainConfig tc = train_flags.cfg;
    tc.validate();

    struct Variant {
      const char* name;
      ModelConfig cfg;
      double lambda;
    };
    auto with = [&](auto edit) {
      ModelConfig cfg = base;
      edit(cfg);
      return cfg;
    };
    const std::vector<Variant> variants = {
        {"full", base, tc.lambda},
        {"-V2V", with([](ModelConfig& c) { c.disable_vv_time = true; }),
         tc.lambda},
        {"-U2V", with([](ModelConfig& c) { c.disable_uv_time = true; }),
         tc.lambda},
        {"-Last", with([](ModelConfig& c) { c.disable_last_time = true; }),
         tc.lambda},
        {"First", with([](ModelConfig& c) { c.use_first_time = true; }),
         tc.lambda},
        {"-Interest", with([](ModelConfig& c) {
           c.single_interest = true;
           c.interest_count = 1;
         }),
         tc.lambda},
        {"-Loss", base, 0.0},
    };

    std::ostringstream table;
    table << "variant hit10 ndcg10 hit20 ndcg20\n";
    for (const Variant& v : variants) {
      TrainConfig run_cfg = tc;
      run_cfg.lambda = v.lambda;
      Rng rng(run_cfg.seed);
      Model model(v.cfg, split.item_count, rng);
      TrainResult r = train_epochs(model, split.train, run_cfg, nullptr,
                                   nullptr);
      Metrics m = evaluate_model(model, split.test);
      char line[160];
      std::snprintf(line, sizeof(line), "%s %.6f %.6f %.6f %.6f%s\n", v.name,
                    m.hit10, m.ndcg10, m.hit20, m.ndcg20,
                    r.diverged ? " (diverged)" : "");
      table << line;
      std::fputs(line, stdout);
      std::fflush(stdout);
    }
    if (!output.empty()) {
      open_out(output) << table.str();
      std::printf("wrote %s\n", output.c_str());
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"session-graph recommender toolkit"};
  app.require_subcommand(1);

  PreprocessCmd preprocess_cmd;
  auto* pre = app.add_subcommand(
      "preprocess", "turn a raw click log into a dataset file");
  pre->add_option("--config", preprocess_cmd.config,
                  "key=value defaults; explicit flags win");
  pre->add_option("--input", preprocess_cmd.input, "raw TSV/CSV log");
  pre->add_option("--output", preprocess_cmd.output, "dataset file to write");
  pre->add_option("--min-len", preprocess_cmd.opt.min_session_len,
                  "drop sessions shorter than this");
  pre->add_option("--min-freq", preprocess_cmd.opt.min_item_freq,
                  "drop items rarer than this");
  pre->add_option("--gap-split", preprocess_cmd.opt.gap_split_seconds,
                  "split sessions at pauses over this many seconds");
  pre->add_option("--test-frac", preprocess_cmd.opt.test_fraction,
                  "chronological test fraction");
  pre->callback([&]() {
    apply_config_file(pre, preprocess_cmd.config);
    preprocess_cmd.run();
  });

  SynthCmd synth_cmd;
  auto* syn = app.add_subcommand(
      "synth", "generate a pool-structured synthetic dataset");
  syn->add_option("--config", synth_cmd.config,
                  "key=value defaults; explicit flags win");
  syn->add_option("--output", synth_cmd.output, "dataset file to write");
  syn->add_option("--labels", synth_cmd.labels,
                  "pool label sidecar (default: <output>.labels)");
  syn->add_option("--pools", synth_cmd.pools, "interest pool count");
  syn->add_option("--pool-size", synth_cmd.pool_size, "items per pool");
  syn->add_option("--sessions", synth_cmd.cfg.sessions, "sessions to draw");
  syn->add_option("--items-lo", synth_cmd.cfg.items_lo,
                  "fewest items drawn per pool");
  syn->add_option("--items-hi", synth_cmd.cfg.items_hi,
                  "most items drawn per pool");
  syn->add_option("--intra-lo", synth_cmd.cfg.intra_gap_lo,
                  "tight gap lower bound, seconds");
  syn->add_option("--intra-hi", synth_cmd.cfg.intra_gap_hi,
                  "tight gap upper bound, seconds");
  syn->add_option("--inter-lo", synth_cmd.cfg.inter_gap_lo,
                  "loose gap lower bound, seconds");
  syn->add_option("--inter-hi", synth_cmd.cfg.inter_gap_hi,
                  "loose gap upper bound, seconds");
  syn->add_flag("--interleaved", synth_cmd.interleaved,
                "alternate the two pools instead of two blocks");
  syn->add_option("--target-rule", synth_cmd.target_rule,
                  "latest | uniform")
      ->check(CLI::IsMember({"latest", "uniform"}));
  syn->add_option("--seed", synth_cmd.cfg.seed, "generator seed");
  syn->add_option("--test-frac", synth_cmd.cfg.test_fraction,
                  "fraction of sessions held out");
  syn->callback([&]() {
    apply_config_file(syn, synth_cmd.config);
    synth_cmd.run();
  });

  TrainCmd train_cmd;
  auto* tr = app.add_subcommand("train", "fit a model on a dataset file");
  tr->add_option("--config", train_cmd.config,
                 "key=value defaults; explicit flags win");
  tr->add_option("--data", train_cmd.data, "dataset file");
  tr->add_option("--checkpoint", train_cmd.checkpoint,
                 "model file to write");
  tr->add_option("--log", train_cmd.log_path,
                 "epoch log file (default: stdout)");
  train_cmd.model_flags.attach(tr);
  train_cmd.train_flags.attach(tr);
  tr->callback([&]() {
    apply_config_file(tr, train_cmd.config);
    train_cmd.run();
  });

  EvalCmd eval_cmd;
  auto* ev = app.add_subcommand("eval", "score a checkpoint on a dataset");
  ev->add_option("--config", eval_cmd.config,
                 "key=value defaults; explicit flags win");
  ev->add_option("--data", eval_cmd.data, "dataset file");
  ev->add_option("--checkpoint", eval_cmd.checkpoint, "model file");
  ev->add_flag("--popularity", eval_cmd.popularity,
               "score the popularity baseline instead of a model");
  ev->add_option("--output", eval_cmd.output,
                 "report file (default: stdout)");
  ev->callback([&]() {
    apply_config_file(ev, eval_cmd.config);
    eval_cmd.run();
  });

  PredictCmd predict_cmd;
  auto* pr = app.add_subcommand(
      "predict", "rank the next items for one session");
  pr->add_option("--config", predict_cmd.config,
                 "key=value defaults; explicit flags win");
  pr->add_option("--checkpoint", predict_cmd.checkpoint, "model file");
  pr->add_option("--data", predict_cmd.data,
                 "dataset file for item-name lookup");
  pr->add_option("--items", predict_cmd.items,
                 "comma-separated session items")
      ->delimiter(',');
  pr->add_option("--times", predict_cmd.times,
                 "comma-separated timestamps, one per item")
      ->delimiter(',');
  pr->add_option("--session-file", predict_cmd.session_file,
                 "raw log holding exactly one session");
  pr->add_option("--topk", predict_cmd.topk, "ranked items to print");
  pr->add_flag("--dump-graph", predict_cmd.dump,
               "print the session graph before predicting");
  pr->callback([&]() {
    apply_config_file(pr, predict_cmd.config);
    predict_cmd.run();
  });

  AblateCmd ablate_cmd;
  auto* ab = app.add_subcommand(
      "ablate", "train every architecture switch and compare");
  ab->add_option("--config", ablate_cmd.config,
                 "key=value defaults; explicit flags win");
  ab->add_option("--data", ablate_cmd.data, "dataset file");
  ab->add_option("--output", ablate_cmd.output,
                 "table file (default: stdout only)");
  ablate_cmd.model_flags.attach(ab);
  ablate_cmd.train_flags.attach(ab);
  ab->callback([&]() {
    apply_config_file(ab, ablate_cmd.config);
    ablate_cmd.run();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const VocabularyError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const EvalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
