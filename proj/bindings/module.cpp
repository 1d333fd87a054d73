// Python bindings for the session recommender: dataset handling, the
// synthetic generator, model training, evaluation, checkpoints and
// single-session scoring. Autodiff internals stay on the C++ side.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>
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

namespace py = pybind11;
using namespace sessrec;

namespace {

ForwardTrace trace_session(const Model& model,
                           const std::vector<int64_t>& items,
                           const std::vector<int64_t>& times) {
  if (items.empty()) throw ConfigError("session is empty");
  if (items.size() != times.size())
    throw ConfigError("got " + std::to_string(items.size()) + " items but " +
                      std::to_string(times.size()) + " timestamps");
  for (int64_t v : items)
    if (v < 0 || v >= model.item_count())
      throw VocabularyError("item index " + std::to_string(v) +
                            " outside the model vocabulary of " +
                            std::to_string(model.item_count()));
  SessionRecord s;
  s.session_id = "py";
  s.items = items;
  s.timestamps = times;
  const ModelConfig& c = model.config();
  MultiInterestGraph g = build_graph(s, c.interest_count, c.bucket_width,
                                     c.bidirectional_edges, c.max_step);
  Tape tape(false);
  return model.forward(tape, g);
}

}  // namespace

PYBIND11_MODULE(sessrec, m) {
  m.doc() = "session-based recommender over multi-interest session graphs";

  // exception taxonomy; derived registrations come after the base so their
  // translators run first
  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<VocabularyError>(m, "VocabularyError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<EvalError>(m, "EvalError", base);

  // ------------------------------------------------------------- dataio
  py::class_<RawSession>(m, "RawSession")
      .def(py::init<>())
      .def_readwrite("session_id", &RawSession::session_id)
      .def_readwrite("items", &RawSession::items)
      .def_readwrite("timestamps", &RawSession::timestamps);

  py::class_<SessionRecord>(m, "SessionRecord")
      .def(py::init<>())
      .def_readwrite("session_id", &SessionRecord::session_id)
      .def_readwrite("items", &SessionRecord::items)
      .def_readwrite("timestamps", &SessionRecord::timestamps);

  py::class_<Example>(m, "Example")
      .def(py::init<>())
      .def_readwrite("session_id", &Example::session_id)
      .def_readwrite("items", &Example::items)
      .def_readwrite("timestamps", &Example::timestamps)
      .def_readwrite("target", &Example::target);

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def(py::init<>())
      .def_readwrite("train", &DatasetSplit::train)
      .def_readwrite("test", &DatasetSplit::test)
      .def_readwrite("item_count", &DatasetSplit::item_count)
      .def_readwrite("item_names", &DatasetSplit::item_names)
      .def_readwrite("vocab", &DatasetSplit::vocab);

  py::class_<PreprocessOptions>(m, "PreprocessOptions")
      .def(py::init<>())
      .def_readwrite("min_session_len", &PreprocessOptions::min_session_len)
      .def_readwrite("min_item_freq", &PreprocessOptions::min_item_freq)
      .def_readwrite("gap_split_seconds",
                     &PreprocessOptions::gap_split_seconds)
      .def_readwrite("test_fraction", &PreprocessOptions::test_fraction);

  m.def("parse_sessions",
        [](const std::string& text) {
          std::istringstream in(text);
          return parse_sessions(in);
        },
        py::arg("text"),
        "parse a raw click log given as header + delimited rows");
  m.def("parse_sessions_file", &parse_sessions_file, py::arg("path"));
  m.def("gap_split", &gap_split, py::arg("sessions"), py::arg("gap_seconds"));
  m.def("filter_corpus", &filter_corpus, py::arg("sessions"),
        py::arg("min_session_len") = 3, py::arg("min_item_freq") = 5);
  m.def("augment_prefixes", &augment_prefixes, py::arg("session"));
  m.def("bucket_interval", &bucket_interval, py::arg("t_i"), py::arg("t_j"),
        py::arg("bucket_width"), py::arg("max_step"));
  m.def("preprocess", &preprocess, py::arg("sessions"), py::arg("options"));
  m.def("save_dataset", &save_dataset, py::arg("split"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  // -------------------------------------------------------------- synth
  auto synth_cfg =
      py::class_<SynthConfig>(m, "SynthConfig")
          .def(py::init<>())
          .def_readwrite("interest_pools", &SynthConfig::interest_pools)
          .def_readwrite("sessions", &SynthConfig::sessions)
          .def_readwrite("items_lo", &SynthConfig::items_lo)
          .def_readwrite("items_hi", &SynthConfig::items_hi)
          .def_readwrite("intra_gap_lo", &SynthConfig::intra_gap_lo)
          .def_readwrite("intra_gap_hi", &SynthConfig::intra_gap_hi)
          .def_readwrite("inter_gap_lo", &SynthConfig::inter_gap_lo)
          .def_readwrite("inter_gap_hi", &SynthConfig::inter_gap_hi)
          .def_readwrite("chunked", &SynthConfig::chunked)
          .def_readwrite("target_rule", &SynthConfig::target_rule)
          .def_readwrite("seed", &SynthConfig::seed)
          .def_readwrite("test_fraction", &SynthConfig::test_fraction);
  py::enum_<SynthConfig::TargetRule>(synth_cfg, "TargetRule")
      .value("LatestInterest", SynthConfig::TargetRule::LatestInterest)
      .value("Uniform", SynthConfig::TargetRule::Uniform);

  py::class_<SynthResult>(m, "SynthResult")
      .def_readonly("split", &SynthResult::split)
      .def_readonly("item_pool_of", &SynthResult::item_pool_of)
      .def_readonly("session_ids", &SynthResult::session_ids)
      .def_readonly("session_target_pool", &SynthResult::session_target_pool);

  m.def("make_disjoint_pools", &make_disjoint_pools, py::arg("pool_count"),
        py::arg("pool_size"));
  m.def("generate", &generate, py::arg("config"));
  m.def("save_labels", &save_labels, py::arg("result"), py::arg("path"));

  // -------------------------------------------------------------- graph
  py::class_<VvEdge>(m, "VvEdge")
      .def_readonly("src", &VvEdge::src)
      .def_readonly("dst", &VvEdge::dst)
      .def_readonly("bucket", &VvEdge::bucket);

  py::class_<MultiInterestGraph>(m, "MultiInterestGraph")
      .def_readonly("item_nodes", &MultiInterestGraph::item_nodes)
      .def_readonly("interest_count", &MultiInterestGraph::interest_count)
      .def_readonly("relative_steps", &MultiInterestGraph::relative_steps)
      .def_readonly("last_steps", &MultiInterestGraph::last_steps)
      .def_readonly("edges_vv", &MultiInterestGraph::edges_vv)
      .def_readonly("edges_vu", &MultiInterestGraph::edges_vu)
      .def_readonly("edges_uv", &MultiInterestGraph::edges_uv)
      .def("node_count", &MultiInterestGraph::node_count);

  m.def("build_graph", &build_graph, py::arg("session"),
        py::arg("interest_count"), py::arg("bucket_width"),
        py::arg("bidirectional"), py::arg("max_step"));
  m.def("dump_graph", &dump_graph, py::arg("graph"));

  // -------------------------------------------------------------- model
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("embedding_dim", &ModelConfig::embedding_dim)
      .def_readwrite("interest_count", &ModelConfig::interest_count)
      .def_readwrite("layer_count", &ModelConfig::layer_count)
      .def_readwrite("max_step", &ModelConfig::max_step)
      .def_readwrite("bucket_width", &ModelConfig::bucket_width)
      .def_readwrite("bidirectional_edges", &ModelConfig::bidirectional_edges)
      .def_readwrite("leaky_slope", &ModelConfig::leaky_slope)
      .def_readwrite("compactness_floor", &ModelConfig::compactness_floor)
      .def_readwrite("disable_vv_time", &ModelConfig::disable_vv_time)
      .def_readwrite("disable_uv_time", &ModelConfig::disable_uv_time)
      .def_readwrite("disable_last_time", &ModelConfig::disable_last_time)
      .def_readwrite("use_first_time", &ModelConfig::use_first_time)
      .def_readwrite("single_interest", &ModelConfig::single_interest)
      .def("validate", &ModelConfig::validate);

  py::class_<Model>(m, "Model")
      .def(py::init([](const ModelConfig& cfg, int64_t item_count,
                       uint64_t seed) {
             Rng rng(seed);
             return Model(cfg, item_count, rng);
           }),
           py::arg("config"), py::arg("item_count"), py::arg("seed") = 7)
      .def_property_readonly("config",
                             [](const Model& m_) { return m_.config(); })
      .def_property_readonly("item_count",
                             [](const Model& m_) { return m_.item_count(); })
      .def("score_session",
           [](const Model& m_, const std::vector<int64_t>& items,
              const std::vector<int64_t>& times) {
             return trace_session(m_, items, times).scores.values();
           },
           py::arg("items"), py::arg("timestamps"),
           "next-item scores for one session, index order")
      .def("assignment_weights",
           [](const Model& m_, const std::vector<int64_t>& items,
              const std::vector<int64_t>& times) {
             ForwardTrace t = trace_session(m_, items, times);
             const Tensor& alpha = t.layers.back().alpha;
             std::vector<std::vector<Real>> rows;
             if (!alpha.defined()) return rows;
             for (int64_t h = 0; h < alpha.rows(); ++h) {
               std::vector<Real> row;
               for (int64_t j = 0; j < alpha.cols(); ++j)
                 row.push_back(alpha.at(h, j));
               rows.push_back(std::move(row));
             }
             return rows;
           },
           py::arg("items"), py::arg("timestamps"),
           "per-interest item assignment from the final layer; empty for "
           "single-interest models")
      .def("save", &save_checkpoint, py::arg("path"));

  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  // -------------------------------------------------------------- train
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("lr_decay", &TrainConfig::lr_decay)
      .def_readwrite("decay_step", &TrainConfig::decay_step)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("grid_learning_rates", &TrainConfig::grid_learning_rates)
      .def_readwrite("grid_decays", &TrainConfig::grid_decays)
      .def_readwrite("grid_decay_steps", &TrainConfig::grid_decay_steps)
      .def_readwrite("grid_lambdas", &TrainConfig::grid_lambdas)
      .def("validate", &TrainConfig::validate);

  py::class_<Metrics>(m, "Metrics")
      .def(py::init<>())
      .def_readwrite("examples", &Metrics::examples)
      .def_readwrite("hit10", &Metrics::hit10)
      .def_readwrite("ndcg10", &Metrics::ndcg10)
      .def_readwrite("hit20", &Metrics::hit20)
      .def_readwrite("ndcg20", &Metrics::ndcg20)
      .def("__repr__", [](const Metrics& mt) {
        std::ostringstream os;
        os << "<Metrics examples=" << mt.examples << " hit10=" << mt.hit10
           << " ndcg10=" << mt.ndcg10 << " hit20=" << mt.hit20
           << " ndcg20=" << mt.ndcg20 << ">";
        return os.str();
      });

  py::class_<EpochStats>(m, "EpochStats")
      .def_readonly("epoch", &EpochStats::epoch)
      .def_readonly("mean_loss", &EpochStats::mean_loss)
      .def_readonly("learning_rate", &EpochStats::learning_rate)
      .def_readonly("has_metrics", &EpochStats::has_metrics)
      .def_readonly("metrics", &EpochStats::metrics);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("epochs", &TrainResult::epochs)
      .def_readonly("diverged", &TrainResult::diverged);

  m.def("train_epochs",
        [](Model& model, const std::vector<Example>& train,
           const TrainConfig& cfg,
           std::optional<std::vector<Example>> validation,
           const std::string& log_path) {
          std::ofstream log_file;
          std::ostream* log = nullptr;
          if (!log_path.empty()) {
            log_file.open(log_path);
            if (!log_file.good()) throw IoError("cannot write " + log_path);
            log = &log_file;
          }
          const std::vector<Example>* val =
              validation ? &*validation : nullptr;
          return train_epochs(model, train, cfg, val, log);
        },
        py::arg("model"), py::arg("train"), py::arg("config"),
        py::arg("validation") = py::none(),
        py::arg("log_path") = std::string(),
        "shuffled mini-batch training; returns per-epoch loss and optional "
        "validation metrics");

  // --------------------------------------------------------------- eval
  m.def("rank_of_target", &rank_of_target, py::arg("scores"),
        py::arg("target"));
  m.def("hit_at_k", &hit_at_k, py::arg("ranks"), py::arg("k"));
  m.def("ndcg_at_k", &ndcg_at_k, py::arg("ranks"), py::arg("k"));
  m.def("metrics_from_ranks", &metrics_from_ranks, py::arg("ranks"));
  m.def("model_ranks", &model_ranks, py::arg("model"), py::arg("examples"));
  m.def("evaluate_model", &evaluate_model, py::arg("model"),
        py::arg("examples"));
  m.def("popularity_scores", &popularity_scores, py::arg("train"),
        py::arg("item_count"));
  m.def("evaluate_popularity", &evaluate_popularity, py::arg("train"),
        py::arg("test"), py::arg("item_count"));
  m.def("format_metrics_report", &format_metrics_report, py::arg("metrics"));
}
