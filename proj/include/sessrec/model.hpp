#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sessrec/graph.hpp"
#include "sessrec/tensor.hpp"

namespace sessrec {

struct ModelConfig {
  int64_t embedding_dim = 128;
  int64_t interest_count = 2;
  int64_t layer_count = 3;
  int64_t max_step = 300;     // temporal table rows = max_step + 1
  int64_t bucket_width = 8;   // seconds per bucket
  bool bidirectional_edges = true;
  Real leaky_slope = Real(0.01);
  Real compactness_floor = Real(1e-3);

  // ablation switches
  bool disable_vv_time = false;   // item-item attention from a learned constant
  bool disable_uv_time = false;   // drop the temporal term in attaching logits
  bool disable_last_time = false; // readout fuse skips the time embedding
  bool use_first_time = false;    // readout uses start offsets instead of end
  bool single_interest = false;   // no interest relations; learned readout query

  void validate() const;
};

struct LayerParams {
  GruParams gru;
  Tensor extract_interest_score;  // [d,1]
  Tensor extract_item_score;      // [d,1]
  Tensor extract_trans;           // [d,d]
  Tensor attach_item;             // [d,d]
  Tensor attach_interest;         // [d,d]
  Tensor attach_time;             // [d,1]
  Tensor attach_time_bias;        // [1]
  Tensor attach_trans;            // [d,d]
};

struct ReadoutParams {
  Tensor gate;          // [2d,1]
  Tensor fuse;          // [2d,d], or [d,d] with disable_last_time
  Tensor fuse_bias;     // [d]
  Tensor att_item;      // [d,d]
  Tensor att_interest;  // [d,d]
  Tensor att_query;     // [d,1]
  Tensor att_bias;      // [d]
  Tensor session;       // [2d,d]
};

struct ModelParams {
  Tensor item_embeddings;  // [V,d]
  Tensor temporal_table;   // [m+1,d]
  // interval MLP shared by every layer's item-item attention
  Tensor interval_hidden;       // [d,d]
  Tensor interval_hidden_bias;  // [d]
  Tensor interval_out;          // [d,1]
  Tensor interval_out_bias;     // [1]
  Tensor vv_uniform_logit;      // [1], only with disable_vv_time
  std::vector<LayerParams> layers;
  ReadoutParams readout;
  Tensor interest_query;  // [d], only with single_interest
};

// Per-interest running state: embedding rows plus detached center /
// compactness scalars in bucket units. The scalars only feed integer
// bucket indices, so they carry no gradient.
struct InterestState {
  Tensor embedding;  // [H,d]
  std::vector<Real> center;
  std::vector<Real> compactness;
};

struct LayerAttention {
  Tensor vv_weights;  // per sorted item-item edge; undefined when no edges
  Tensor alpha;       // [H,N]
  Tensor beta;        // [N,H]
};

struct ForwardTrace {
  Tensor scores;           // [V]
  Tensor session_vectors;  // [H,d]
  Tensor final_items;      // [N,d]
  Tensor gate;             // [N]
  Tensor final_interests;  // [H,d]; the learned query row when single_interest
  Tensor gamma;            // [H,N]
  std::vector<LayerAttention> layers;
  std::vector<std::vector<Real>> center_history;       // index 0 = init
  std::vector<std::vector<Real>> compactness_history;
};

class Model {
 public:
  Model(ModelConfig cfg, int64_t item_count, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  int64_t item_count() const { return item_count_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  // Stage operations are public so tests can pit each one against a
  // naive-loop oracle.
  std::pair<Tensor, InterestState> init_nodes(
      Tape& tape, const MultiInterestGraph& g) const;
  Tensor item_propagation(Tape& tape, const MultiInterestGraph& g,
                          const Tensor& items, int64_t layer,
                          Tensor* weights_out = nullptr) const;
  InterestState interest_extraction(Tape& tape, const MultiInterestGraph& g,
                                    const Tensor& items,
                                    const InterestState& interests,
                                    int64_t layer,
                                    Tensor* alpha_out = nullptr) const;
  Tensor interest_attaching(Tape& tape, const MultiInterestGraph& g,
                            const Tensor& items,
                            const InterestState& interests, int64_t layer,
                            Tensor* beta_out = nullptr) const;
  // Runs init + all layers + the initial/final gate; returns (final item
  // states, interest rows for readout, gate values).
  std::tuple<Tensor, Tensor, Tensor> combine_and_stack(
      Tape& tape, const MultiInterestGraph& g,
      ForwardTrace* trace = nullptr) const;
  Tensor session_readout(Tape& tape, const MultiInterestGraph& g,
                         const Tensor& final_items, const Tensor& interest_rows,
                         Tensor* gamma_out = nullptr) const;
  Tensor predict_scores(Tape& tape, const Tensor& session_vectors) const;

  ForwardTrace forward(Tape& tape, const MultiInterestGraph& g) const;

  void for_each_param(
      const std::function<void(const std::string&, Tensor&)>& fn);
  std::vector<Tensor> parameters();
  void zero_grads();
  std::vector<std::vector<Real>> snapshot_values() const;
  void restore_values(const std::vector<std::vector<Real>>& snapshot);

 private:
  ModelConfig cfg_;
  int64_t item_count_ = 0;
  ModelParams params_;
};

}  // namespace sessrec
