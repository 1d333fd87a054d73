#include "sessrec/model.hpp"

#include <algorithm>
#include <cmath>

namespace sessrec {

void ModelConfig::validate() const {
  if (embedding_dim < 1 || interest_count < 1 || layer_count < 1 ||
      max_step < 1 || bucket_width < 1)
    throw ConfigError(
        "model config: embedding_dim, interest_count, layer_count, max_step "
        "and bucket_width must all be positive");
  if (leaky_slope < Real(0))
    throw ConfigError("model config: leaky slope must be nonnegative");
  if (compactness_floor <= Real(0))
    throw ConfigError("model config: compactness floor must be positive");
  if (single_interest && interest_count != 1)
    throw ConfigError(
        "model config: single_interest requires interest_count == 1");
  if (disable_last_time && use_first_time)
    throw ConfigError(
        "model config: use_first_time conflicts with disable_last_time");
}

Model::Model(ModelConfig cfg, int64_t item_count, Rng& rng)
    : cfg_(cfg), item_count_(item_count) {
  cfg_.validate();
  if (item_count_ < 1)
    throw ConfigError("model: item count must be positive");
  const int64_t d = cfg_.embedding_dim;
  const Real stddev = Real(0.1);
  auto draw = [&](Shape shape) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    fill_normal(t, rng, Real(0), stddev);
    return t;
  };
  params_.item_embeddings = draw({item_count_, d});
  params_.temporal_table = draw({cfg_.max_step + 1, d});
  if (cfg_.disable_vv_time) {
    params_.vv_uniform_logit = draw({1});
  } else {
    params_.interval_hidden = draw({d, d});
    params_.interval_hidden_bias = draw({d});
    params_.interval_out = draw({d, 1});
    params_.interval_out_bias = draw({1});
  }
  for (int64_t k = 0; k < cfg_.layer_count; ++k) {
    LayerParams layer;
    layer.gru = make_gru_params(d, rng, stddev);
    if (!cfg_.single_interest) {
      layer.extract_interest_score = draw({d, 1});
      layer.extract_item_score = draw({d, 1});
      layer.extract_trans = draw({d, d});
      layer.attach_item = draw({d, d});
      layer.attach_interest = draw({d, d});
      if (!cfg_.disable_uv_time) {
        layer.attach_time = draw({d, 1});
        layer.attach_time_bias = draw({1});
      }
      layer.attach_trans = draw({d, d});
    }
    params_.layers.push_back(std::move(layer));
  }
  params_.readout.gate = draw({2 * d, 1});
  params_.readout.fuse =
      cfg_.disable_last_time ? draw({d, d}) : draw({2 * d, d});
  params_.readout.fuse_bias = draw({d});
  params_.readout.att_item = draw({d, d});
  params_.readout.att_interest = draw({d, d});
  params_.readout.att_query = draw({d, 1});
  params_.readout.att_bias = draw({d});
  params_.readout.session = draw({2 * d, d});
  if (cfg_.single_interest) params_.interest_query = draw({d});
}

namespace {

const LayerParams& layer_at(const std::vector<LayerParams>& layers,
                            int64_t k) {
  if (k < 0 || k >= static_cast<int64_t>(layers.size()))
    throw ContractError("layer index " + std::to_string(k) +
                        " outside the configured stack");
  return layers[static_cast<size_t>(k)];
}

}  // namespace

std::pair<Tensor, InterestState> Model::init_nodes(
    Tape& tape, const MultiInterestGraph& g) const {
  for (int64_t item : g.item_nodes)
    if (item < 0 || item >= item_count_)
      throw VocabularyError("item index " + std::to_string(item) +
                            " outside vocabulary of " +
                            std::to_string(item_count_) + " items");
  const int64_t n = g.node_count();
  Tensor items = gather(tape, params_.item_embeddings, g.item_nodes);
  InterestState state;
  if (!cfg_.single_interest) {
    const int64_t h = cfg_.interest_count;
    Tensor avg = Tensor::full({h, n}, Real(1) / static_cast<Real>(n));
    state.embedding = matmul(tape, avg, items);
    double center = 0;
    for (int64_t step : g.relative_steps) center += static_cast<double>(step);
    center /= static_cast<double>(n);
    double comp = 0;
    for (int64_t step : g.relative_steps)
      comp += std::abs(static_cast<double>(step) - center);
    comp /= static_cast<double>(n);
    state.center.assign(static_cast<size_t>(h), static_cast<Real>(center));
    state.compactness.assign(static_cast<size_t>(h),
                             static_cast<Real>(comp));
  }
  return {items, state};
}

Tensor Model::item_propagation(Tape& tape, const MultiInterestGraph& g,
                               const Tensor& items, int64_t layer,
                               Tensor* weights_out) const {
  const LayerParams& lp = layer_at(params_.layers, layer);
  if (weights_out) *weights_out = Tensor();
  const int64_t edge_count = static_cast<int64_t>(g.vv_src_sorted.size());
  if (edge_count == 0) return items;

  Tensor logits;
  if (cfg_.disable_vv_time) {
    std::vector<int64_t> zeros(static_cast<size_t>(edge_count), 0);
    logits = gather(tape, params_.vv_uniform_logit, zeros);
  } else {
    Tensor rows = gather(tape, params_.temporal_table, g.vv_bucket_sorted);
    Tensor hidden = leaky_relu(
        tape,
        add_rowvec(tape, matmul(tape, rows, params_.interval_hidden),
                   params_.interval_hidden_bias),
        cfg_.leaky_slope);
    Tensor out = add_rowvec(tape, matmul(tape, hidden, params_.interval_out),
                            params_.interval_out_bias);
    logits = reshape(tape, out, {edge_count});
  }
  Tensor weights = grouped_softmax(tape, logits, g.vv_group,
                                   g.vv_group_count);
  if (weights_out) *weights_out = weights;

  Tensor src_states = gather(tape, items, g.vv_src_sorted);
  Tensor weighted = mul_rows(tape, src_states, weights);
  Tensor agg = segment_sum(tape, weighted, g.vv_dst_sorted, g.node_count());
  Tensor updated = gru_cell(tape, items, agg, lp.gru);

  // nodes with no incoming edges keep their previous state
  const int64_t n = g.node_count();
  Tensor mask = Tensor::zeros({n});
  Tensor inverse = Tensor::zeros({n});
  for (int64_t v = 0; v < n; ++v) {
    const bool has_in = g.node_has_in[static_cast<size_t>(v)];
    mask.values_mut()[static_cast<size_t>(v)] = has_in ? Real(1) : Real(0);
    inverse.values_mut()[static_cast<size_t>(v)] = has_in ? Real(0) : Real(1);
  }
  return add(tape, mul_rows(tape, updated, mask),
             mul_rows(tape, items, inverse));
}

InterestState Model::interest_extraction(Tape& tape,
                                         const MultiInterestGraph& g,
                                         const Tensor& items,
                                         const InterestState& interests,
                                         int64_t layer,
                                         Tensor* alpha_out) const {
  if (cfg_.single_interest)
    throw ContractError("interest relations are disabled on this model");
  const LayerParams& lp = layer_at(params_.layers, layer);
  const int64_t h_count = cfg_.interest_count;
  const int64_t n = g.node_count();

  Tensor su = reshape(
      tape, matmul(tape, interests.embedding, lp.extract_interest_score),
      {h_count});
  Tensor sv =
      reshape(tape, matmul(tape, items, lp.extract_item_score), {n});
  std::vector<int64_t> hub(static_cast<size_t>(h_count * n));
  std::vector<int64_t> spoke(static_cast<size_t>(h_count * n));
  std::vector<int64_t> group(static_cast<size_t>(h_count * n));
  for (int64_t h = 0; h < h_count; ++h)
    for (int64_t j = 0; j < n; ++j) {
      const size_t pos = static_cast<size_t>(h * n + j);
      hub[pos] = h;
      spoke[pos] = j;
      group[pos] = h;
    }
  Tensor logits = leaky_relu(
      tape, add(tape, gather(tape, su, hub), gather(tape, sv, spoke)),
      cfg_.leaky_slope);
  Tensor alpha_flat = grouped_softmax(tape, logits, group, h_count);
  Tensor alpha = reshape(tape, alpha_flat, {h_count, n});
  if (alpha_out) *alpha_out = alpha;

  InterestState next;
  next.embedding =
      matmul(tape, alpha, matmul(tape, items, lp.extract_trans));
  next.center.resize(static_cast<size_t>(h_count));
  next.compactness.resize(static_cast<size_t>(h_count));
  for (int64_t h = 0; h < h_count; ++h) {
    double center = 0, comp = 0;
    for (int64_t j = 0; j < n; ++j) {
      const double a = static_cast<double>(alpha.at(h, j));
      const double step =
          static_cast<double>(g.relative_steps[static_cast<size_t>(j)]);
      center += a * step;
      comp += a * std::abs(step - static_cast<double>(
                                      interests.center[static_cast<size_t>(h)]));
    }
    next.center[static_cast<size_t>(h)] = static_cast<Real>(center);
    next.compactness[static_cast<size_t>(h)] = static_cast<Real>(comp);
  }
  return next;
}

Tensor Model::interest_attaching(Tape& tape, const MultiInterestGraph& g,
                                 const Tensor& items,
                                 const InterestState& interests,
                                 int64_t layer, Tensor* beta_out) const {
  if (cfg_.single_interest)
    throw ContractError("interest relations are disabled on this model");
  const LayerParams& lp = layer_at(params_.layers, layer);
  const int64_t h_count = cfg_.interest_count;
  const int64_t n = g.node_count();

  Tensor bilinear = matmul(
      tape, matmul(tape, items, lp.attach_item),
      transpose(tape, matmul(tape, interests.embedding, lp.attach_interest)));
  Tensor logits = reshape(tape, bilinear, {n * h_count});  // item-major
  if (!cfg_.disable_uv_time) {
    std::vector<int64_t> steps(static_cast<size_t>(n * h_count));
    for (int64_t i = 0; i < n; ++i)
      for (int64_t h = 0; h < h_count; ++h) {
        const double dist =
            std::abs(static_cast<double>(
                         interests.center[static_cast<size_t>(h)]) -
                     static_cast<double>(
                         g.relative_steps[static_cast<size_t>(i)])) /
            std::max(
                static_cast<double>(interests.compactness[static_cast<size_t>(h)]),
                static_cast<double>(cfg_.compactness_floor));
        steps[static_cast<size_t>(i * h_count + h)] = std::min(
            static_cast<int64_t>(std::floor(dist)), cfg_.max_step);
      }
    Tensor rows = gather(tape, params_.temporal_table, steps);
    Tensor term = add_rowvec(tape, matmul(tape, rows, lp.attach_time),
                             lp.attach_time_bias);
    logits = add(tape, logits, reshape(tape, term, {n * h_count}));
  }
  logits = leaky_relu(tape, logits, cfg_.leaky_slope);
  std::vector<int64_t> group(static_cast<size_t>(n * h_count));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t h = 0; h < h_count; ++h)
      group[static_cast<size_t>(i * h_count + h)] = i;
  Tensor beta_flat = grouped_softmax(tape, logits, group, n);
  Tensor beta = reshape(tape, beta_flat, {n, h_count});
  if (beta_out) *beta_out = beta;
  return matmul(tape, beta,
                matmul(tape, interests.embedding, lp.attach_trans));
}

std::tuple<Tensor, Tensor, Tensor> Model::combine_and_stack(
    Tape& tape, const MultiInterestGraph& g, ForwardTrace* trace) const {
  auto [items0, state0] = init_nodes(tape, g);
  if (trace && !cfg_.single_interest) {
    trace->center_history.push_back(state0.center);
    trace->compactness_history.push_back(state0.compactness);
  }
  Tensor items = items0;
  InterestState state = std::move(state0);
  for (int64_t k = 0; k < cfg_.layer_count; ++k) {
    LayerAttention att;
    Tensor vv = item_propagation(tape, g, items, k,
                                 trace ? &att.vv_weights : nullptr);
    if (cfg_.single_interest) {
      items = leaky_relu(tape, vv, cfg_.leaky_slope);
    } else {
      InterestState next = interest_extraction(
          tape, g, items, state, k, trace ? &att.alpha : nullptr);
      Tensor uv = interest_attaching(tape, g, items, state, k,
                                     trace ? &att.beta : nullptr);
      items = affine(tape,
                     leaky_relu(tape, add(tape, uv, vv), cfg_.leaky_slope),
                     Real(0.5), Real(0));
      next.embedding = leaky_relu(tape, next.embedding, cfg_.leaky_slope);
      state = std::move(next);
      if (trace) {
        trace->center_history.push_back(state.center);
        trace->compactness_history.push_back(state.compactness);
      }
    }
    if (trace) trace->layers.push_back(std::move(att));
  }

  Tensor gate = reshape(
      tape,
      sigmoid(tape, matmul(tape, concat_cols(tape, items0, items),
                           params_.readout.gate)),
      {g.node_count()});
  Tensor final_items =
      add(tape, mul_rows(tape, items0, gate),
          mul_rows(tape, items, affine(tape, gate, Real(-1), Real(1))));
  Tensor interest_rows =
      cfg_.single_interest
          ? reshape(tape, params_.interest_query, {1, cfg_.embedding_dim})
          : state.embedding;
  return {final_items, interest_rows, gate};
}

Tensor Model::session_readout(Tape& tape, const MultiInterestGraph& g,
                              const Tensor& final_items,
                              const Tensor& interest_rows,
                              Tensor* gamma_out) const {
  const int64_t n = g.node_count();
  const int64_t h_count = interest_rows.rows();

  Tensor fused;
  if (cfg_.disable_last_time) {
    fused = matmul(tape, final_items, params_.readout.fuse);
  } else {
    const std::vector<int64_t>& steps =
        cfg_.use_first_time ? g.relative_steps : g.last_steps;
    Tensor time_rows = gather(tape, params_.temporal_table, steps);
    fused = matmul(tape, concat_cols(tape, final_items, time_rows),
                   params_.readout.fuse);
  }
  Tensor z = tanh_op(tape,
                     add_rowvec(tape, fused, params_.readout.fuse_bias));

  Tensor m_items = matmul(tape, z, params_.readout.att_item);
  Tensor m_interests =
      matmul(tape, interest_rows, params_.readout.att_interest);
  std::vector<int64_t> hub(static_cast<size_t>(h_count * n));
  std::vector<int64_t> spoke(static_cast<size_t>(h_count * n));
  for (int64_t h = 0; h < h_count; ++h)
    for (int64_t i = 0; i < n; ++i) {
      hub[static_cast<size_t>(h * n + i)] = h;
      spoke[static_cast<size_t>(h * n + i)] = i;
    }
  Tensor act = sigmoid(
      tape, add_rowvec(tape,
                       add(tape, gather(tape, m_items, spoke),
                           gather(tape, m_interests, hub)),
                       params_.readout.att_bias));
  Tensor gamma = reshape(tape, matmul(tape, act, params_.readout.att_query),
                         {h_count, n});
  if (gamma_out) *gamma_out = gamma;

  Tensor graph_vectors = matmul(tape, gamma, final_items);
  return matmul(tape, concat_cols(tape, graph_vectors, interest_rows),
                params_.readout.session);
}

Tensor Model::predict_scores(Tape& tape,
                             const Tensor& session_vectors) const {
  Tensor normalized =
      l2_normalize_rows(tape, params_.item_embeddings, Real(1e-12));
  Tensor logits =
      matmul(tape, session_vectors, transpose(tape, normalized));
  Tensor probs = rowwise_softmax(tape, logits);
  return colwise_max(tape, probs);
}

ForwardTrace Model::forward(Tape& tape, const MultiInterestGraph& g) const {
  ForwardTrace trace;
  auto [final_items, interest_rows, gate] =
      combine_and_stack(tape, g, &trace);
  trace.final_items = final_items;
  trace.final_interests = interest_rows;
  trace.gate = gate;
  trace.session_vectors =
      session_readout(tape, g, final_items, interest_rows, &trace.gamma);
  trace.scores = predict_scores(tape, trace.session_vectors);
  return trace;
}

void Model::for_each_param(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("item_embeddings", params_.item_embeddings);
  fn("temporal_table", params_.temporal_table);
  if (cfg_.disable_vv_time) {
    fn("vv_uniform_logit", params_.vv_uniform_logit);
  } else {
    fn("interval.hidden", params_.interval_hidden);
    fn("interval.hidden_bias", params_.interval_hidden_bias);
    fn("interval.out", params_.interval_out);
    fn("interval.out_bias", params_.interval_out_bias);
  }
  for (size_t k = 0; k < params_.layers.size(); ++k) {
    const std::string p = "layer" + std::to_string(k) + ".";
    LayerParams& lp = params_.layers[k];
    fn(p + "gru.update_in", lp.gru.update_in);
    fn(p + "gru.update_state", lp.gru.update_state);
    fn(p + "gru.update_bias", lp.gru.update_bias);
    fn(p + "gru.reset_in", lp.gru.reset_in);
    fn(p + "gru.reset_state", lp.gru.reset_state);
    fn(p + "gru.reset_bias", lp.gru.reset_bias);
    fn(p + "gru.cand_in", lp.gru.cand_in);
    fn(p + "gru.cand_state", lp.gru.cand_state);
    fn(p + "gru.cand_bias", lp.gru.cand_bias);
    if (!cfg_.single_interest) {
      fn(p + "extract.interest_score", lp.extract_interest_score);
      fn(p + "extract.item_score", lp.extract_item_score);
      fn(p + "extract.trans", lp.extract_trans);
      fn(p + "attach.item", lp.attach_item);
      fn(p + "attach.interest", lp.attach_interest);
      if (!cfg_.disable_uv_time) {
        fn(p + "attach.time", lp.attach_time);
        fn(p + "attach.time_bias", lp.attach_time_bias);
      }
      fn(p + "attach.trans", lp.attach_trans);
    }
  }
  fn("readout.gate", params_.readout.gate);
  fn("readout.fuse", params_.readout.fuse);
  fn("readout.fuse_bias", params_.readout.fuse_bias);
  fn("readout.att_item", params_.readout.att_item);
  fn("readout.att_interest", params_.readout.att_interest);
  fn("readout.att_query", params_.readout.att_query);
  fn("readout.att_bias", params_.readout.att_bias);
  fn("readout.session", params_.readout.session);
  if (cfg_.single_interest) fn("interest_query", params_.interest_query);
}

std::vector<Tensor> Model::parameters() {
  std::vector<Tensor> out;
  for_each_param([&](const std::string&, Tensor& t) { out.push_back(t); });
  return out;
}

void Model::zero_grads() {
  for_each_param([](const std::string&, Tensor& t) { t.zero_grad(); });
}

std::vector<std::vector<Real>> Model::snapshot_values() const {
  std::vector<std::vector<Real>> out;
  const_cast<Model*>(this)->for_each_param(
      [&](const std::string&, Tensor& t) { out.push_back(t.values()); });
  return out;
}

void Model::restore_values(const std::vector<std::vector<Real>>& snapshot) {
  size_t i = 0;
  for_each_param([&](const std::string& name, Tensor& t) {
    if (i >= snapshot.size() || snapshot[i].size() != t.values().size())
      throw ContractError("parameter snapshot does not match " + name);
    t.values_mut() = snapshot[i++];
  });
  if (i != snapshot.size())
    throw ContractError("parameter snapshot has extra tensors");
}

}  // namespace sessrec
