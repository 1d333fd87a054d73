#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sessrec/errors.hpp"
#include "sessrec/rng.hpp"

namespace sessrec {

#ifdef SESSREC_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<int64_t>;

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty unless requires_grad
  bool requires_grad = false;
};

}  // namespace detail

// Dense row-major tensor with an optional gradient buffer. Copies share the
// underlying node, so pushing a Tensor into a backward closure keeps the
// buffers alive.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real fill, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<Real> values,
                            bool requires_grad = false);
  static Tensor scalar_value(Real v, bool requires_grad = false);

  bool defined() const { return node != nullptr; }
  const Shape& shape() const { return node->shape; }
  int64_t size() const { return static_cast<int64_t>(node->value.size()); }
  int64_t rows() const;
  int64_t cols() const;

  const std::vector<Real>& values() const { return node->value; }
  std::vector<Real>& values_mut() { return node->value; }
  Real at(int64_t i) const { return node->value[static_cast<size_t>(i)]; }
  Real at(int64_t r, int64_t c) const {
    return node->value[static_cast<size_t>(r * cols() + c)];
  }

  bool requires_grad() const { return node->requires_grad; }
  void set_requires_grad(bool flag);
  const std::vector<Real>& grad() const { return node->grad; }
  std::vector<Real>& grad_mut() { return node->grad; }
  void zero_grad();

  std::shared_ptr<detail::TensorNode> node;
};

// Records backward closures as ops execute; backward() replays them in
// reverse. One tape per forward pass.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  void record(std::function<void()> fn);
  // Seeds d(loss)/d(loss) = 1 and runs closures in reverse order. The loss
  // must be a scalar; a tape can only be run backward once.
  void backward(Tensor& loss);
  void reset();
  size_t op_count() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
  bool grad_enabled_ = true;
  bool consumed_ = false;
};

// --- differentiable ops -----------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
// scale * x + shift, elementwise with scalar constants.
Tensor affine(Tape& tape, const Tensor& x, Real scale, Real shift);
// [n, d] + [d] broadcast over rows.
Tensor add_rowvec(Tape& tape, const Tensor& x, const Tensor& v);
// Select rows (2-D input) or elements (1-D input) by index, first axis.
Tensor gather(Tape& tape, const Tensor& x, const std::vector<int64_t>& idx);
// Sum rows of x into out[segment[i]] += x[i]; segment ids in [0, count).
// Empty segments yield zero rows.
Tensor segment_sum(Tape& tape, const Tensor& x,
                   const std::vector<int64_t>& segment, int64_t count);
Tensor concat(Tape& tape, const Tensor& a, const Tensor& b);       // 1-D
Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b);  // 2-D
// Softmax over groups of a 1-D tensor. group[i] names the group of x[i];
// every group in [0, group_count) must be non-empty.
Tensor grouped_softmax(Tape& tape, const Tensor& x,
                       const std::vector<int64_t>& group, int64_t group_count);
Tensor rowwise_softmax(Tape& tape, const Tensor& x);
// x[n, d] scaled per row by w[n].
Tensor mul_rows(Tape& tape, const Tensor& x, const Tensor& w);
Tensor sum(Tape& tape, const Tensor& x);  // -> [1]
Tensor leaky_relu(Tape& tape, const Tensor& x, Real slope);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh_op(Tape& tape, const Tensor& x);
// log(max(x, eps)); gradient is 1/x where x > eps and 0 where clamped.
Tensor log_guard(Tape& tape, const Tensor& x, Real eps);
// Rows scaled to unit L2 norm; rows with norm <= eps are divided by eps.
Tensor l2_normalize_rows(Tape& tape, const Tensor& x, Real eps);
// Column-wise max of [r, c] -> [c]; ties resolve to the smallest row index.
Tensor colwise_max(Tape& tape, const Tensor& x);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// --- GRU cell ----------------------------------------------------------

struct GruParams {
  Tensor update_in, update_state, update_bias;
  Tensor reset_in, reset_state, reset_bias;
  Tensor cand_in, cand_state, cand_bias;
};

GruParams make_gru_params(int64_t dim, Rng& rng, Real stddev);

// state/input are [n, d] or [d]; returns the new state with the same shape.
// out = z*state + (1-z)*cand, z = sig(in.Wz + st.Uz + bz),
// r = sig(in.Wr + st.Ur + br), cand = tanh(in.Wc + (r*st).Uc + bc).
Tensor gru_cell(Tape& tape, const Tensor& state, const Tensor& input,
                const GruParams& params);

void fill_normal(Tensor& t, Rng& rng, Real mean, Real stddev);

std::string shape_str(const Shape& s);

}  // namespace sessrec
