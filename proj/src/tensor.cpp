#include "sessrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sessrec {

namespace {

int64_t shape_product(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

bool track(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.grad_enabled()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void require_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2)
    throw DimensionError(std::string(op) + ": expected 2-D tensor, got " +
                         shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << "]";
  return os.str();
}

// --- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_values(shape, std::vector<Real>(shape_product(shape), Real(0)),
                     requires_grad);
}

Tensor Tensor::full(Shape shape, Real fill, bool requires_grad) {
  return from_values(shape, std::vector<Real>(shape_product(shape), fill),
                     requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<Real> values,
                           bool requires_grad) {
  if (shape_product(shape) != static_cast<int64_t>(values.size()))
    throw DimensionError("tensor: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_str(shape));
  Tensor t;
  t.node = std::make_shared<detail::TensorNode>();
  t.node->shape = std::move(shape);
  t.node->value = std::move(values);
  if (requires_grad) t.set_requires_grad(true);
  return t;
}

Tensor Tensor::scalar_value(Real v, bool requires_grad) {
  return from_values({1}, {v}, requires_grad);
}

int64_t Tensor::rows() const {
  return node->shape.empty() ? 1 : node->shape[0];
}

int64_t Tensor::cols() const {
  return node->shape.size() >= 2 ? node->shape[1] : 1;
}

void Tensor::set_requires_grad(bool flag) {
  node->requires_grad = flag;
  if (flag) {
    node->grad.assign(node->value.size(), Real(0));
  } else {
    node->grad.clear();
  }
}

void Tensor::zero_grad() {
  std::fill(node->grad.begin(), node->grad.end(), Real(0));
}

// --- Tape ----------------------------------------------------------------

void Tape::record(std::function<void()> fn) {
  if (grad_enabled_) ops_.push_back(std::move(fn));
}

void Tape::backward(Tensor& loss) {
  if (consumed_)
    throw ContractError("tape: backward already run; reset before reuse");
  if (!grad_enabled_)
    throw ContractError("tape: backward on a gradient-disabled tape");
  if (loss.size() != 1)
    throw ContractError("tape: backward target must be scalar, got " +
                        shape_str(loss.shape()));
  if (!loss.requires_grad())
    throw ContractError("tape: backward target does not track gradients");
  consumed_ = true;
  loss.grad_mut()[0] = Real(1);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::reset() {
  ops_.clear();
  consumed_ = false;
}

// --- ops -------------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int64_t m = a.shape()[0], k = a.shape()[1];
  const int64_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2)
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<Real> out(static_cast<size_t>(m * n), Real(0));
  const Real* av = a.values().data();
  const Real* bv = b.values().data();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < k; ++p) {
      const Real aip = av[i * k + p];
      if (aip == Real(0)) continue;
      Real* orow = out.data() + i * n;
      const Real* brow = bv + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  bool tracked = track(tape, {&a, &b});
  Tensor y = Tensor::from_values({m, n}, std::move(out), tracked);
  if (tracked)
    tape.record([a, b, y, m, k, n]() {
      const Real* g = y.grad().data();
      if (a.requires_grad()) {
        Real* da = a.node->grad.data();
        const Real* bv = b.values().data();
        for (int64_t i = 0; i < m; ++i)
          for (int64_t p = 0; p < k; ++p) {
            Real acc = 0;
            const Real* grow = g + i * n;
            const Real* brow = bv + p * n;
            for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            da[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        Real* db = b.node->grad.data();
        const Real* av = a.values().data();
        for (int64_t i = 0; i < m; ++i)
          for (int64_t p = 0; p < k; ++p) {
            const Real aip = av[i * k + p];
            if (aip == Real(0)) continue;
            Real* drow = db + p * n;
            const Real* grow = g + i * n;
            for (int64_t j = 0; j < n; ++j) drow[j] += aip * grow[j];
          }
      }
    });
  return y;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_2d(a, "transpose");
  const int64_t m = a.shape()[0], n = a.shape()[1];
  std::vector<Real> out(static_cast<size_t>(m * n));
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[j * m + i] = a.at(i, j);
  bool tracked = track(tape, {&a});
  Tensor y = Tensor::from_values({n, m}, std::move(out), tracked);
  if (tracked)
    tape.record([a, y, m, n]() {
      Real* da = a.node->grad.data();
      const Real* g = y.grad().data();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) da[i * n + j] += g[j * m + i];
    });
  return y;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] += b.at(i);
  bool tracked = track(tape, {&a, &b});
  Tensor y = Tensor::from_values(a.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([a, b, y]() {
      const Real* g = y.grad().data();
      const int64_t n = y.size();
      if (a.requires_grad()) {
        Real* da = a.node->grad.data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        Real* db = b.node->grad.data();
        for (int64_t i = 0; i < n; ++i) db[i] += g[i];
      }
    });
  return y;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] -= b.at(i);
  bool tracked = track(tape, {&a, &b});
  Tensor y = Tensor::from_values(a.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([a, b, y]() {
      const Real* g = y.grad().data();
      const int64_t n = y.size();
      if (a.requires_grad()) {
        Real* da = a.node->grad.data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        Real* db = b.node->grad.data();
        for (int64_t i = 0; i < n; ++i) db[i] -= g[i];
      }
    });
  return y;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.values());
  for (int64_t i = 0; i < a.size(); ++i) out[i] *= b.at(i);
  bool tracked = track(tape, {&a, &b});
  Tensor y = Tensor::from_values(a.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([a, b, y]() {
      const Real* g = y.grad().data();
      const int64_t n = y.size();
      if (a.requires_grad()) {
        Real* da = a.node->grad.data();
        const Real* bv = b.values().data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        Real* db = b.node->grad.data();
        const Real* av = a.values().data();
        for (int64_t i = 0; i < n; ++i) db[i] += g[i] * av[i];
      }
    });
  return y;
}

Tensor affine(Tape& tape, const Tensor& x, Real scale, Real shift) {
  std::vector<Real> out(x.values());
  for (Real& v : out) v = scale * v + shift;
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, scale]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      for (int64_t i = 0; i < y.size(); ++i) dx[i] += scale * g[i];
    });
  return y;
}

Tensor add_rowvec(Tape& tape, const Tensor& x, const Tensor& v) {
  require_2d(x, "add_rowvec");
  if (v.shape().size() != 1 || v.size() != x.cols())
    throw DimensionError("add_rowvec: " + shape_str(x.shape()) + " + " +
                         shape_str(v.shape()));
  const int64_t n = x.rows(), d = x.cols();
  std::vector<Real> out(x.values());
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j) out[i * d + j] += v.at(j);
  bool tracked = track(tape, {&x, &v});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, v, y, n, d]() {
      const Real* g = y.grad().data();
      if (x.requires_grad()) {
        Real* dx = x.node->grad.data();
        for (int64_t i = 0; i < n * d; ++i) dx[i] += g[i];
      }
      if (v.requires_grad()) {
        Real* dv = v.node->grad.data();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < d; ++j) dv[j] += g[i * d + j];
      }
    });
  return y;
}

Tensor gather(Tape& tape, const Tensor& x, const std::vector<int64_t>& idx) {
  if (x.shape().empty() || x.shape().size() > 2)
    throw DimensionError("gather: expected 1-D or 2-D input, got " +
                         shape_str(x.shape()));
  const int64_t rows = x.shape()[0];
  const int64_t d = x.shape().size() == 2 ? x.shape()[1] : 1;
  const int64_t n = static_cast<int64_t>(idx.size());
  for (int64_t i : idx)
    if (i < 0 || i >= rows)
      throw IndexError("gather: index " + std::to_string(i) +
                       " out of range for " + std::to_string(rows) + " rows");
  std::vector<Real> out(static_cast<size_t>(n * d));
  const Real* xv = x.values().data();
  for (int64_t i = 0; i < n; ++i)
    std::copy(xv + idx[i] * d, xv + (idx[i] + 1) * d, out.data() + i * d);
  Shape shape = x.shape().size() == 2 ? Shape{n, d} : Shape{n};
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(std::move(shape), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, idx, n, d]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) dx[idx[i] * d + j] += g[i * d + j];
    });
  return y;
}

Tensor segment_sum(Tape& tape, const Tensor& x,
                   const std::vector<int64_t>& segment, int64_t count) {
  if (x.shape().empty() || x.shape().size() > 2)
    throw DimensionError("segment_sum: expected 1-D or 2-D input, got " +
                         shape_str(x.shape()));
  const int64_t n = x.shape()[0];
  const int64_t d = x.shape().size() == 2 ? x.shape()[1] : 1;
  if (static_cast<int64_t>(segment.size()) != n)
    throw GroupingError("segment_sum: " + std::to_string(segment.size()) +
                        " segment ids for " + std::to_string(n) + " rows");
  for (int64_t s : segment)
    if (s < 0 || s >= count)
      throw GroupingError("segment_sum: segment id " + std::to_string(s) +
                          " outside [0, " + std::to_string(count) + ")");
  std::vector<Real> out(static_cast<size_t>(count * d), Real(0));
  const Real* xv = x.values().data();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j) out[segment[i] * d + j] += xv[i * d + j];
  Shape shape = x.shape().size() == 2 ? Shape{count, d} : Shape{count};
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(std::move(shape), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, segment, n, d]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) dx[i * d + j] += g[segment[i] * d + j];
    });
  return y;
}

Tensor concat(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1)
    throw DimensionError("concat: expected 1-D tensors, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  std::vector<Real> out(a.values());
  out.insert(out.end(), b.values().begin(), b.values().end());
  bool tracked = track(tape, {&a, &b});
  Tensor y =
      Tensor::from_values({a.size() + b.size()}, std::move(out), tracked);
  if (tracked)
    tape.record([a, b, y]() {
      const Real* g = y.grad().data();
      if (a.requires_grad()) {
        Real* da = a.node->grad.data();
        for (int64_t i = 0; i < a.size(); ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        Real* db = b.node->grad.data();
        const int64_t off = a.size();
        for (int64_t i = 0; i < b.size(); ++i) db[i] += g[off + i];
      }
    });
  return y;
}

Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_cols");
  require_2d(b, "concat_cols");
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: row counts disagree, " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const int64_t n = a.rows(), da = a.cols(), db = b.cols();
  std::vector<Real> out(static_cast<size_t>(n * (da + db)));
  for (int64_t i = 0; i < n; ++i) {
    std::copy(a.values().data() + i * da, a.values().data() + (i + 1) * da,
              out.data() + i * (da + db));
    std::copy(b.values().data() + i * db, b.values().data() + (i + 1) * db,
              out.data() + i * (da + db) + da);
  }
  bool tracked = track(tape, {&a, &b});
  Tensor y = Tensor::from_values({n, da + db}, std::move(out), tracked);
  if (tracked)
    tape.record([a, b, y, n, da, db]() {
      const Real* g = y.grad().data();
      if (a.requires_grad()) {
        Real* ga = a.node->grad.data();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < da; ++j)
            ga[i * da + j] += g[i * (da + db) + j];
      }
      if (b.requires_grad()) {
        Real* gb = b.node->grad.data();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < db; ++j)
            gb[i * db + j] += g[i * (da + db) + da + j];
      }
    });
  return y;
}

Tensor grouped_softmax(Tape& tape, const Tensor& x,
                       const std::vector<int64_t>& group,
                       int64_t group_count) {
  if (x.shape().size() != 1)
    throw DimensionError("grouped_softmax: expected 1-D input, got " +
                         shape_str(x.shape()));
  const int64_t n = x.size();
  if (static_cast<int64_t>(group.size()) != n)
    throw GroupingError("grouped_softmax: " + std::to_string(group.size()) +
                        " group ids for " + std::to_string(n) + " entries");
  std::vector<Real> gmax(static_cast<size_t>(group_count),
                         -std::numeric_limits<Real>::infinity());
  for (int64_t i = 0; i < n; ++i) {
    int64_t g = group[i];
    if (g < 0 || g >= group_count)
      throw GroupingError("grouped_softmax: group id " + std::to_string(g) +
                          " outside [0, " + std::to_string(group_count) + ")");
    // std::max would discard a NaN logit; keep it so bad values surface
    // downstream as NaN instead of masquerading as an empty group
    const Real xi = x.at(i);
    gmax[g] = std::isnan(xi) ? xi : std::max(gmax[g], xi);
  }
  for (int64_t g = 0; g < group_count; ++g)
    if (gmax[g] == -std::numeric_limits<Real>::infinity())
      throw GroupingError("grouped_softmax: group " + std::to_string(g) +
                          " is empty");
  std::vector<Real> out(static_cast<size_t>(n));
  std::vector<Real> gsum(static_cast<size_t>(group_count), Real(0));
  for (int64_t i = 0; i < n; ++i) {
    out[i] = std::exp(x.at(i) - gmax[group[i]]);
    gsum[group[i]] += out[i];
  }
  for (int64_t i = 0; i < n; ++i) out[i] /= gsum[group[i]];
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values({n}, std::move(out), tracked);
  if (tracked)
    tape.record([x, y, group, group_count, n]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* yv = y.values().data();
      std::vector<Real> dot(static_cast<size_t>(group_count), Real(0));
      for (int64_t i = 0; i < n; ++i) dot[group[i]] += yv[i] * g[i];
      for (int64_t i = 0; i < n; ++i)
        dx[i] += yv[i] * (g[i] - dot[group[i]]);
    });
  return y;
}

Tensor rowwise_softmax(Tape& tape, const Tensor& x) {
  require_2d(x, "rowwise_softmax");
  const int64_t n = x.rows(), d = x.cols();
  std::vector<Real> out(static_cast<size_t>(n * d));
  for (int64_t i = 0; i < n; ++i) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (int64_t j = 0; j < d; ++j) mx = std::max(mx, x.at(i, j));
    Real s = 0;
    for (int64_t j = 0; j < d; ++j) {
      out[i * d + j] = std::exp(x.at(i, j) - mx);
      s += out[i * d + j];
    }
    for (int64_t j = 0; j < d; ++j) out[i * d + j] /= s;
  }
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, n, d]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* yv = y.values().data();
      for (int64_t i = 0; i < n; ++i) {
        Real dot = 0;
        for (int64_t j = 0; j < d; ++j) dot += yv[i * d + j] * g[i * d + j];
        for (int64_t j = 0; j < d; ++j)
          dx[i * d + j] += yv[i * d + j] * (g[i * d + j] - dot);
      }
    });
  return y;
}

Tensor mul_rows(Tape& tape, const Tensor& x, const Tensor& w) {
  require_2d(x, "mul_rows");
  if (w.shape().size() != 1 || w.size() != x.rows())
    throw DimensionError("mul_rows: " + shape_str(x.shape()) + " with " +
                         shape_str(w.shape()));
  const int64_t n = x.rows(), d = x.cols();
  std::vector<Real> out(x.values());
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j) out[i * d + j] *= w.at(i);
  bool tracked = track(tape, {&x, &w});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, w, y, n, d]() {
      const Real* g = y.grad().data();
      if (x.requires_grad()) {
        Real* dx = x.node->grad.data();
        const Real* wv = w.values().data();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < d; ++j) dx[i * d + j] += g[i * d + j] * wv[i];
      }
      if (w.requires_grad()) {
        Real* dw = w.node->grad.data();
        const Real* xv = x.values().data();
        for (int64_t i = 0; i < n; ++i) {
          Real acc = 0;
          for (int64_t j = 0; j < d; ++j) acc += g[i * d + j] * xv[i * d + j];
          dw[i] += acc;
        }
      }
    });
  return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
  Real total = 0;
  for (Real v : x.values()) total += v;
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values({1}, {total}, tracked);
  if (tracked)
    tape.record([x, y]() {
      Real* dx = x.node->grad.data();
      const Real g = y.grad()[0];
      for (int64_t i = 0; i < x.size(); ++i) dx[i] += g;
    });
  return y;
}

Tensor leaky_relu(Tape& tape, const Tensor& x, Real slope) {
  std::vector<Real> out(x.values());
  for (Real& v : out)
    if (v < Real(0)) v *= slope;
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, slope]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* xv = x.values().data();
      for (int64_t i = 0; i < x.size(); ++i)
        dx[i] += g[i] * (xv[i] > Real(0) ? Real(1) : slope);
    });
  return y;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  std::vector<Real> out(x.values());
  for (Real& v : out) v = Real(1) / (Real(1) + std::exp(-v));
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* yv = y.values().data();
      for (int64_t i = 0; i < y.size(); ++i)
        dx[i] += g[i] * yv[i] * (Real(1) - yv[i]);
    });
  return y;
}

Tensor tanh_op(Tape& tape, const Tensor& x) {
  std::vector<Real> out(x.values());
  for (Real& v : out) v = std::tanh(v);
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* yv = y.values().data();
      for (int64_t i = 0; i < y.size(); ++i)
        dx[i] += g[i] * (Real(1) - yv[i] * yv[i]);
    });
  return y;
}

Tensor log_guard(Tape& tape, const Tensor& x, Real eps) {
  std::vector<Real> out(x.values());
  for (Real& v : out) v = std::log(std::max(v, eps));
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, eps]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* xv = x.values().data();
      for (int64_t i = 0; i < x.size(); ++i)
        if (xv[i] > eps) dx[i] += g[i] / xv[i];
    });
  return y;
}

Tensor l2_normalize_rows(Tape& tape, const Tensor& x, Real eps) {
  require_2d(x, "l2_normalize_rows");
  const int64_t n = x.rows(), d = x.cols();
  std::vector<Real> out(x.values());
  std::vector<Real> scale(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    Real sq = 0;
    for (int64_t j = 0; j < d; ++j) sq += x.at(i, j) * x.at(i, j);
    scale[i] = std::max(std::sqrt(sq), eps);
    for (int64_t j = 0; j < d; ++j) out[i * d + j] /= scale[i];
  }
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values(x.shape(), std::move(out), tracked);
  if (tracked)
    tape.record([x, y, scale, eps, n, d]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      const Real* yv = y.values().data();
      for (int64_t i = 0; i < n; ++i) {
        if (scale[i] > eps) {
          Real dot = 0;
          for (int64_t j = 0; j < d; ++j) dot += yv[i * d + j] * g[i * d + j];
          for (int64_t j = 0; j < d; ++j)
            dx[i * d + j] += (g[i * d + j] - yv[i * d + j] * dot) / scale[i];
        } else {
          // Row norm was at or below the floor: the divisor is a constant.
          for (int64_t j = 0; j < d; ++j) dx[i * d + j] += g[i * d + j] / eps;
        }
      }
    });
  return y;
}

Tensor colwise_max(Tape& tape, const Tensor& x) {
  require_2d(x, "colwise_max");
  const int64_t n = x.rows(), d = x.cols();
  if (n == 0) throw DimensionError("colwise_max: no rows");
  std::vector<Real> out(static_cast<size_t>(d));
  std::vector<int64_t> arg(static_cast<size_t>(d), 0);
  for (int64_t j = 0; j < d; ++j) {
    out[j] = x.at(0, j);
    for (int64_t i = 1; i < n; ++i)
      if (x.at(i, j) > out[j]) {
        out[j] = x.at(i, j);
        arg[j] = i;
      }
  }
  bool tracked = track(tape, {&x});
  Tensor y = Tensor::from_values({d}, std::move(out), tracked);
  if (tracked)
    tape.record([x, y, arg, d]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      for (int64_t j = 0; j < d; ++j) dx[arg[j] * d + j] += g[j];
    });
  return y;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_product(shape) != x.size())
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                         " as " + shape_str(shape));
  bool tracked = track(tape, {&x});
  Tensor y =
      Tensor::from_values(std::move(shape), x.values(), tracked);
  if (tracked)
    tape.record([x, y]() {
      Real* dx = x.node->grad.data();
      const Real* g = y.grad().data();
      for (int64_t i = 0; i < x.size(); ++i) dx[i] += g[i];
    });
  return y;
}

// --- GRU cell ---------------------------------------------------------

GruParams make_gru_params(int64_t dim, Rng& rng, Real stddev) {
  auto weight = [&](int64_t r, int64_t c) {
    Tensor t = Tensor::zeros({r, c}, true);
    fill_normal(t, rng, Real(0), stddev);
    return t;
  };
  auto bias = [&](int64_t d) {
    Tensor t = Tensor::zeros({d}, true);
    fill_normal(t, rng, Real(0), stddev);
    return t;
  };
  GruParams p;
  p.update_in = weight(dim, dim);
  p.update_state = weight(dim, dim);
  p.update_bias = bias(dim);
  p.reset_in = weight(dim, dim);
  p.reset_state = weight(dim, dim);
  p.reset_bias = bias(dim);
  p.cand_in = weight(dim, dim);
  p.cand_state = weight(dim, dim);
  p.cand_bias = bias(dim);
  return p;
}

Tensor gru_cell(Tape& tape, const Tensor& state, const Tensor& input,
                const GruParams& params) {
  require_same_shape(state, input, "gru_cell");
  const bool vec = state.shape().size() == 1;
  Tensor h = vec ? reshape(tape, state, {1, state.size()}) : state;
  Tensor x = vec ? reshape(tape, input, {1, input.size()}) : input;
  if (h.cols() != params.update_in.shape()[0])
    throw DimensionError("gru_cell: state width " + std::to_string(h.cols()) +
                         " does not match weights " +
                         shape_str(params.update_in.shape()));
  Tensor z = sigmoid(
      tape, add_rowvec(tape,
                       add(tape, matmul(tape, x, params.update_in),
                           matmul(tape, h, params.update_state)),
                       params.update_bias));
  Tensor r = sigmoid(
      tape, add_rowvec(tape,
                       add(tape, matmul(tape, x, params.reset_in),
                           matmul(tape, h, params.reset_state)),
                       params.reset_bias));
  Tensor cand = tanh_op(
      tape, add_rowvec(tape,
                       add(tape, matmul(tape, x, params.cand_in),
                           matmul(tape, mul(tape, r, h), params.cand_state)),
                       params.cand_bias));
  Tensor keep = mul(tape, z, h);
  Tensor fresh = mul(tape, affine(tape, z, Real(-1), Real(1)), cand);
  Tensor out = add(tape, keep, fresh);
  return vec ? reshape(tape, out, {out.size()}) : out;
}

void fill_normal(Tensor& t, Rng& rng, Real mean, Real stddev) {
  for (Real& v : t.values_mut())
    v = static_cast<Real>(rng.normal(mean, stddev));
}

}  // namespace sessrec
