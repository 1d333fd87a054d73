#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sessrec/tensor.hpp"

namespace sessrec::testing {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

// Central-difference derivative of forward() w.r.t. one parameter entry.
// forward must rebuild the whole computation from current values and
// return the scalar loss.
template <class Forward>
double central_diff(Forward&& forward, Tensor& param, int64_t index,
                    double h) {
  const Real orig = param.values()[static_cast<size_t>(index)];
  param.values_mut()[static_cast<size_t>(index)] =
      orig + static_cast<Real>(h);
  const double up = forward();
  param.values_mut()[static_cast<size_t>(index)] =
      orig - static_cast<Real>(h);
  const double down = forward();
  param.values_mut()[static_cast<size_t>(index)] = orig;
  return (up - down) / (2.0 * h);
}

// Compares tape gradients already stored on each tensor against central
// finite differences of forward(); returns the worst relative error.
// stride > 1 sub-samples entries of large tensors.
template <class Forward>
double max_grad_rel_err(Forward&& forward, std::vector<Tensor> params,
                        double h, int64_t stride = 1) {
  double worst = 0.0;
  for (Tensor& p : params) {
    const std::vector<Real> analytic = p.grad();
    for (int64_t i = 0; i < p.size(); i += stride) {
      const double numeric = central_diff(forward, p, i, h);
      worst = std::max(
          worst, rel_err(static_cast<double>(analytic[static_cast<size_t>(i)]),
                         numeric));
    }
  }
  return worst;
}

}  // namespace sessrec::testing
