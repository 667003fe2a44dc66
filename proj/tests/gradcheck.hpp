#pragma once

// Central finite-difference check of an analytic parameter gradient. Losses
// are returned in long double so that round-off in large sums stays well
// below the step size.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "fbcast/nn.hpp"

namespace gradcheck {

struct Result {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a kink
};

// Relative error |fd - an| / max(|fd|, |an|, floor). The floor keeps
// round-off on near-zero gradients from reading as a large relative error.
inline double rel_error(long double fd, double an, double floor = 1e-5) {
  const long double a = an;
  return static_cast<double>(std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), static_cast<long double>(floor)}));
}

// ReLU on/off pattern of every hidden unit for one forward pass.
inline std::vector<bool> relu_pattern(const fbcast::MlpCache& cache) {
  std::vector<bool> out;
  for (std::size_t k = 0; k + 1 < cache.pre.size(); ++k)
    for (double v : cache.pre[k]) out.push_back(v > 0.0);
  return out;
}

// `loss` evaluates the scalar at given parameters; `pattern` returns the
// piecewise region the parameters fall in (parameters whose +/- h
// perturbations land in different regions are skipped).
inline Result check(const fbcast::MlpParams& params, const fbcast::MlpGradient& grad,
                    const std::function<long double(const fbcast::MlpParams&)>& loss,
                    const std::function<std::vector<bool>(const fbcast::MlpParams&)>& pattern,
                    const std::vector<std::size_t>& indices, double h = 1e-5) {
  Result r;
  fbcast::MlpParams work = params;
  for (std::size_t i : indices) {
    const double orig = work.parameter(i);
    work.parameter(i) = orig + h;
    const long double up = loss(work);
    const auto pat_up = pattern(work);
    work.parameter(i) = orig - h;
    const long double down = loss(work);
    const auto pat_down = pattern(work);
    work.parameter(i) = orig;
    if (pat_up != pat_down) {
      ++r.skipped;
      continue;
    }
    const long double fd = (up - down) / (2.0L * static_cast<long double>(h));
    r.max_rel_error = std::max(r.max_rel_error, rel_error(fd, grad.parameter(i)));
    ++r.checked;
  }
  return r;
}

inline std::vector<std::size_t> all_indices(const fbcast::MlpParams& p) {
  std::vector<std::size_t> v(p.parameter_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace gradcheck
