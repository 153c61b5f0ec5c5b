#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "skm/tensor.hpp"

namespace skm {

struct GradcheckResult {
  double max_rel_error = 0.0;
  int worst_input = -1;
  bool passed(double tol = 1e-3) const { return max_rel_error <= tol; }
};

struct GradcheckOptions {
  double step = 1e-5;
  // Probe at most this many coordinates per input (0 = all).
  int max_probes = 0;
  unsigned seed = 7;
};

// Compares backward() against central differences of `f` at `inputs`.
// Per input, error = |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2)
// over the probed coordinates; the result holds the maximum over inputs.
inline GradcheckResult gradcheck(
    const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> inputs, const GradcheckOptions& options = {}) {
  for (auto& x : inputs) {
    x.node()->requires_grad = true;
    x.zero_grad();
  }
  f(inputs).backward();

  std::mt19937 rng(options.seed);
  GradcheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& x = inputs[i];
    std::vector<Index> probes(x.size());
    for (Index k = 0; k < x.size(); ++k) probes[k] = k;
    if (options.max_probes > 0 && x.size() > options.max_probes) {
      std::shuffle(probes.begin(), probes.end(), rng);
      probes.resize(options.max_probes);
    }
    Eigen::ArrayXd analytic(probes.size()), numeric(probes.size());
    const Eigen::ArrayXd g = x.has_grad() ? x.grad() : Eigen::ArrayXd::Zero(x.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const Index k = probes[p];
      const double saved = x.value()[k];
      x.mutable_value()[k] = saved + options.step;
      const double up = f(inputs).item();
      x.mutable_value()[k] = saved - options.step;
      const double down = f(inputs).item();
      x.mutable_value()[k] = saved;
      numeric[p] = (up - down) / (2 * options.step);
      analytic[p] = g[k];
    }
    const double scale = std::max(analytic.matrix().norm(), numeric.matrix().norm());
    const double err = scale < 1e-12 ? 0.0 : (analytic - numeric).matrix().norm() / scale;
    if (result.worst_input < 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_input = static_cast<int>(i);
    }
  }
  return result;
}

}  // namespace skm
