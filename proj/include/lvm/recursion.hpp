#pragma once

// Forward filter / backward smoother shared by the discrete (HMM) and
// linear-Gaussian (Kalman) chains. An algebra supplies the four half-updates
// and the driver sequences them; the smoother pass never sees observations.
//
//   Belief initial() const;
//   Belief time_update(const Belief& filtered_prev, Eigen::Index t) const;
//   std::pair<Belief, double> measurement_update(const Belief& predicted, Eigen::Index t) const;
//   Reverse future_condition(const Belief& filtered, const Belief& predicted_next) const;
//   Belief backward_step(const Belief& smoothed_next, const Reverse& reverse) const;
//   Pairwise pairwise(const Belief& smoothed_next, const Reverse& reverse) const;

#include <utility>
#include <vector>

#include "lvm/types.hpp"

namespace lvm {

template <class Belief>
struct FilterPass {
  std::vector<Belief> predicted;
  std::vector<Belief> filtered;
  std::vector<double> log_normalizers;
  double loglik = 0.0;
};

template <class Belief, class Reverse, class Pairwise>
struct SmootherPass {
  std::vector<Belief> smoothed;
  /// reverse[t] is the channel z_{t+1} -> z_t given x_1..x_t.
  std::vector<Reverse> reverse;
  /// pairwise[t] couples z_{t+1} (first) with z_t (second).
  std::vector<Pairwise> pairwise;
};

template <class Algebra>
auto run_filter(const Algebra& alg, Eigen::Index steps) {
  using Belief = decltype(alg.initial());
  FilterPass<Belief> out;
  out.predicted.reserve(steps);
  out.filtered.reserve(steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    out.predicted.push_back(t == 0 ? alg.initial() : alg.time_update(out.filtered.back(), t));
    auto [belief, log_norm] = alg.measurement_update(out.predicted.back(), t);
    out.filtered.push_back(std::move(belief));
    out.log_normalizers.push_back(log_norm);
    out.loglik += log_norm;
  }
  return out;
}

template <class Algebra, class Belief>
auto run_smoother(const Algebra& alg, const std::vector<Belief>& filtered,
                  const std::vector<Belief>& predicted) {
  using Reverse = decltype(alg.future_condition(filtered[0], predicted[0]));
  using Pairwise = decltype(alg.pairwise(filtered[0], std::declval<const Reverse&>()));
  SmootherPass<Belief, Reverse, Pairwise> out;
  const auto steps = static_cast<Eigen::Index>(filtered.size());
  if (steps == 0) return out;
  out.smoothed.resize(steps);
  out.reverse.resize(steps - 1);
  out.pairwise.resize(steps - 1);
  out.smoothed[steps - 1] = filtered[steps - 1];
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    out.reverse[t] = alg.future_condition(filtered[t], predicted[t + 1]);
    out.smoothed[t] = alg.backward_step(out.smoothed[t + 1], out.reverse[t]);
    out.pairwise[t] = alg.pairwise(out.smoothed[t + 1], out.reverse[t]);
  }
  return out;
}

}  // namespace lvm
