#pragma once

// Generic EM driver. A model handle owns its data, parameters, and current
// proxy recognition distribution and exposes two half-steps, each returning
// the free energy (nats per observation) after it runs:
//
//   double e_step();  // proxy <- exact recognition; the bound becomes tight
//   double m_step();  // parameters <- argmin of the bound for the held proxy
//   Params params() const;

#include <cmath>
#include <algorithm>
#include <concepts>
#include <type_traits>
#include <utility>
#include <cstdint>
#include <vector>

#include "lvm/errors.hpp"

namespace lvm {

struct EmConfig {
  int max_iter = 200;
  /// Stop when |F_prev - F| <= tol * max(1, |F|) between successive E-steps.
  double tol = 1e-8;
  std::uint64_t seed = 0;
  int restarts = 1;
};

template <class Params>
struct FitReport {
  /// One entry after the initial E-step, then one per half-step (M, E, M, E, ...).
  std::vector<double> free_energy_trace;
  Params final_params;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  int restart = 0;

  double final_free_energy() const { return free_energy_trace.back(); }
};

template <class M>
concept EmModel = requires(M m, const M cm) {
  { m.e_step() } -> std::convertible_to<double>;
  { m.m_step() } -> std::convertible_to<double>;
  cm.params();
};

/// Derives the seed of restart r from the base seed.
inline std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(restart + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Runs EM from `make_model(seed)` for each restart and keeps the restart
/// with the lowest final free energy. Restart 0 uses the configured seed
/// unchanged.
template <class Factory>
  requires EmModel<std::invoke_result_t<Factory, std::uint64_t>>
auto run_em(Factory&& make_model, const EmConfig& config) {
  using Model = std::invoke_result_t<Factory, std::uint64_t>;
  using Params = std::remove_cvref_t<decltype(std::declval<const Model&>().params())>;

  const auto check = [](double f, int iteration) {
    if (!std::isfinite(f)) throw NumericalDivergenceError(iteration);
    return f;
  };

  FitReport<Params> best;
  bool have_best = false;
  const int restarts = config.restarts < 1 ? 1 : config.restarts;
  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t seed = r == 0 ? config.seed : restart_seed(config.seed, r);
    Model model = make_model(seed);

    FitReport<Params> report;
    report.seed = seed;
    report.restart = r;
    double previous = check(model.e_step(), 0);
    report.free_energy_trace.push_back(previous);
    for (int it = 1; it <= config.max_iter; ++it) {
      report.free_energy_trace.push_back(check(model.m_step(), it));
      const double current = check(model.e_step(), it);
      report.free_energy_trace.push_back(current);
      report.iterations = it;
      if (std::abs(previous - current) <= config.tol * std::max(1.0, std::abs(current))) {
        report.converged = true;
        break;
      }
      previous = current;
    }
    report.final_params = model.params();
    if (!have_best || report.final_free_energy() < best.final_free_energy()) {
      best = std::move(report);
      have_best = true;
    }
  }
  return best;
}

}  // namespace lvm
