#pragma once

// Sequential Monte Carlo versions of the discrete-chain recursions. The
// same particles carry predictive, filter and smoother weights.

#include <functional>
#include <vector>

#include "lvm/info.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

struct ParticleCloud {
  std::vector<Vec> particles;
  /// Weights before the measurement; uniform after a resampling time update.
  DiscreteDistribution predictive_weights;
  DiscreteDistribution filter_weights;
  /// Filled by particle_smoother.
  DiscreteDistribution smoother_weights;

  Eigen::Index size() const { return static_cast<Eigen::Index>(particles.size()); }
};

using TransitionSampler = std::function<Vec(const Vec& prev, Rng& rng)>;
/// log p(obs | particle)
using ObsLogLikelihood = std::function<double(const Vec& particle, const Vec& obs)>;
/// log p(next | prev)
using TransitionLogDensity = std::function<double(const Vec& next, const Vec& prev)>;

enum class Resampling { multinomial, systematic };

/// Cloud with uniform predictive weights (filter weights set equal).
ParticleCloud pf_initialize(std::vector<Vec> particles);

/// 1 / sum w^2
double effective_sample_size(const DiscreteDistribution& w);

/// Ancestor indices drawn from the weights.
std::vector<Eigen::Index> resample(const DiscreteDistribution& w, Eigen::Index n, Rng& rng,
                                   Resampling scheme = Resampling::multinomial);

/// Draws N ancestors from the filter weights and pushes each through the
/// transition sampler; the result carries uniform predictive weights. Warns
/// when one particle holds more than 1 - 1e-12 of the weight.
ParticleCloud pf_time_update(const ParticleCloud& cloud, const TransitionSampler& dynamics, Rng& rng,
                             Resampling scheme = Resampling::multinomial);

/// Keeps the particles and sets predictive weights proportional to
/// sum_j p(z_i | z_j) w_j. Exact when the particles enumerate a finite
/// state space.
ParticleCloud pf_time_update_fixed_support(const ParticleCloud& cloud, const TransitionLogDensity& density);

/// filter weights proportional to predictive weights times the likelihood.
/// Throws UnderflowError when every weighted likelihood is zero.
ParticleCloud pf_measurement_update(const ParticleCloud& cloud, const ObsLogLikelihood& likelihood, const Vec& obs);

/// Runs the filter over the rows of `obs`, starting from `initial` as the
/// first predictive cloud.
std::vector<ParticleCloud> particle_filter(const ParticleCloud& initial, const TransitionSampler& dynamics,
                                           const ObsLogLikelihood& likelihood, const Mat& obs, Rng& rng,
                                           Resampling scheme = Resampling::multinomial);

/// Backward reweighting of the filter clouds: v_T = w_T and
/// v_t(i) = w_t(i) sum_k v_{t+1}(k) f(z_{t+1}^k | z_t^i) / sum_j w_t(j) f(z_{t+1}^k | z_t^j).
std::vector<ParticleCloud> particle_smoother(std::vector<ParticleCloud> clouds, const TransitionLogDensity& density);

/// Sum of weights per distinct value of a scalar particle (state index),
/// for clouds over a finite state space.
Vec aggregate_by_state(const ParticleCloud& cloud, const DiscreteDistribution& w, Eigen::Index num_states);

}  // namespace lvm
