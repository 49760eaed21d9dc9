#include "lvm/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lvm/errors.hpp"
#include "lvm/log.hpp"

namespace lvm {

ParticleCloud pf_initialize(std::vector<Vec> particles) {
  if (particles.empty()) throw PreconditionError("particle cloud needs at least one particle");
  ParticleCloud c;
  const auto n = static_cast<Eigen::Index>(particles.size());
  c.particles = std::move(particles);
  c.predictive_weights = DiscreteDistribution::uniform(n);
  c.filter_weights = c.predictive_weights;
  return c;
}

double effective_sample_size(const DiscreteDistribution& w) { return 1.0 / w.probs().squaredNorm(); }

std::vector<Eigen::Index> resample(const DiscreteDistribution& w, Eigen::Index n, Rng& rng, Resampling scheme) {
  const Vec& p = w.probs();
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) cdf[i] = acc += p(i);
  const auto last_positive = [&] {
    Eigen::Index i = p.size() - 1;
    while (i > 0 && p(i) == 0.0) --i;
    return i;
  }();
  const auto locate = [&](double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * acc);
    const auto i = static_cast<Eigen::Index>(it - cdf.begin());
    return std::min(i, last_positive);
  };
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  if (scheme == Resampling::systematic) {
    const double u0 = rng.uniform();
    for (Eigen::Index i = 0; i < n; ++i) out[i] = locate((u0 + static_cast<double>(i)) / static_cast<double>(n));
  } else {
    for (Eigen::Index i = 0; i < n; ++i) out[i] = locate(rng.uniform());
  }
  return out;
}

ParticleCloud pf_time_update(const ParticleCloud& cloud, const TransitionSampler& dynamics, Rng& rng,
                             Resampling scheme) {
  const Eigen::Index n = cloud.size();
  if (n < 1) throw PreconditionError("particle cloud is empty");
  if (n > 1 && cloud.filter_weights.probs().maxCoeff() > 1.0 - 1e-12)
    warn("particle weights are degenerate (effective sample size " +
         std::to_string(effective_sample_size(cloud.filter_weights)) + ")");
  const auto ancestors = resample(cloud.filter_weights, n, rng, scheme);
  // One substream per particle, keyed by a fresh draw so successive steps differ.
  const Rng step = rng.substream(rng());
  ParticleCloud out;
  out.particles.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng r = step.substream(static_cast<std::uint64_t>(i));
    out.particles.push_back(dynamics(cloud.particles[ancestors[i]], r));
  }
  out.predictive_weights = DiscreteDistribution::uniform(n);
  out.filter_weights = out.predictive_weights;
  return out;
}

ParticleCloud pf_time_update_fixed_support(const ParticleCloud& cloud, const TransitionLogDensity& density) {
  const Eigen::Index n = cloud.size();
  if (n < 1) throw PreconditionError("particle cloud is empty");
  Vec pred = Vec::Zero(n);
  const Vec& w = cloud.filter_weights.probs();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (w(j) > 0.0) pred(i) += std::exp(density(cloud.particles[i], cloud.particles[j])) * w(j);
  ParticleCloud out;
  out.particles = cloud.particles;
  out.predictive_weights = DiscreteDistribution::normalized(pred);
  out.filter_weights = out.predictive_weights;
  return out;
}

ParticleCloud pf_measurement_update(const ParticleCloud& cloud, const ObsLogLikelihood& likelihood, const Vec& obs) {
  const Eigen::Index n = cloud.size();
  if (n < 1) throw PreconditionError("particle cloud is empty");
  Vec logw(n);
  const Vec& pred = cloud.predictive_weights.probs();
  for (Eigen::Index i = 0; i < n; ++i)
    logw(i) = pred(i) > 0.0 ? std::log(pred(i)) + likelihood(cloud.particles[i], obs)
                            : -std::numeric_limits<double>::infinity();
  if (!std::isfinite(logw.maxCoeff())) throw UnderflowError(-1, "every particle has zero likelihood");
  ParticleCloud out = cloud;
  out.filter_weights = DiscreteDistribution::from_log_weights(logw);
  return out;
}

std::vector<ParticleCloud> particle_filter(const ParticleCloud& initial, const TransitionSampler& dynamics,
                                           const ObsLogLikelihood& likelihood, const Mat& obs, Rng& rng,
                                           Resampling scheme) {
  std::vector<ParticleCloud> clouds;
  for (Eigen::Index t = 0; t < obs.rows(); ++t) {
    const ParticleCloud pred = t == 0 ? initial : pf_time_update(clouds.back(), dynamics, rng, scheme);
    try {
      clouds.push_back(pf_measurement_update(pred, likelihood, obs.row(t).transpose()));
    } catch (const UnderflowError&) {
      throw UnderflowError(static_cast<int>(t), "every particle has zero likelihood");
    }
  }
  return clouds;
}

std::vector<ParticleCloud> particle_smoother(std::vector<ParticleCloud> clouds, const TransitionLogDensity& density) {
  if (clouds.empty()) return clouds;
  clouds.back().smoother_weights = clouds.back().filter_weights;
  for (auto t = static_cast<std::ptrdiff_t>(clouds.size()) - 2; t >= 0; --t) {
    const ParticleCloud& next = clouds[t + 1];
    ParticleCloud& cur = clouds[t];
    const Eigen::Index n = cur.size();
    const Eigen::Index m = next.size();
    const Vec& w = cur.filter_weights.probs();
    const Vec& v_next = next.smoother_weights.probs();
    Vec v = Vec::Zero(n);
    Vec logf(n);
    for (Eigen::Index k = 0; k < m; ++k) {
      if (v_next(k) == 0.0) continue;
      for (Eigen::Index i = 0; i < n; ++i) logf(i) = density(next.particles[k], cur.particles[i]);
      // log sum_j w_j f(z_{t+1}^k | z_t^j)
      Vec terms(n);
      for (Eigen::Index j = 0; j < n; ++j)
        terms(j) = w(j) > 0.0 ? std::log(w(j)) + logf(j) : -std::numeric_limits<double>::infinity();
      const double log_den = log_sum_exp(terms);
      if (!std::isfinite(log_den))
        throw UnderflowError(static_cast<int>(t), "zero future-conditioning denominator at particle " + std::to_string(k));
      for (Eigen::Index i = 0; i < n; ++i) v(i) += v_next(k) * std::exp(terms(i) - log_den);
    }
    cur.smoother_weights = DiscreteDistribution::normalized(v);
  }
  return clouds;
}

Vec aggregate_by_state(const ParticleCloud& cloud, const DiscreteDistribution& w, Eigen::Index num_states) {
  Vec out = Vec::Zero(num_states);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto s = static_cast<Eigen::Index>(std::lround(cloud.particles[i](0)));
    if (s < 0 || s >= num_states) throw DimensionError("particle state out of range");
    out(s) += w(i);
  }
  return out;
}

}  // namespace lvm
