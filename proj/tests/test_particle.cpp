#include <doctest.h>

#include "lvm/errors.hpp"
#include "lvm/hmm.hpp"
#include "lvm/particle.hpp"
#include "oracles.hpp"

using namespace lvm;

namespace {

struct Chain {
  Vec init;
  Mat trans;
  Mat log_lik;  // T x K
};

Chain random_chain(Rng& rng, Eigen::Index k, Eigen::Index steps) {
  Chain c{oracle::random_probs(rng, k), oracle::random_columns(rng, k), Mat(steps, k)};
  for (Eigen::Index t = 0; t < steps; ++t)
    for (Eigen::Index s = 0; s < k; ++s) c.log_lik(t, s) = -2.0 * rng.uniform();
  return c;
}

// Observations are the step index, so the likelihood can read the table.
Mat step_index(Eigen::Index steps) {
  Mat o(steps, 1);
  for (Eigen::Index t = 0; t < steps; ++t) o(t, 0) = static_cast<double>(t);
  return o;
}

}  // namespace

TEST_SUITE("particle") {

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(DiscreteDistribution::uniform(8)) == doctest::Approx(8.0));
  CHECK(effective_sample_size(DiscreteDistribution(Vec{{1.0, 0.0}})) == doctest::Approx(1.0));
}

TEST_CASE("resampling frequencies") {
  Rng rng(1);
  const DiscreteDistribution w(Vec{{0.1, 0.6, 0.3}});
  for (Resampling scheme : {Resampling::multinomial, Resampling::systematic}) {
    Vec counts = Vec::Zero(3);
    for (Eigen::Index a : resample(w, 100000, rng, scheme)) counts(a) += 1.0;
    CHECK(oracle::max_abs(counts / 100000.0 - w.probs()) < 0.01);
  }
  // systematic resampling is within one of the expected count
  const auto idx = resample(w, 10, rng, Resampling::systematic);
  CHECK(std::count(idx.begin(), idx.end(), 1) >= 5);
  CHECK(std::count(idx.begin(), idx.end(), 1) <= 7);
}

TEST_CASE("exact-support embedding reproduces the discrete chain") {
  Rng rng(2);
  const Chain c = random_chain(rng, 3, 8);
  std::vector<Vec> states;
  for (int s = 0; s < 3; ++s) states.push_back(Vec::Constant(1, s));
  ParticleCloud cloud = pf_initialize(states);
  cloud.predictive_weights = DiscreteDistribution(c.init);
  const auto density = [&](const Vec& next, const Vec& prev) {
    return std::log(c.trans(static_cast<Eigen::Index>(next(0)), static_cast<Eigen::Index>(prev(0))));
  };
  const auto lik = [&](const Vec& z, const Vec& o) {
    return c.log_lik(static_cast<Eigen::Index>(o(0)), static_cast<Eigen::Index>(z(0)));
  };
  std::vector<ParticleCloud> clouds;
  for (Eigen::Index t = 0; t < 8; ++t) {
    if (t > 0) cloud = pf_time_update_fixed_support(clouds.back(), density);
    clouds.push_back(pf_measurement_update(cloud, lik, Vec::Constant(1, static_cast<double>(t))));
  }
  clouds = particle_smoother(clouds, density);
  const HmmFilterResult f = hmm_filter(DiscreteDistribution(c.init), c.trans, c.log_lik);
  const HmmPosteriors s = hmm_smooth_filtered(c.trans, f);
  for (Eigen::Index t = 0; t < 8; ++t) {
    CHECK(oracle::max_abs(clouds[t].filter_weights.probs() - f.filter.row(t).transpose()) < 1e-12);
    CHECK(oracle::max_abs(clouds[t].predictive_weights.probs() - f.predicted.row(t).transpose()) < 1e-12);
    CHECK(oracle::max_abs(clouds[t].smoother_weights.probs() - s.smoother.row(t).transpose()) < 1e-12);
  }
}

TEST_CASE("bootstrap filter approaches the exact filter") {
  Rng rng(3);
  const Chain c = random_chain(rng, 3, 6);
  const HmmFilterResult f = hmm_filter(DiscreteDistribution(c.init), c.trans, c.log_lik);
  std::vector<Vec> init;
  Rng draw = rng.substream("init");
  for (int i = 0; i < 20000; ++i) init.push_back(Vec::Constant(1, static_cast<double>(draw.categorical(c.init))));
  const TransitionSampler dyn = [&](const Vec& prev, Rng& r) {
    return Vec::Constant(1, static_cast<double>(r.categorical(c.trans.col(static_cast<Eigen::Index>(prev(0))))));
  };
  const ObsLogLikelihood lik = [&](const Vec& z, const Vec& o) {
    return c.log_lik(static_cast<Eigen::Index>(o(0)), static_cast<Eigen::Index>(z(0)));
  };
  const auto clouds = particle_filter(pf_initialize(init), dyn, lik, step_index(6), rng);
  for (Eigen::Index t = 0; t < 6; ++t) {
    const Vec mass = aggregate_by_state(clouds[t], clouds[t].filter_weights, 3);
    CHECK(0.5 * (mass - f.filter.row(t).transpose()).cwiseAbs().sum() < 0.03);
  }
}

TEST_CASE("all-zero likelihood") {
  ParticleCloud cloud = pf_initialize({Vec::Zero(1), Vec::Ones(1)});
  const ObsLogLikelihood never = [](const Vec&, const Vec&) { return -std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(pf_measurement_update(cloud, never, Vec::Zero(1)), UnderflowError);
}

TEST_CASE("same seed, same cloud") {
  const std::vector<Vec> init = {Vec::Zero(1), Vec::Ones(1), Vec::Constant(1, 2.0)};
  const TransitionSampler dyn = [](const Vec& prev, Rng& r) { return Vec(prev + r.normal_vector(1)); };
  const ObsLogLikelihood lik = [](const Vec& z, const Vec& o) { return -0.5 * (z - o).squaredNorm(); };
  const Mat obs = Mat::Constant(4, 1, 0.5);
  Rng a(7), b(7);
  const auto ca = particle_filter(pf_initialize(init), dyn, lik, obs, a);
  const auto cb = particle_filter(pf_initialize(init), dyn, lik, obs, b);
  for (std::size_t t = 0; t < ca.size(); ++t)
    for (Eigen::Index i = 0; i < ca[t].size(); ++i) CHECK(ca[t].particles[i](0) == cb[t].particles[i](0));
}

}
