#pragma once

// Hidden Markov model with Gaussian emissions. trans(i, j) = P(next = i |
// prev = j), so columns are distributions over the next state.

#include <vector>

#include "lvm/em.hpp"
#include "lvm/info.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

struct HmmParams {
  DiscreteDistribution init;
  Mat trans;
  std::vector<Vec> means;
  std::vector<Mat> covs;

  Eigen::Index num_states() const { return init.size(); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  void validate() const;
};

struct HmmFilterResult {
  Mat filter;     // T x K
  Mat predicted;  // T x K; row 0 is init
  Vec log_normalizers;
  double loglik = 0.0;
};

struct HmmPosteriors {
  Mat filter;    // T x K
  Mat smoother;  // T x K
  /// pairwise[t](i, j) = P(z_{t+1} = i, z_t = j | x).
  std::vector<Mat> pairwise;
  double loglik = 0.0;
};

/// T x K table of log N(x_t; mu_k, Sigma_k).
Mat hmm_emission_log_likelihoods(const HmmParams& params, const Mat& obs);

/// Scaled filter on an arbitrary T x K table of emission log-likelihoods.
HmmFilterResult hmm_filter(const DiscreteDistribution& init, const Mat& trans, const Mat& log_lik);
HmmFilterResult hmm_filter(const HmmParams& params, const Mat& obs);

/// Backward pass from filter output and the transition matrix alone.
HmmPosteriors hmm_smooth_filtered(const Mat& trans, const HmmFilterResult& filtered);
HmmPosteriors hmm_smoother(const HmmParams& params, const Mat& obs);

struct HmmAlpha {
  Mat alpha;  // alpha(t, k) = p(z_t = k, x_1..x_t)
  double loglik = 0.0;
};

/// Unscaled forward recursion. Throws UnderflowError once a row falls below
/// the smallest normal double.
HmmAlpha hmm_alpha(const HmmParams& params, const Mat& obs);

struct HmmStats {
  Vec init_counts;         // sum over sequences of gamma_1
  Mat trans_counts;        // (i, j): expected j -> i transitions
  Vec occupancy;           // sum_t gamma_t
  std::vector<Vec> sum_x;  // sum_t gamma_t(k) x_t
  std::vector<Mat> sum_xx; // sum_t gamma_t(k) x_t x_t'
  double loglik = 0.0;
  /// Entropy of the path posterior, summed over sequences.
  double entropy = 0.0;
  double num_obs = 0.0;
};

HmmStats hmm_e_step(const HmmParams& params, const std::vector<Mat>& sequences);
/// Emission covariance eigenvalues are floored at 1e-6 times the mean
/// per-coordinate variance of all observations pooled over states.
HmmParams hmm_m_step(const HmmStats& stats);
/// Free energy (nats per observation) of `params` under the path posterior
/// summarized by `stats`.
double hmm_free_energy(const HmmParams& params, const HmmStats& stats);

/// Uniform init, diagonally dominant random transitions, emissions at
/// distinct random observations with the global covariance.
HmmParams hmm_initialize(const std::vector<Mat>& sequences, Eigen::Index k, Rng& rng);

class HmmEm {
 public:
  HmmEm(const std::vector<Mat>& sequences, HmmParams init);

  double e_step();
  double m_step();
  const HmmParams& params() const { return params_; }

 private:
  const std::vector<Mat>* sequences_;
  HmmParams params_;
  HmmStats stats_;
};

FitReport<HmmParams> fit_hmm(const std::vector<Mat>& sequences, Eigen::Index k, const EmConfig& config);

/// Draws a state path and observations of length T.
std::pair<std::vector<Eigen::Index>, Mat> hmm_sample(const HmmParams& params, Eigen::Index steps, Rng& rng);

}  // namespace lvm
