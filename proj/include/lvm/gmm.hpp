#pragma once

// Gaussian mixture model: softmax recognition, log-sum-exp marginal, exact
// EM, equiprobability boundaries, and the K-means hard-assignment limit.

#include <vector>

#include "lvm/em.hpp"
#include "lvm/info.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

struct GmmParams {
  DiscreteDistribution weights;
  std::vector<Vec> means;
  std::vector<Mat> covs;

  Eigen::Index num_components() const { return weights.size(); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  /// Throws DimensionError / PreconditionError on inconsistent shapes.
  void validate() const;
};

/// N x K table; row n is the recognition distribution of sample n.
struct Responsibilities {
  Mat table;
};

/// Class log-scores a_k = log pi_k - 1/2 log|Sigma_k| - 1/2 Mahalanobis^2,
/// with constants shared by all classes dropped.
Vec gmm_log_scores(const GmmParams& params, const Vec& x);
DiscreteDistribution gmm_recognize(const GmmParams& params, const Vec& x);
double gmm_log_marginal(const GmmParams& params, const Vec& x);

/// `data` holds one sample per row.
Responsibilities gmm_e_step(const GmmParams& params, const Mat& data);
/// Closed-form M-step. Each covariance is symmetrized and its spectrum
/// floored at 1e-6 * trace / D.
GmmParams gmm_m_step(const Mat& data, const Responsibilities& resp);

/// (x - (mu_i + mu_j)/2)' Sigma^-1 (mu_i - mu_j) - log(pi_j / pi_i) for a
/// mixture whose covariances are all equal; positive when class i is the
/// more probable one.
double gmm_equiprob_score(const GmmParams& params, const Vec& x, Eigen::Index i, Eigen::Index j);

/// Free energy (nats per sample) of `params` under the proxy `resp`.
double gmm_free_energy(const GmmParams& params, const Mat& data, const Responsibilities& resp);

/// Means drawn from K distinct data rows, covariances set to the global
/// covariance, uniform weights.
GmmParams gmm_initialize(const Mat& data, Eigen::Index k, Rng& rng);

/// EM handle for run_em. Empty components are re-seeded at the sample with
/// the lowest marginal likelihood under the current parameters.
class GmmEm {
 public:
  GmmEm(const Mat& data, GmmParams init);

  double e_step();
  double m_step();
  const GmmParams& params() const { return params_; }
  const Responsibilities& responsibilities() const { return resp_; }
  int reseeded_components() const { return reseeded_; }

 private:
  const Mat* data_;
  GmmParams params_;
  Responsibilities resp_;
  int reseeded_ = 0;
};

FitReport<GmmParams> fit_gmm(const Mat& data, Eigen::Index k, const EmConfig& config);

struct KMeansConfig {
  int max_iter = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<Vec> means;
  std::vector<Eigen::Index> assignments;
  /// Within-cluster sum of squared distances after each assignment pass.
  std::vector<double> distortion_trace;
  int iterations = 0;
  bool converged = false;
};

/// Index of the nearest mean; ties go to the lowest index.
Eigen::Index nearest_mean(const std::vector<Vec>& means, const Vec& x);

/// Lloyd iterations from means at K distinct data rows. An emptied cluster
/// is re-seeded at the sample farthest from its assigned mean.
KMeansResult kmeans(const Mat& data, Eigen::Index k, const KMeansConfig& config);
/// Lloyd iterations from given means.
KMeansResult kmeans_from(const Mat& data, std::vector<Vec> means, int max_iter);

}  // namespace lvm
