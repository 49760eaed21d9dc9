#pragma once

// Factor analysis x = C z + c + e, z ~ N(0, I), e ~ N(0, diag(d)).
// Data are centered once at the sample mean; the offset stays fixed during EM.

#include "lvm/em.hpp"
#include "lvm/gaussian.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

struct FaParams {
  Mat loading;     // D x K
  Vec offset;      // D
  Vec diag_noise;  // D, each >= 1e-10

  Eigen::Index dim() const { return loading.rows(); }
  Eigen::Index num_factors() const { return loading.cols(); }
  void validate() const;
  /// The equivalent source N(0, I) and channel (C, c, diag(d)).
  AffineGaussianChannel channel() const;
};

struct FaExpectedStats {
  Mat sum_x_z;       // sum_n (x_n - offset) E[z|x_n]'
  Mat sum_zz;        // sum_n E[z z'|x_n]
  Vec sum_xx_diag;   // sum_n (x_n - offset)^2, elementwise
  double n = 0.0;
  Vec offset;
  /// sum_n H[q(z|x_n)], needed for the free energy of the held proxy.
  double sum_entropy = 0.0;
};

GaussianBelief fa_recognize(const FaParams& params, const Vec& x);
double fa_log_marginal(const FaParams& params, const Vec& x);
/// Mean log-likelihood over the rows of `data`, with one factorization.
double fa_mean_log_likelihood(const FaParams& params, const Mat& data);

FaExpectedStats fa_e_step(const FaParams& params, const Mat& data);
FaParams fa_m_step(const FaExpectedStats& stats);
/// Free energy (nats per sample) of `params` under the proxy summarized by `stats`.
double fa_free_energy(const FaParams& params, const FaExpectedStats& stats);

/// Zero-noise limit of FA EM. Rows of `data` are centered at their mean
/// first. Stops after `iters` sweeps or when ||W_new - W|| / ||W|| < 1e-10.
Mat pca_iterate(const Mat& w, const Mat& data, int iters);

/// Offset at the sample mean, loading with scaled random orthonormal columns,
/// noise at the per-coordinate sample variance.
FaParams fa_initialize(const Mat& data, Eigen::Index k, Rng& rng);

class FaEm {
 public:
  FaEm(const Mat& data, FaParams init);

  double e_step();
  double m_step();
  const FaParams& params() const { return params_; }

 private:
  const Mat* data_;
  FaParams params_;
  FaExpectedStats stats_;
};

FitReport<FaParams> fit_fa(const Mat& data, Eigen::Index k, const EmConfig& config);

}  // namespace lvm
