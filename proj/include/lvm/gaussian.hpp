#pragma once

// Closed-form cumulant algebra for jointly Gaussian source/emission pairs.

#include <optional>
#include <string>

#include "lvm/types.hpp"

namespace lvm {

/// Mean and covariance of a multivariate normal. The covariance is
/// symmetrized on construction and must be positive semi-definite
/// (smallest eigenvalue >= -1e-10, scaled by the covariance magnitude).
class GaussianBelief {
 public:
  GaussianBelief() = default;
  GaussianBelief(Vec mean, Mat cov);

  static GaussianBelief standard(Eigen::Index dim);

  const Vec& mean() const { return mean_; }
  const Mat& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  double min_eigenvalue() const;

 private:
  Vec mean_;
  Mat cov_;
};

/// Emission or transition of the form N(W z + b, noise_cov).
///
/// The noise covariance must be symmetric PSD; operations that need its
/// inverse raise SingularityError when it is not positive definite.
class AffineGaussianChannel {
 public:
  AffineGaussianChannel() = default;
  AffineGaussianChannel(Mat weights, Vec offset, Mat noise_cov);

  const Mat& weights() const { return weights_; }
  const Vec& offset() const { return offset_; }
  const Mat& noise_cov() const { return noise_cov_; }
  Eigen::Index input_dim() const { return weights_.cols(); }
  Eigen::Index output_dim() const { return weights_.rows(); }

 private:
  Mat weights_;
  Vec offset_;
  Mat noise_cov_;
};

struct GainMatrix {
  Mat gain;
};

enum class BayesForm { automatic, direct, woodbury };

GaussianBelief marginal_cumulants(const GaussianBelief& source, const AffineGaussianChannel& channel);

/// Recognition (posterior) distribution of the source given an observation.
/// `automatic` picks the Woodbury form when the observation space is smaller
/// than the source space. A singular prior always uses the Woodbury form.
GaussianBelief bayes_invert(const GaussianBelief& source, const AffineGaussianChannel& channel,
                            const Vec& obs, BayesForm form = BayesForm::automatic);

/// Sigma_z W' (W Sigma_z W' + Sigma_e)^-1
GainMatrix gain(const GaussianBelief& source, const AffineGaussianChannel& channel);

/// Cov[z, Wz + b + noise] = Sigma_z W'
Mat cross_covariance(const GaussianBelief& source, const AffineGaussianChannel& channel);

/// A^-1 - A^-1 U (C^-1 + V A^-1 U)^-1 V A^-1, i.e. the inverse of A + U C V.
Mat woodbury_inverse(const Mat& a, const Mat& u, const Mat& c, const Mat& v);

/// E[(b - W z)' A (b - W z)] for z ~ belief.
double expected_quadratic(const GaussianBelief& belief, const Mat& w, const Mat& a, const Vec& b);

/// log N(x; mean, cov). Throws SingularityError when cov is not PD.
double gaussian_log_density(const Vec& x, const Vec& mean, const Mat& cov);

/// Differential entropy (nats) of N(., cov).
double gaussian_entropy(const Mat& cov);

/// Cholesky factorization of an SPD matrix. When the plain factorization
/// fails, a diagonal jitter of 1e-9 * mean(diag) is added and it is retried
/// once; if that also fails a SingularityError naming `what` is thrown.
class SpdFactor {
 public:
  SpdFactor(const Mat& s, const std::string& what);

  Mat solve(const Mat& rhs) const { return llt_.solve(rhs); }
  Vec solve(const Vec& rhs) const { return llt_.solve(rhs); }
  Mat inverse() const;
  double log_det() const;
  /// x' S^-1 x
  double quad(const Vec& x) const;
  Eigen::Index dim() const { return llt_.rows(); }

 private:
  Eigen::LLT<Mat> llt_;
};

/// Clamp the spectrum of a symmetric matrix from below.
Mat floor_eigenvalues(const Mat& s, double floor);

}  // namespace lvm
