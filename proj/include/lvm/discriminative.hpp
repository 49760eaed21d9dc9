#pragma once

// Discriminative estimators: least squares in its plain, ridge and weighted
// forms; Newton-Raphson / IRLS for generalized linear models; InfoMax ICA.
// Inputs and outputs hold one sample per row.

#include <string>
#include <vector>

#include "lvm/types.hpp"

namespace lvm {

struct LinearMap {
  Mat weights;  // K x D
  Vec intercept;

  Vec apply(const Vec& x) const { return weights * x + intercept; }
  Mat apply_rows(const Mat& x) const;
};

struct RegressionOptions {
  /// Fit an intercept by centering (or, for WLS, by augmenting the inputs).
  bool center = true;
};

/// W = <z x'> <x x'>^-1. Throws SingularityError when <x x'> is singular.
LinearMap ols_fit(const Mat& inputs, const Mat& outputs, const RegressionOptions& opts = {});
/// W = <z x'> (<x x'> + R)^-1 with R = prior_cov.
LinearMap ridge_fit(const Mat& inputs, const Mat& outputs, const Mat& prior_cov, const RegressionOptions& opts = {});
LinearMap ridge_fit(const Mat& inputs, const Mat& outputs, double lambda, const RegressionOptions& opts = {});
/// W = Z U^-1 X' (X U^-1 X')^-1 with samples as columns of X and Z.
LinearMap wls_fit(const Mat& inputs, const Mat& outputs, const Mat& weight_matrix, const RegressionOptions& opts = {});

enum class GlimFamilyName { gaussian, bernoulli_logit, poisson_log, gamma_shape_log };

/// Exponential family in natural parameter theta with sufficient statistic
/// T(z) and log-partition A(theta). The linear predictor eta = w'x maps to
/// theta; only the gamma-shape family has theta != eta (theta = shape = e^eta,
/// T(z) = log z, scale known).
struct GlimFamily {
  GlimFamilyName name = GlimFamilyName::gaussian;
  /// Gamma scale theta, known.
  double scale = 1.0;

  static GlimFamily parse(const std::string& name);
  std::string to_string() const;

  double natural(double eta) const;
  /// d theta / d eta
  double natural_slope(double eta) const;
  double sufficient(double z) const;
  double log_partition(double theta) const;
  /// A'(theta) = E[T(z)]
  double mean(double theta) const;
  /// A''(theta) = Var[T(z)]
  double variance(double theta) const;
  /// -log p(z | eta), including base-measure terms.
  double neg_log_lik(double z, double eta) const;
  /// Throws PreconditionError for a response outside the support.
  void check_support(double z) const;
  /// E[z] given eta, for prediction.
  double response_mean(double eta) const;
};

struct IrlsConfig {
  int max_iter = 100;
  /// Converged when the mean-gradient norm falls below tol.
  double tol = 1e-10;
  /// Starting weights; zero when empty.
  Vec init;
};

struct IrlsResult {
  Vec weights;
  /// Mean negative log-likelihood at the start and after each accepted step.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

/// Newton steps with the expected Hessian, halving each step up to 30 times
/// while the objective would increase. No intercept is added; include a
/// column of ones for one.
IrlsResult irls_fit(const Mat& inputs, const Vec& outputs, const GlimFamily& family, const IrlsConfig& config = {});
double glim_objective(const Mat& inputs, const Vec& outputs, const GlimFamily& family, const Vec& w);

enum class IcaNonlinearity { logistic_cdf, gaussian_cdf };

struct IcaModel {
  Mat unmixing;
  IcaNonlinearity nonlinearity = IcaNonlinearity::logistic_cdf;
};

/// <-sum_k log f'((W x)_k)> - log |det W| over the rows of `batch`.
double ica_loss(const IcaModel& model, const Mat& batch);
/// Gradient of ica_loss with respect to W.
Mat ica_gradient(const IcaModel& model, const Mat& batch);

struct IcaConfig {
  double learning_rate = 0.1;
  int iters = 500;
  std::uint64_t seed = 0;
  IcaNonlinearity nonlinearity = IcaNonlinearity::logistic_cdf;
  /// Start from a seeded random orthogonal matrix instead of the identity.
  bool random_init = false;
};

struct IcaFitResult {
  IcaModel model;
  std::vector<double> loss_trace;
};

/// Gradient descent with backtracking; the loss trace never increases.
IcaFitResult ica_fit(const Mat& batch, const IcaConfig& config = {});

}  // namespace lvm
