#pragma once

// Sparse coding: x = C z + e, e ~ N(0, I / lambda), independent Laplace
// sources p(z_k) = (alpha_k / 2) exp(-alpha_k |z_k|). Recognition uses
// Laplace's method around the BPDN mode, with the log-cosh surrogate
// (alpha_k / beta) log cosh(beta z_k) supplying the curvature.

#include <vector>

#include "lvm/em.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

/// `quadratic` swaps the source energy for 1/2 z'z (a standard normal prior),
/// where Laplace's method is exact.
enum class SourceEnergy { laplace, quadratic };

struct SparseCodingParams {
  Mat dict;  // D x K
  double lambda = 1.0;
  Vec alpha;
  double beta = 100.0;
  SourceEnergy source = SourceEnergy::laplace;

  Eigen::Index dim() const { return dict.rows(); }
  Eigen::Index num_sources() const { return dict.cols(); }
  void validate() const;
};

struct LaplaceRecognition {
  Vec mode;
  Mat precision;
};

struct BpdnConfig {
  int max_iter = 10000;
  double gap_tol = 1e-8;
};

/// argmin_z (lambda/2) ||x - C z||^2 + alpha' |z| from z = 0. Throws
/// ConvergenceError with the final subgradient residual after max_iter sweeps.
Vec bpdn_solve(const Mat& dict, const Vec& x, double lambda, const Vec& alpha, const BpdnConfig& config = {});

/// Largest violation of the subgradient optimality conditions at z.
double bpdn_residual(const Mat& dict, const Vec& x, double lambda, const Vec& alpha, const Vec& z);

LaplaceRecognition sc_recognition(const SparseCodingParams& params, const Vec& x, const BpdnConfig& config = {});
/// Laplace approximation to log p(x).
double sc_log_marginal(const SparseCodingParams& params, const Vec& x, const BpdnConfig& config = {});
/// log p(x, z) with all normalizers.
double sc_log_joint(const SparseCodingParams& params, const Vec& x, const Vec& z);

std::vector<LaplaceRecognition> sc_e_step(const SparseCodingParams& params, const Mat& data,
                                           const BpdnConfig& config = {});
/// C = <x nu'> <P^-1 + nu nu'>^-1 over the rows of `data`.
Mat sc_m_step(const Mat& data, const std::vector<LaplaceRecognition>& recs);
/// Same update from recognition means and covariances given directly.
Mat sc_m_step(const Mat& data, const std::vector<Vec>& means, const std::vector<Mat>& covs);
/// Fixed-step gradient descent on the expected emission energy, starting
/// from `dict`; for when the second-moment matrix is ill-conditioned.
Mat sc_m_step_gradient(const Mat& data, const std::vector<LaplaceRecognition>& recs, const Mat& dict,
                       double lambda, double step, int iters);

/// Free energy (nats per sample) of `params` under the Gaussian proxies
/// N(mode, precision^-1).
double sc_free_energy(const SparseCodingParams& params, const Mat& data, const std::vector<LaplaceRecognition>& recs);

/// Unit-norm random Gaussian columns.
Mat sc_initial_dictionary(Eigen::Index dim, Eigen::Index k, Rng& rng);

class SparseCodingEm {
 public:
  SparseCodingEm(const Mat& data, SparseCodingParams init, BpdnConfig bpdn = {});

  double e_step();
  double m_step();
  const SparseCodingParams& params() const { return params_; }

 private:
  const Mat* data_;
  SparseCodingParams params_;
  BpdnConfig bpdn_;
  std::vector<LaplaceRecognition> recs_;
};

/// Learns the dictionary; lambda, alpha and beta stay fixed.
FitReport<SparseCodingParams> fit_sparse_coding(const Mat& data, Eigen::Index k, double lambda, double alpha,
                                                const EmConfig& config);

/// Draws one sample per row: sources from the prior, then the emission.
Mat sc_sample(const SparseCodingParams& params, Eigen::Index n, Rng& rng);

}  // namespace lvm
