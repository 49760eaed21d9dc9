#pragma once

// Linear-Gaussian state-space model
//   z_1 ~ N(mu1, V1),  z_t = A z_{t-1} + B u_t + a + w_t,  x_t = C z_t + c + v_t.
// Control row t drives the transition into step t; row 0 is unused.

#include <vector>

#include "lvm/em.hpp"
#include "lvm/gaussian.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

struct SsmParams {
  AffineGaussianChannel trans;  // A, a, Q
  Mat control_gain;             // B, K x U (U may be 0)
  AffineGaussianChannel emission;  // C, c, R
  GaussianBelief init;          // mu1, V1

  Eigen::Index state_dim() const { return trans.input_dim(); }
  Eigen::Index obs_dim() const { return emission.output_dim(); }
  Eigen::Index control_dim() const { return control_gain.cols(); }
  void validate() const;
};

struct SsmPosteriors {
  std::vector<GaussianBelief> filtered;
  std::vector<GaussianBelief> predicted;
  std::vector<GaussianBelief> smoothed;
  /// cross_cov[t] = Cov[z_{t+1}, z_t | x]
  std::vector<Mat> cross_cov;
  double loglik = 0.0;
};

GaussianBelief kf_time_update(const GaussianBelief& belief, const SsmParams& params, const Vec& control);

struct MeasurementUpdate {
  GaussianBelief belief;
  double log_evidence = 0.0;
};
MeasurementUpdate kf_measurement_update(const GaussianBelief& belief, const SsmParams& params, const Vec& obs);

struct KalmanFilterResult {
  std::vector<GaussianBelief> filtered;
  std::vector<GaussianBelief> predicted;
  double loglik = 0.0;
};

/// `controls` is T x U, or empty when the model has no controls.
KalmanFilterResult kalman_filter(const SsmParams& params, const Mat& obs, const Mat& controls = Mat());

struct RtsResult {
  std::vector<GaussianBelief> smoothed;
  std::vector<Mat> cross_cov;
};

/// Consumes filter statistics only.
RtsResult rts_smoother(const SsmParams& params, const std::vector<GaussianBelief>& filtered,
                       const std::vector<GaussianBelief>& predicted);

SsmPosteriors kalman_smoother(const SsmParams& params, const Mat& obs, const Mat& controls = Mat());

/// Expected sufficient statistics summed over sequences. The transition
/// regressor is r_t = [z_{t-1}; u_t; 1] and the emission regressor [z_t; 1].
struct LdsStats {
  Mat sum_next_reg;     // sum_{t>=2} E[z_t r_t']
  Mat sum_reg_reg;      // sum_{t>=2} E[r_t r_t']
  Mat sum_next_next;    // sum_{t>=2} E[z_t z_t']
  double n_trans = 0.0; // sum (T - 1)
  Mat sum_x_reg;        // sum_t x_t E[z_t; 1]'
  Mat sum_emit_reg;     // sum_t E[[z_t; 1][z_t; 1]']
  Mat sum_xx;           // sum_t x_t x_t'
  double n_emit = 0.0;  // sum T
  Vec sum_z1;
  Mat sum_z1z1;
  double n_seq = 0.0;
  Eigen::Index control_dim = 0;
  double loglik = 0.0;
  /// Entropy of the joint state posterior, summed over sequences.
  double entropy = 0.0;
};

/// `controls` is empty or holds one T x U matrix per sequence.
LdsStats lds_e_step(const SsmParams& params, const std::vector<Mat>& sequences,
                    const std::vector<Mat>& controls = {});
/// Closed-form maximization; Q, R and V1 are symmetrized and floored at
/// 1e-10 * trace / dim.
SsmParams lds_m_step(const LdsStats& stats);
/// Free energy (nats per observation) of `params` under the held posterior.
double lds_free_energy(const SsmParams& params, const LdsStats& stats);

/// C from the top principal directions of the data, c at the mean, R at the
/// residual variance, A = 0.9 I plus a small seeded perturbation.
SsmParams lds_initialize(const std::vector<Mat>& sequences, Eigen::Index k, Eigen::Index control_dim, Rng& rng);

class LdsEm {
 public:
  LdsEm(const std::vector<Mat>& sequences, const std::vector<Mat>& controls, SsmParams init);

  double e_step();
  double m_step();
  const SsmParams& params() const { return params_; }

 private:
  const std::vector<Mat>* sequences_;
  const std::vector<Mat>* controls_;
  SsmParams params_;
  LdsStats stats_;
};

FitReport<SsmParams> fit_lds(const std::vector<Mat>& sequences, Eigen::Index k, const EmConfig& config,
                             const std::vector<Mat>& controls = {});

struct SsmSample {
  Mat states;  // T x K
  Mat obs;     // T x D
};
SsmSample ssm_sample(const SsmParams& params, Eigen::Index steps, Rng& rng, const Mat& controls = Mat());

}  // namespace lvm
