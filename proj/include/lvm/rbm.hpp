#pragma once

// Binary-binary restricted Boltzmann machine,
//   E(v, h) = -b_v'v - b_h'h - v'W h,  p(v, h) = exp(-E) / Z.
// Visible configurations are indexed by the integer whose bit i is v_i.

#include <vector>

#include "lvm/info.hpp"
#include "lvm/rng.hpp"
#include "lvm/types.hpp"

namespace lvm {

struct RbmParams {
  Mat weights;  // V x H
  Vec visible_bias;
  Vec hidden_bias;

  Eigen::Index num_visible() const { return weights.rows(); }
  Eigen::Index num_hidden() const { return weights.cols(); }
  void validate() const;
  static RbmParams zeros(Eigen::Index v, Eigen::Index h);
};

/// Gradient of a loss with respect to (W, b_v, b_h).
struct RbmGradient {
  Mat d_weights;
  Vec d_visible;
  Vec d_hidden;

  Vec flat() const;
  RbmGradient& operator+=(const RbmGradient& o);
  RbmGradient& operator*=(double s);
};

/// Throws PreconditionError unless every entry is 0 or 1.
void check_binary(const Mat& states);

double rbm_energy(const RbmParams& params, const Vec& v, const Vec& h);

enum class Given { visible, hidden };
/// sigma(b_h + W'v) given visible states, sigma(b_v + W h) given hidden.
Vec rbm_conditionals(const RbmParams& params, Given given, const Vec& state);

/// log sum over all 2^(V+H) joint configurations; SizeError when V + H > 22.
double log_partition_bruteforce(const RbmParams& params);

/// log sum_h exp(-E(v, h)), closed form over the hidden units.
double rbm_unnormalized_log_marginal(const RbmParams& params, const Vec& v);
/// Model marginal over the 2^V visible configurations (V <= 22).
Vec rbm_visible_distribution(const RbmParams& params);
/// Visible configuration of an index.
Vec visible_state(Eigen::Index index, Eigen::Index v);
/// Empirical distribution of the rows of `data` over visible configurations.
Vec empirical_visible_distribution(const Mat& data);
/// KL(data || model marginal) in nats.
double rbm_kl_to_data(const RbmParams& params, const Mat& data);

/// Gradient of -<log p(v)>_data: <s>_model - <s>_data, both exact.
RbmGradient exact_kl_gradient(const RbmParams& params, const Mat& data);

/// Per-chain CD-n statistics differences <s^n> - <s^0>, one chain per data
/// row, in the same orientation as exact_kl_gradient. Hidden units are
/// sampled during the chain and replaced by their means at both ends.
std::vector<RbmGradient> cd_n_chain_gradients(const RbmParams& params, const Mat& data, int n, Rng& rng);
RbmGradient cd_n_gradient(const RbmParams& params, const Mat& data, int n, Rng& rng);

/// Angle in radians between two gradients.
double gradient_angle(const RbmGradient& a, const RbmGradient& b);

/// Visible Gibbs kernel T(v' | v) = sum_h p(h | v) p(v' | h) as a
/// column-stochastic 2^V x 2^V matrix.
Mat rbm_visible_gibbs_kernel(const RbmParams& params);
/// KL(p0 || p) - KL(T^n p0 || p) over visible configurations.
double contrastive_divergence(const RbmParams& params, const Vec& p0, int n);

/// Joint distribution over (v, h) indexed by v_index + 2^V * h_index.
Vec rbm_joint_distribution(const RbmParams& params);
/// One block-Gibbs sweep (h' ~ p(h | v), then v' ~ p(v | h')) as a
/// column-stochastic operator on joint configurations.
Mat rbm_gibbs_sweep_operator(const RbmParams& params);

/// Full-batch gradient descent on CD-n gradients at a constant rate.
RbmParams rbm_train_cd(RbmParams params, const Mat& data, int n, double learning_rate, int steps, Rng& rng);

/// n samples from independent Gibbs chains after `burn_in` sweeps.
Mat rbm_sample(const RbmParams& params, Eigen::Index n, int burn_in, Rng& rng);

/// The RBM read as a discrete latent-variable model over 2^H hidden classes
/// and 2^V visible symbols.
DiscreteLatentModel rbm_as_latent_model(const RbmParams& params);

}  // namespace lvm
