#pragma once

// Information measures, the free-energy functional of discrete latent
// models, and bits-back coding-cost accounting by exact enumeration.
// All quantities are in nats unless a base is requested.

#include <variant>

#include "lvm/types.hpp"

namespace lvm {

/// Probability vector: non-negative entries summing to one within 1e-12.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  explicit DiscreteDistribution(Vec probs);

  /// Normalizes non-negative weights with a positive total.
  static DiscreteDistribution normalized(const Vec& weights);
  static DiscreteDistribution uniform(Eigen::Index k);
  /// softmax(scores); robust to arbitrarily large shifts.
  static DiscreteDistribution from_log_weights(const Vec& log_weights);

  const Vec& probs() const { return probs_; }
  double operator()(Eigen::Index k) const { return probs_(k); }
  Eigen::Index size() const { return probs_.size(); }
  /// Lowest index among the maxima.
  Eigen::Index argmax() const;

 private:
  Vec probs_;
};

enum class LogBase { e, two };

double entropy(const DiscreteDistribution& p, LogBase base = LogBase::e);
/// -sum p log q; +inf when p puts mass where q has none.
double cross_entropy(const DiscreteDistribution& p, const DiscreteDistribution& q,
                     LogBase base = LogBase::e);
double kl(const DiscreteDistribution& p, const DiscreteDistribution& q, LogBase base = LogBase::e);

/// Source over K latent classes with a categorical emission over V symbols
/// per class (row k of `emission` is p(x | z = k)).
class DiscreteLatentModel {
 public:
  DiscreteLatentModel(DiscreteDistribution source, Mat emission);

  const DiscreteDistribution& source() const { return source_; }
  const Mat& emission() const { return emission_; }
  Eigen::Index num_latent() const { return emission_.rows(); }
  Eigen::Index num_symbols() const { return emission_.cols(); }

  /// p(x) for every symbol.
  Vec marginal() const;
  /// V x K table of p(z | x); rows for symbols of zero marginal fall back to
  /// the source distribution.
  Mat recognition() const;

 private:
  DiscreteDistribution source_;
  Mat emission_;
};

/// E_{data * proxy}[log proxy - log joint]. `proxy` is V x K with one
/// recognition row per symbol.
double free_energy(const DiscreteLatentModel& model, const Mat& proxy, const DiscreteDistribution& data);

/// -E_data[log p(x)]
double marginal_cross_entropy(const DiscreteLatentModel& model, const DiscreteDistribution& data);

struct CodingCostReport {
  double marginal_cross_entropy = 0.0;
  /// Class cost plus misfit cost when every datum is sent with the argmax class.
  double hard_assignment_cost = 0.0;
  /// Class cost plus misfit cost when classes are drawn from the proxy.
  double stochastic_cost_before_refund = 0.0;
  /// Bits recovered by the receiver: the proxy recognition entropy.
  double refund = 0.0;
  /// KL(proxy || model recognition), averaged over the data.
  double proxy_kl = 0.0;
};

struct ExactProxy {};
struct HardProxy {};
using ProxyChoice = std::variant<ExactProxy, HardProxy, Mat>;

/// Argmax recognition as a point mass (ties to the lowest class index).
Mat hard_recognition(const DiscreteLatentModel& model);

CodingCostReport bits_back_costs(const DiscreteLatentModel& model, const DiscreteDistribution& data,
                                 const ProxyChoice& proxy);

/// Nats to bits.
inline double to_bits(double nats) { return nats / 0.69314718055994530942; }

}  // namespace lvm
