#include "lvm/info.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lvm/errors.hpp"

namespace lvm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double scale(LogBase base) { return base == LogBase::two ? 1.0 / std::numbers::ln2 : 1.0; }

// -sum_k p_k log q_k, with 0 log anything = 0.
double xlogy_sum(const Vec& p, const Vec& q) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) == 0.0) continue;
    if (q(k) <= 0.0) return kInf;
    acc -= p(k) * std::log(q(k));
  }
  return acc;
}

void require_same_size(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) throw DimensionError("distributions have different support sizes");
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(Vec probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw PreconditionError("empty distribution");
  if (!probs_.allFinite() || probs_.minCoeff() < 0.0) throw PreconditionError("negative or non-finite probability");
  if (std::abs(probs_.sum() - 1.0) > 1e-12)
    throw PreconditionError("probabilities sum to " + std::to_string(probs_.sum()));
}

DiscreteDistribution DiscreteDistribution::normalized(const Vec& weights) {
  if (weights.size() == 0 || !weights.allFinite() || weights.minCoeff() < 0.0)
    throw PreconditionError("weights must be finite and non-negative");
  const double total = weights.sum();
  if (!(total > 0.0)) throw PreconditionError("weights have zero total mass");
  return DiscreteDistribution(weights / total);
}

DiscreteDistribution DiscreteDistribution::uniform(Eigen::Index k) {
  return DiscreteDistribution(Vec::Constant(k, 1.0 / static_cast<double>(k)));
}

DiscreteDistribution DiscreteDistribution::from_log_weights(const Vec& log_weights) {
  const double m = log_weights.maxCoeff();
  if (!std::isfinite(m)) throw PreconditionError("no finite log weight");
  return normalized((log_weights.array() - m).exp().matrix());
}

Eigen::Index DiscreteDistribution::argmax() const {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < probs_.size(); ++k)
    if (probs_(k) > probs_(best)) best = k;
  return best;
}

double entropy(const DiscreteDistribution& p, LogBase base) {
  return xlogy_sum(p.probs(), p.probs()) * scale(base);
}

double cross_entropy(const DiscreteDistribution& p, const DiscreteDistribution& q, LogBase base) {
  require_same_size(p, q);
  return xlogy_sum(p.probs(), q.probs()) * scale(base);
}

double kl(const DiscreteDistribution& p, const DiscreteDistribution& q, LogBase base) {
  require_same_size(p, q);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) == 0.0) continue;
    if (q(k) <= 0.0) return kInf;
    acc += p(k) * std::log(p(k) / q(k));
  }
  return std::max(acc, 0.0) * scale(base);
}

DiscreteLatentModel::DiscreteLatentModel(DiscreteDistribution source, Mat emission)
    : source_(std::move(source)), emission_(std::move(emission)) {
  if (emission_.rows() != source_.size())
    throw DimensionError("emission needs one row per latent class");
  for (Eigen::Index k = 0; k < emission_.rows(); ++k) DiscreteDistribution(emission_.row(k).transpose());
}

Vec DiscreteLatentModel::marginal() const { return emission_.transpose() * source_.probs(); }

Mat DiscreteLatentModel::recognition() const {
  const Vec px = marginal();
  Mat rec(num_symbols(), num_latent());
  for (Eigen::Index x = 0; x < num_symbols(); ++x) {
    if (px(x) > 0.0)
      rec.row(x) = (source_.probs().array() * emission_.col(x).array()).transpose() / px(x);
    else
      rec.row(x) = source_.probs().transpose();
  }
  return rec;
}

Mat hard_recognition(const DiscreteLatentModel& model) {
  const Mat rec = model.recognition();
  Mat hard = Mat::Zero(rec.rows(), rec.cols());
  for (Eigen::Index x = 0; x < rec.rows(); ++x) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < rec.cols(); ++k)
      if (rec(x, k) > rec(x, best)) best = k;
    hard(x, best) = 1.0;
  }
  return hard;
}

double marginal_cross_entropy(const DiscreteLatentModel& model, const DiscreteDistribution& data) {
  if (data.size() != model.num_symbols()) throw DimensionError("data support must match emission symbols");
  return xlogy_sum(data.probs(), model.marginal());
}

double free_energy(const DiscreteLatentModel& model, const Mat& proxy, const DiscreteDistribution& data) {
  const CodingCostReport r = bits_back_costs(model, data, proxy);
  return r.stochastic_cost_before_refund - r.refund;
}

CodingCostReport bits_back_costs(const DiscreteLatentModel& model, const DiscreteDistribution& data,
                                 const ProxyChoice& choice) {
  const Eigen::Index nv = model.num_symbols();
  const Eigen::Index nk = model.num_latent();
  if (data.size() != nv) throw DimensionError("data support must match emission symbols");

  const Mat exact = model.recognition();
  const Mat hard = hard_recognition(model);
  Mat proxy;
  if (std::holds_alternative<ExactProxy>(choice)) {
    proxy = exact;
  } else if (std::holds_alternative<HardProxy>(choice)) {
    proxy = hard;
  } else {
    proxy = std::get<Mat>(choice);
    if (proxy.rows() != nv || proxy.cols() != nk) throw DimensionError("proxy must be V x K");
    for (Eigen::Index x = 0; x < nv; ++x) DiscreteDistribution(proxy.row(x).transpose());
  }

  // Cost of sending (class, misfit) pairs with classes drawn from `q`.
  const auto joint_cost = [&](const Mat& q) {
    double acc = 0.0;
    for (Eigen::Index x = 0; x < nv; ++x) {
      if (data(x) == 0.0) continue;
      for (Eigen::Index k = 0; k < nk; ++k) {
        if (q(x, k) == 0.0) continue;
        const double pj = model.source()(k) * model.emission()(k, x);
        if (pj <= 0.0) return kInf;
        acc -= data(x) * q(x, k) * std::log(pj);
      }
    }
    return acc;
  };

  CodingCostReport r;
  r.marginal_cross_entropy = marginal_cross_entropy(model, data);
  r.hard_assignment_cost = joint_cost(hard);
  r.stochastic_cost_before_refund = joint_cost(proxy);
  for (Eigen::Index x = 0; x < nv; ++x) {
    if (data(x) == 0.0) continue;
    const Vec qx = proxy.row(x).transpose();
    const Vec px = exact.row(x).transpose();
    r.refund += data(x) * xlogy_sum(qx, qx);
    double k_acc = 0.0;
    for (Eigen::Index k = 0; k < nk; ++k) {
      if (qx(k) == 0.0) continue;
      if (px(k) <= 0.0) {
        k_acc = kInf;
        break;
      }
      k_acc += qx(k) * std::log(qx(k) / px(k));
    }
    r.proxy_kl += data(x) * k_acc;
  }
  r.proxy_kl = std::max(r.proxy_kl, 0.0);
  return r;
}

}  // namespace lvm
