#include "lvm/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lvm/errors.hpp"
#include "lvm/gaussian.hpp"

namespace lvm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Mat covariance_floored(const Mat& s) {
  const double d = static_cast<double>(s.rows());
  return floor_eigenvalues(s, 1e-6 * s.trace() / d);
}

Mat global_covariance(const Mat& data) {
  const Vec mean = data.colwise().mean().transpose();
  const Mat centered = data.rowwise() - mean.transpose();
  return covariance_floored(centered.transpose() * centered / static_cast<double>(data.rows()));
}

std::vector<SpdFactor> factor_components(const GmmParams& params) {
  std::vector<SpdFactor> f;
  f.reserve(params.covs.size());
  for (std::size_t k = 0; k < params.covs.size(); ++k)
    f.emplace_back(params.covs[k], "covariance of component " + std::to_string(k));
  return f;
}

// N x K table of log pi_k + log N(x_n; mu_k, Sigma_k) with full constants.
Mat log_joint_table(const GmmParams& params, const Mat& data) {
  params.validate();
  if (data.cols() != params.dim()) throw DimensionError("data dimension does not match the mixture");
  const auto factors = factor_components(params);
  const Eigen::Index k = params.num_components();
  const double d = static_cast<double>(params.dim());
  Mat table(data.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double log_pi = std::log(params.weights(c));
    const double log_det = factors[c].log_det();
    for (Eigen::Index n = 0; n < data.rows(); ++n) {
      const Vec r = data.row(n).transpose() - params.means[c];
      table(n, c) = log_pi - 0.5 * (d * kLog2Pi + log_det + factors[c].quad(r));
    }
  }
  return table;
}

}  // namespace

void GmmParams::validate() const {
  const auto k = static_cast<std::size_t>(weights.size());
  if (k == 0) throw PreconditionError("mixture has no components");
  if (means.size() != k || covs.size() != k) throw DimensionError("mixture needs one mean and covariance per weight");
  const Eigen::Index d = means.front().size();
  for (std::size_t c = 0; c < k; ++c) {
    if (means[c].size() != d || covs[c].rows() != d || covs[c].cols() != d)
      throw DimensionError("component " + std::to_string(c) + " has inconsistent dimension");
  }
}

Vec gmm_log_scores(const GmmParams& params, const Vec& x) {
  params.validate();
  if (x.size() != params.dim()) throw DimensionError("sample dimension does not match the mixture");
  const Eigen::Index k = params.num_components();
  Vec a(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const SpdFactor f(params.covs[c], "covariance of component " + std::to_string(c));
    a(c) = std::log(params.weights(c)) - 0.5 * f.log_det() - 0.5 * f.quad(x - params.means[c]);
  }
  return a;
}

DiscreteDistribution gmm_recognize(const GmmParams& params, const Vec& x) {
  return DiscreteDistribution::from_log_weights(gmm_log_scores(params, x));
}

double gmm_log_marginal(const GmmParams& params, const Vec& x) {
  const double d = static_cast<double>(params.dim());
  return log_sum_exp(gmm_log_scores(params, x)) - 0.5 * d * kLog2Pi;
}

Responsibilities gmm_e_step(const GmmParams& params, const Mat& data) {
  const Mat table = log_joint_table(params, data);
  Responsibilities resp{Mat(table.rows(), table.cols())};
  for (Eigen::Index n = 0; n < table.rows(); ++n)
    resp.table.row(n) = DiscreteDistribution::from_log_weights(table.row(n).transpose()).probs().transpose();
  return resp;
}

GmmParams gmm_m_step(const Mat& data, const Responsibilities& resp) {
  const Mat& r = resp.table;
  if (r.rows() != data.rows()) throw DimensionError("responsibilities need one row per sample");
  const Eigen::Index k = r.cols();
  const Vec mass = r.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < k; ++c)
    if (mass(c) < 1e-12) throw EmptyComponentError(static_cast<int>(c));

  GmmParams p;
  p.weights = DiscreteDistribution::normalized(mass);
  p.means.resize(k);
  p.covs.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Vec mean = data.transpose() * r.col(c) / mass(c);
    const Mat centered = data.rowwise() - mean.transpose();
    const Mat scatter = centered.transpose() * r.col(c).asDiagonal() * centered / mass(c);
    p.means[c] = mean;
    p.covs[c] = covariance_floored(scatter);
  }
  return p;
}

double gmm_equiprob_score(const GmmParams& params, const Vec& x, Eigen::Index i, Eigen::Index j) {
  params.validate();
  for (const Mat& c : params.covs)
    if ((c - params.covs.front()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, params.covs.front().cwiseAbs().maxCoeff()))
      throw PreconditionError("equiprobability score needs a shared covariance");
  const SpdFactor f(params.covs.front(), "shared covariance");
  const Vec diff = params.means[i] - params.means[j];
  const Vec mid = 0.5 * (params.means[i] + params.means[j]);
  return (x - mid).dot(f.solve(diff)) - std::log(params.weights(j) / params.weights(i));
}

double gmm_free_energy(const GmmParams& params, const Mat& data, const Responsibilities& resp) {
  const Mat table = log_joint_table(params, data);
  double acc = 0.0;
  for (Eigen::Index n = 0; n < table.rows(); ++n)
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double q = resp.table(n, c);
      if (q > 0.0) acc += q * (std::log(q) - table(n, c));
    }
  return acc / static_cast<double>(data.rows());
}

GmmParams gmm_initialize(const Mat& data, Eigen::Index k, Rng& rng) {
  if (k < 1) throw PreconditionError("need at least one component");
  if (data.rows() < k) throw PreconditionError("need at least as many samples as components");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates.
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto span = static_cast<std::uint64_t>(data.rows() - c);
    const auto pick = c + static_cast<Eigen::Index>(rng() % span);
    std::swap(idx[c], idx[pick]);
  }
  const Mat cov = global_covariance(data);
  GmmParams p;
  p.weights = DiscreteDistribution::uniform(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    p.means.push_back(data.row(idx[c]).transpose());
    p.covs.push_back(cov);
  }
  return p;
}

GmmEm::GmmEm(const Mat& data, GmmParams init) : data_(&data), params_(std::move(init)) {}

double GmmEm::e_step() {
  const Mat table = log_joint_table(params_, *data_);
  resp_.table.resize(table.rows(), table.cols());
  double acc = 0.0;
  for (Eigen::Index n = 0; n < table.rows(); ++n) {
    const double lse = log_sum_exp(table.row(n).transpose());
    acc += lse;
    resp_.table.row(n) = (table.row(n).array() - lse).exp();
    resp_.table.row(n) /= resp_.table.row(n).sum();
  }
  return -acc / static_cast<double>(table.rows());
}

double GmmEm::m_step() {
  const Vec mass = resp_.table.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < mass.size(); ++c) {
    if (mass(c) >= 1e-12) continue;
    // Re-seed at the worst-explained sample.
    const Mat table = log_joint_table(params_, *data_);
    Eigen::Index worst = 0;
    double worst_ll = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < table.rows(); ++n) {
      const double ll = log_sum_exp(table.row(n).transpose());
      if (ll < worst_ll) {
        worst_ll = ll;
        worst = n;
      }
    }
    resp_.table.row(worst).setZero();
    resp_.table(worst, c) = 1.0;
    ++reseeded_;
  }
  params_ = gmm_m_step(*data_, resp_);
  // A single-sample component has zero scatter; give it the global covariance.
  for (auto& cov : params_.covs)
    if (!(cov.trace() > 0.0)) cov = global_covariance(*data_);
  return gmm_free_energy(params_, *data_, resp_);
}

FitReport<GmmParams> fit_gmm(const Mat& data, Eigen::Index k, const EmConfig& config) {
  return run_em(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        return GmmEm(data, gmm_initialize(data, k, rng));
      },
      config);
}

Eigen::Index nearest_mean(const std::vector<Vec>& means, const Vec& x) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means.size(); ++c) {
    const double d = (x - means[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<Eigen::Index>(c);
    }
  }
  return best;
}

KMeansResult kmeans_from(const Mat& data, std::vector<Vec> means, int max_iter) {
  const auto k = static_cast<Eigen::Index>(means.size());
  if (k < 1) throw PreconditionError("need at least one cluster");
  if (data.rows() < k) throw PreconditionError("need at least as many samples as clusters");
  KMeansResult out;
  out.means = std::move(means);
  std::vector<Eigen::Index> assign(static_cast<std::size_t>(data.rows()), -1);

  for (int it = 0; it <= max_iter; ++it) {
    bool changed = false;
    double distortion = 0.0;
    for (Eigen::Index n = 0; n < data.rows(); ++n) {
      const Vec x = data.row(n).transpose();
      const Eigen::Index c = nearest_mean(out.means, x);
      distortion += (x - out.means[c]).squaredNorm();
      if (assign[n] != c) {
        assign[n] = c;
        changed = true;
      }
    }
    out.distortion_trace.push_back(distortion);
    if (!changed) {
      out.converged = true;
      break;
    }
    if (it == max_iter) break;
    out.iterations = it + 1;

    std::vector<Vec> sums(k, Vec::Zero(data.cols()));
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index n = 0; n < data.rows(); ++n) {
      sums[assign[n]] += data.row(n).transpose();
      ++counts[assign[n]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        out.means[c] = sums[c] / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it to the sample farthest from its own mean.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index n = 0; n < data.rows(); ++n) {
        const double d = (data.row(n).transpose() - out.means[assign[n]]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = n;
        }
      }
      out.means[c] = data.row(far).transpose();
    }
  }
  out.assignments = std::move(assign);
  return out;
}

KMeansResult kmeans(const Mat& data, Eigen::Index k, const KMeansConfig& config) {
  Rng rng(config.seed);
  const GmmParams init = gmm_initialize(data, k, rng);
  return kmeans_from(data, init.means, config.max_iter);
}

}  // namespace lvm
