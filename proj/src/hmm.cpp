#include "lvm/hmm.hpp"

#include <cmath>
#include <limits>

#include "lvm/errors.hpp"
#include "lvm/gaussian.hpp"
#include "lvm/gmm.hpp"
#include "lvm/recursion.hpp"

namespace lvm {
namespace {

struct DiscreteChainAlgebra {
  const Vec& init;
  const Mat& trans;
  const Mat& log_lik;

  Vec initial() const { return init; }

  Vec time_update(const Vec& filtered, Eigen::Index) const { return trans * filtered; }

  std::pair<Vec, double> measurement_update(const Vec& predicted, Eigen::Index t) const {
    const double shift = log_lik.row(t).maxCoeff();
    if (!std::isfinite(shift)) throw UnderflowError(static_cast<int>(t), "every emission likelihood is zero");
    const Vec u = predicted.cwiseProduct((log_lik.row(t).transpose().array() - shift).exp().matrix());
    const double total = u.sum();
    if (!(total > 0.0)) throw UnderflowError(static_cast<int>(t), "unnormalized filter row is zero");
    return {u / total, std::log(total) + shift};
  }

  // reverse(j, i) = P(z_t = j | z_{t+1} = i, x_1..x_t)
  Mat future_condition(const Vec& filtered, const Vec& predicted_next) const {
    if (!(predicted_next.maxCoeff() > 0.0)) throw UnderflowError(-1, "predictive distribution is zero");
    Mat reverse = (trans * filtered.asDiagonal()).transpose();
    for (Eigen::Index i = 0; i < reverse.cols(); ++i) {
      // A state that cannot be reached carries no smoothed mass; any column will do.
      if (predicted_next(i) > 0.0)
        reverse.col(i) /= predicted_next(i);
      else
        reverse.col(i) = filtered;
    }
    return reverse;
  }

  Vec backward_step(const Vec& smoothed_next, const Mat& reverse) const { return reverse * smoothed_next; }

  Mat pairwise(const Vec& smoothed_next, const Mat& reverse) const {
    return smoothed_next.asDiagonal() * reverse.transpose();
  }
};

Mat rows_to_mat(const std::vector<Vec>& rows, Eigen::Index k) {
  Mat m(static_cast<Eigen::Index>(rows.size()), k);
  for (std::size_t t = 0; t < rows.size(); ++t) m.row(static_cast<Eigen::Index>(t)) = rows[t].transpose();
  return m;
}

std::vector<Vec> mat_to_rows(const Mat& m) {
  std::vector<Vec> rows;
  rows.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) rows.emplace_back(m.row(t).transpose());
  return rows;
}

double xlogy(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(y);
}

double discrete_entropy(const Vec& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) h -= xlogy(p(i), p(i));
  return h;
}

struct SequencePosterior {
  HmmPosteriors post;
  double entropy = 0.0;
};

SequencePosterior posterior_with_entropy(const Mat& trans, const HmmFilterResult& f) {
  const Vec dummy_init = f.predicted.row(0).transpose();
  const Mat no_lik;
  const DiscreteChainAlgebra alg{dummy_init, trans, no_lik};
  const auto filtered = mat_to_rows(f.filter);
  const auto predicted = mat_to_rows(f.predicted);
  const auto pass = run_smoother(alg, filtered, predicted);
  const Eigen::Index k = trans.rows();

  SequencePosterior out;
  out.post.filter = f.filter;
  out.post.smoother = rows_to_mat(pass.smoothed, k);
  out.post.pairwise = pass.pairwise;
  out.post.loglik = f.loglik;
  out.entropy = discrete_entropy(pass.smoothed.back());
  for (std::size_t t = 0; t < pass.reverse.size(); ++t)
    for (Eigen::Index i = 0; i < k; ++i)
      out.entropy += pass.smoothed[t + 1](i) * discrete_entropy(pass.reverse[t].col(i));
  return out;
}

// Pooled covariance of all observations, the scale for the emission floor.
// A per-state relative floor vanishes when a state collapses onto one point.
double pooled_floor(const HmmStats& stats) {
  Vec sum = Vec::Zero(stats.sum_x.front().size());
  Mat sum_sq = Mat::Zero(sum.size(), sum.size());
  for (std::size_t c = 0; c < stats.sum_x.size(); ++c) {
    sum += stats.sum_x[c];
    sum_sq += stats.sum_xx[c];
  }
  const double n = stats.occupancy.sum();
  const Vec mean = sum / n;
  const Mat pooled = sum_sq / n - mean * mean.transpose();
  const double scale = pooled.trace() / static_cast<double>(pooled.rows());
  return 1e-6 * (scale > 0.0 ? scale : 1.0);
}

}  // namespace

void HmmParams::validate() const {
  const Eigen::Index k = init.size();
  if (k == 0) throw PreconditionError("HMM has no states");
  if (trans.rows() != k || trans.cols() != k) throw DimensionError("transition matrix must be K x K");
  if (means.size() != static_cast<std::size_t>(k) || covs.size() != static_cast<std::size_t>(k))
    throw DimensionError("HMM needs one emission mean and covariance per state");
  for (Eigen::Index j = 0; j < k; ++j) DiscreteDistribution check(trans.col(j));
  const Eigen::Index d = means.front().size();
  for (Eigen::Index s = 0; s < k; ++s)
    if (means[s].size() != d || covs[s].rows() != d || covs[s].cols() != d)
      throw DimensionError("emission " + std::to_string(s) + " has inconsistent dimension");
}

Mat hmm_emission_log_likelihoods(const HmmParams& params, const Mat& obs) {
  params.validate();
  if (obs.cols() != params.dim()) throw DimensionError("observation dimension does not match the emissions");
  const Eigen::Index k = params.num_states();
  const double d = static_cast<double>(params.dim());
  Mat ll(obs.rows(), k);
  for (Eigen::Index s = 0; s < k; ++s) {
    const SpdFactor f(params.covs[s], "emission covariance of state " + std::to_string(s));
    const double c = -0.5 * (d * 1.8378770664093454836 + f.log_det());
    for (Eigen::Index t = 0; t < obs.rows(); ++t)
      ll(t, s) = c - 0.5 * f.quad(obs.row(t).transpose() - params.means[s]);
  }
  return ll;
}

HmmFilterResult hmm_filter(const DiscreteDistribution& init, const Mat& trans, const Mat& log_lik) {
  const Eigen::Index k = init.size();
  if (trans.rows() != k || trans.cols() != k || log_lik.cols() != k)
    throw DimensionError("filter inputs disagree on the number of states");
  if (log_lik.rows() < 1) throw PreconditionError("sequence is empty");
  const DiscreteChainAlgebra alg{init.probs(), trans, log_lik};
  const auto pass = run_filter(alg, log_lik.rows());
  HmmFilterResult out;
  out.filter = rows_to_mat(pass.filtered, k);
  out.predicted = rows_to_mat(pass.predicted, k);
  out.log_normalizers = Eigen::Map<const Vec>(pass.log_normalizers.data(), static_cast<Eigen::Index>(pass.log_normalizers.size()));
  out.loglik = pass.loglik;
  return out;
}

HmmFilterResult hmm_filter(const HmmParams& params, const Mat& obs) {
  return hmm_filter(params.init, params.trans, hmm_emission_log_likelihoods(params, obs));
}

HmmPosteriors hmm_smooth_filtered(const Mat& trans, const HmmFilterResult& filtered) {
  return posterior_with_entropy(trans, filtered).post;
}

HmmPosteriors hmm_smoother(const HmmParams& params, const Mat& obs) {
  return hmm_smooth_filtered(params.trans, hmm_filter(params, obs));
}

HmmAlpha hmm_alpha(const HmmParams& params, const Mat& obs) {
  const Mat ll = hmm_emission_log_likelihoods(params, obs);
  if (ll.rows() < 1) throw PreconditionError("sequence is empty");
  HmmAlpha out;
  out.alpha.resize(ll.rows(), ll.cols());
  Vec a = params.init.probs();
  for (Eigen::Index t = 0; t < ll.rows(); ++t) {
    if (t > 0) a = params.trans * a;
    a = a.cwiseProduct(ll.row(t).transpose().array().exp().matrix());
    if (!(a.sum() >= std::numeric_limits<double>::min()))
      throw UnderflowError(static_cast<int>(t), "unscaled forward variables underflowed; use the scaled filter");
    out.alpha.row(t) = a.transpose();
  }
  out.loglik = std::log(a.sum());
  return out;
}

HmmStats hmm_e_step(const HmmParams& params, const std::vector<Mat>& sequences) {
  params.validate();
  const Eigen::Index k = params.num_states();
  const Eigen::Index d = params.dim();
  HmmStats s;
  s.init_counts = Vec::Zero(k);
  s.trans_counts = Mat::Zero(k, k);
  s.occupancy = Vec::Zero(k);
  s.sum_x.assign(k, Vec::Zero(d));
  s.sum_xx.assign(k, Mat::Zero(d, d));
  for (const Mat& obs : sequences) {
    const auto sp = posterior_with_entropy(params.trans, hmm_filter(params, obs));
    const Mat& g = sp.post.smoother;
    s.init_counts += g.row(0).transpose();
    for (const Mat& p : sp.post.pairwise) s.trans_counts += p;
    s.occupancy += g.colwise().sum().transpose();
    for (Eigen::Index c = 0; c < k; ++c) {
      s.sum_x[c] += obs.transpose() * g.col(c);
      s.sum_xx[c] += obs.transpose() * g.col(c).asDiagonal() * obs;
    }
    s.loglik += sp.post.loglik;
    s.entropy += sp.entropy;
    s.num_obs += static_cast<double>(obs.rows());
  }
  if (s.num_obs == 0.0) throw PreconditionError("no observations");
  return s;
}

HmmParams hmm_m_step(const HmmStats& stats) {
  const Eigen::Index k = stats.occupancy.size();
  for (Eigen::Index c = 0; c < k; ++c)
    if (stats.occupancy(c) < 1e-12) throw EmptyComponentError(static_cast<int>(c));
  HmmParams p;
  p.init = DiscreteDistribution::normalized(stats.init_counts);
  p.trans.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double from = stats.trans_counts.col(j).sum();
    if (!(from > 0.0)) throw EmptyComponentError(static_cast<int>(j));
    p.trans.col(j) = stats.trans_counts.col(j) / from;
  }
  const double floor = pooled_floor(stats);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Vec mean = stats.sum_x[c] / stats.occupancy(c);
    p.means.push_back(mean);
    p.covs.push_back(floor_eigenvalues(symmetrize(stats.sum_xx[c] / stats.occupancy(c) - mean * mean.transpose()), floor));
  }
  return p;
}

double hmm_free_energy(const HmmParams& params, const HmmStats& stats) {
  params.validate();
  const Eigen::Index k = params.num_states();
  const double d = static_cast<double>(params.dim());
  double energy = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    energy -= xlogy(stats.init_counts(i), params.init(i));
    for (Eigen::Index j = 0; j < k; ++j) energy -= xlogy(stats.trans_counts(i, j), params.trans(i, j));
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    const SpdFactor f(params.covs[c], "emission covariance of state " + std::to_string(c));
    const Vec& mu = params.means[c];
    const Mat scatter = stats.sum_xx[c] - stats.sum_x[c] * mu.transpose() - mu * stats.sum_x[c].transpose() +
                        stats.occupancy(c) * mu * mu.transpose();
    energy += 0.5 * (stats.occupancy(c) * (d * 1.8378770664093454836 + f.log_det()) + f.solve(scatter).trace());
  }
  return (energy - stats.entropy) / stats.num_obs;
}

HmmParams hmm_initialize(const std::vector<Mat>& sequences, Eigen::Index k, Rng& rng) {
  if (sequences.empty()) throw PreconditionError("no sequences");
  Eigen::Index rows = 0;
  for (const Mat& s : sequences) rows += s.rows();
  Mat all(rows, sequences.front().cols());
  Eigen::Index at = 0;
  for (const Mat& s : sequences) {
    if (s.cols() != all.cols()) throw DimensionError("sequences disagree on dimension");
    all.middleRows(at, s.rows()) = s;
    at += s.rows();
  }
  const GmmParams g = gmm_initialize(all, k, rng);
  HmmParams p;
  p.init = DiscreteDistribution::uniform(k);
  p.trans.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Vec col(k);
    for (Eigen::Index i = 0; i < k; ++i) col(i) = rng.uniform() + (i == j ? static_cast<double>(k) : 0.0);
    p.trans.col(j) = col / col.sum();
  }
  p.means = g.means;
  p.covs = g.covs;
  return p;
}

HmmEm::HmmEm(const std::vector<Mat>& sequences, HmmParams init) : sequences_(&sequences), params_(std::move(init)) {}

double HmmEm::e_step() {
  stats_ = hmm_e_step(params_, *sequences_);
  return hmm_free_energy(params_, stats_);
}

double HmmEm::m_step() {
  params_ = hmm_m_step(stats_);
  return hmm_free_energy(params_, stats_);
}

FitReport<HmmParams> fit_hmm(const std::vector<Mat>& sequences, Eigen::Index k, const EmConfig& config) {
  return run_em(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        return HmmEm(sequences, hmm_initialize(sequences, k, rng));
      },
      config);
}

std::pair<std::vector<Eigen::Index>, Mat> hmm_sample(const HmmParams& params, Eigen::Index steps, Rng& rng) {
  params.validate();
  std::vector<Mat> chol;
  for (const Mat& c : params.covs) chol.push_back(Eigen::LLT<Mat>(c).matrixL());
  std::vector<Eigen::Index> path;
  Mat obs(steps, params.dim());
  Eigen::Index z = 0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    z = rng.categorical(t == 0 ? params.init.probs() : Vec(params.trans.col(z)));
    path.push_back(z);
    obs.row(t) = (params.means[z] + chol[z] * rng.normal_vector(params.dim())).transpose();
  }
  return {path, obs};
}

}  // namespace lvm
