#include "lvm/sparse_coding.hpp"

#include <cmath>
#include <numbers>

#include "lvm/errors.hpp"
#include "lvm/gaussian.hpp"

namespace lvm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double soft_threshold(double b, double t) {
  if (b > t) return b - t;
  if (b < -t) return b + t;
  return 0.0;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Solve the KKT system on the current support with its signs fixed. Returns
// false when the support matrix is singular or a sign flips.
bool polish(const Mat& dict, const Vec& x, double lambda, const Vec& alpha, Vec& z) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (z(k) != 0.0) support.push_back(k);
  if (support.empty()) return false;
  const auto m = static_cast<Eigen::Index>(support.size());
  Mat cs(dict.rows(), m);
  Vec rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    cs.col(i) = dict.col(support[i]);
    rhs(i) = -alpha(support[i]) * sign(z(support[i]));
  }
  rhs += lambda * cs.transpose() * x;
  Eigen::LLT<Mat> llt(lambda * cs.transpose() * cs);
  if (llt.info() != Eigen::Success) return false;
  const Vec zs = llt.solve(rhs);
  for (Eigen::Index i = 0; i < m; ++i)
    if (sign(zs(i)) != sign(z(support[i]))) return false;
  for (Eigen::Index i = 0; i < m; ++i) z(support[i]) = zs(i);
  return true;
}

double expected_abs(double mu, double var) {
  if (!(var > 0.0)) return std::abs(mu);
  const double s = std::sqrt(var);
  return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * mu * mu / var) +
         mu * (1.0 - std::erfc(mu / (s * std::numbers::sqrt2)));
}

}  // namespace

void SparseCodingParams::validate() const {
  if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (alpha.size() != dict.cols()) throw DimensionError("alpha needs one entry per dictionary column");
  if (alpha.size() > 0 && !(alpha.minCoeff() > 0.0)) throw PreconditionError("alpha must be positive");
  if (!dict.allFinite()) throw PreconditionError("dictionary has non-finite entries");
}

double bpdn_residual(const Mat& dict, const Vec& x, double lambda, const Vec& alpha, const Vec& z) {
  const Vec g = lambda * dict.transpose() * (x - dict * z);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double v = z(k) == 0.0 ? std::max(0.0, std::abs(g(k)) - alpha(k)) : std::abs(g(k) - alpha(k) * sign(z(k)));
    worst = std::max(worst, v);
  }
  return worst;
}

Vec bpdn_solve(const Mat& dict, const Vec& x, double lambda, const Vec& alpha, const BpdnConfig& config) {
  const Eigen::Index k = dict.cols();
  if (x.size() != dict.rows()) throw DimensionError("sample length does not match the dictionary");
  if (alpha.size() != k) throw DimensionError("alpha needs one entry per dictionary column");
  const Vec col_sq = dict.colwise().squaredNorm().transpose();
  Vec z = Vec::Zero(k);
  Vec r = x;  // x - C z
  double residual = bpdn_residual(dict, x, lambda, alpha, z);
  for (int sweep = 0; sweep < config.max_iter && residual > config.gap_tol; ++sweep) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double b = lambda * (dict.col(j).dot(r) + col_sq(j) * z(j));
      const double next = soft_threshold(b, alpha(j)) / (lambda * col_sq(j));
      if (next != z(j)) {
        r -= (next - z(j)) * dict.col(j);
        z(j) = next;
      }
    }
    Vec candidate = z;
    if (polish(dict, x, lambda, alpha, candidate)) {
      const double rc = bpdn_residual(dict, x, lambda, alpha, candidate);
      if (rc <= config.gap_tol) return candidate;
    }
    r = x - dict * z;
    residual = bpdn_residual(dict, x, lambda, alpha, z);
  }
  if (residual > config.gap_tol) throw ConvergenceError(residual);
  return z;
}

double sc_log_joint(const SparseCodingParams& params, const Vec& x, const Vec& z) {
  const double d = static_cast<double>(params.dim());
  const double emit = -0.5 * d * (kLog2Pi - std::log(params.lambda)) -
                      0.5 * params.lambda * (x - params.dict * z).squaredNorm();
  if (params.source == SourceEnergy::quadratic)
    return emit - 0.5 * static_cast<double>(z.size()) * kLog2Pi - 0.5 * z.squaredNorm();
  double src = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) src += std::log(0.5 * params.alpha(k)) - params.alpha(k) * std::abs(z(k));
  return emit + src;
}

LaplaceRecognition sc_recognition(const SparseCodingParams& params, const Vec& x, const BpdnConfig& config) {
  params.validate();
  if (x.size() != params.dim()) throw DimensionError("sample length does not match the dictionary");
  const Mat& c = params.dict;
  const Mat gram = params.lambda * c.transpose() * c;
  LaplaceRecognition rec;
  if (params.source == SourceEnergy::quadratic) {
    rec.precision = symmetrize(gram + Mat::Identity(c.cols(), c.cols()));
    const SpdFactor f(rec.precision, "recognition precision");
    rec.mode = f.solve(Vec(params.lambda * c.transpose() * x));
    return rec;
  }
  rec.mode = bpdn_solve(c, x, params.lambda, params.alpha, config);
  const Vec sech2 = (params.beta * rec.mode).array().cosh().square().inverse().matrix();
  rec.precision = symmetrize(gram + Mat((params.beta * params.alpha.cwiseProduct(sech2)).asDiagonal()));
  return rec;
}

double sc_log_marginal(const SparseCodingParams& params, const Vec& x, const BpdnConfig& config) {
  const LaplaceRecognition rec = sc_recognition(params, x, config);
  const SpdFactor f(rec.precision, "recognition precision");
  return sc_log_joint(params, x, rec.mode) + 0.5 * static_cast<double>(params.num_sources()) * kLog2Pi -
         0.5 * f.log_det();
}

std::vector<LaplaceRecognition> sc_e_step(const SparseCodingParams& params, const Mat& data, const BpdnConfig& config) {
  std::vector<LaplaceRecognition> recs;
  recs.reserve(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index n = 0; n < data.rows(); ++n) recs.push_back(sc_recognition(params, data.row(n).transpose(), config));
  return recs;
}

Mat sc_m_step(const Mat& data, const std::vector<Vec>& means, const std::vector<Mat>& covs) {
  if (means.size() != static_cast<std::size_t>(data.rows()) || covs.size() != means.size())
    throw DimensionError("need one recognition per sample");
  if (means.empty()) throw PreconditionError("no samples");
  const Eigen::Index k = means.front().size();
  Mat x_nu = Mat::Zero(data.cols(), k);
  Mat second = Mat::Zero(k, k);
  for (std::size_t n = 0; n < means.size(); ++n) {
    x_nu += data.row(static_cast<Eigen::Index>(n)).transpose() * means[n].transpose();
    second += covs[n] + means[n] * means[n].transpose();
  }
  Eigen::LLT<Mat> llt(symmetrize(second));
  if (llt.info() != Eigen::Success) throw SingularityError("sum of recognition second moments");
  return llt.solve(x_nu.transpose()).transpose();
}

Mat sc_m_step(const Mat& data, const std::vector<LaplaceRecognition>& recs) {
  std::vector<Vec> means;
  std::vector<Mat> covs;
  for (const auto& r : recs) {
    means.push_back(r.mode);
    covs.push_back(SpdFactor(r.precision, "recognition precision").inverse());
  }
  return sc_m_step(data, means, covs);
}

Mat sc_m_step_gradient(const Mat& data, const std::vector<LaplaceRecognition>& recs, const Mat& dict,
                       double lambda, double step, int iters) {
  if (recs.size() != static_cast<std::size_t>(data.rows())) throw DimensionError("need one recognition per sample");
  const Eigen::Index k = dict.cols();
  Mat x_nu = Mat::Zero(data.cols(), k);
  Mat second = Mat::Zero(k, k);
  for (std::size_t n = 0; n < recs.size(); ++n) {
    x_nu += data.row(static_cast<Eigen::Index>(n)).transpose() * recs[n].mode.transpose();
    second += SpdFactor(recs[n].precision, "recognition precision").inverse() + recs[n].mode * recs[n].mode.transpose();
  }
  const double n = static_cast<double>(recs.size());
  Mat c = dict;
  for (int it = 0; it < iters; ++it) c -= step * lambda * (c * second - x_nu) / n;
  return c;
}

double sc_free_energy(const SparseCodingParams& params, const Mat& data, const std::vector<LaplaceRecognition>& recs) {
  params.validate();
  if (recs.size() != static_cast<std::size_t>(data.rows())) throw DimensionError("need one recognition per sample");
  const double d = static_cast<double>(params.dim());
  const double k = static_cast<double>(params.num_sources());
  const Mat& c = params.dict;
  double total = 0.0;
  for (std::size_t n = 0; n < recs.size(); ++n) {
    const SpdFactor f(recs[n].precision, "recognition precision");
    const Mat cov = f.inverse();
    const Vec& nu = recs[n].mode;
    const Vec x = data.row(static_cast<Eigen::Index>(n)).transpose();
    double e = 0.5 * d * (kLog2Pi - std::log(params.lambda)) +
               0.5 * params.lambda * ((x - c * nu).squaredNorm() + (c * cov * c.transpose()).trace());
    if (params.source == SourceEnergy::quadratic) {
      e += 0.5 * k * kLog2Pi + 0.5 * (nu.squaredNorm() + cov.trace());
    } else {
      for (Eigen::Index j = 0; j < nu.size(); ++j)
        e += std::log(2.0 / params.alpha(j)) + params.alpha(j) * expected_abs(nu(j), cov(j, j));
    }
    const double entropy = 0.5 * (k * (1.0 + kLog2Pi) - f.log_det());
    total += e - entropy;
  }
  return total / static_cast<double>(recs.size());
}

Mat sc_initial_dictionary(Eigen::Index dim, Eigen::Index k, Rng& rng) {
  Mat c(dim, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    c.col(j) = rng.normal_vector(dim);
    c.col(j).normalize();
  }
  return c;
}

SparseCodingEm::SparseCodingEm(const Mat& data, SparseCodingParams init, BpdnConfig bpdn)
    : data_(&data), params_(std::move(init)), bpdn_(bpdn) {}

double SparseCodingEm::e_step() {
  recs_ = sc_e_step(params_, *data_, bpdn_);
  return sc_free_energy(params_, *data_, recs_);
}

double SparseCodingEm::m_step() {
  params_.dict = sc_m_step(*data_, recs_);
  return sc_free_energy(params_, *data_, recs_);
}

FitReport<SparseCodingParams> fit_sparse_coding(const Mat& data, Eigen::Index k, double lambda, double alpha,
                                                const EmConfig& config) {
  return run_em(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        SparseCodingParams p;
        p.dict = sc_initial_dictionary(data.cols(), k, rng);
        p.lambda = lambda;
        p.alpha = Vec::Constant(k, alpha);
        return SparseCodingEm(data, std::move(p));
      },
      config);
}

Mat sc_sample(const SparseCodingParams& params, Eigen::Index n, Rng& rng) {
  params.validate();
  const Eigen::Index k = params.num_sources();
  Mat out(n, params.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec z(k);
    if (params.source == SourceEnergy::quadratic) {
      z = rng.normal_vector(k);
    } else {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double u = rng.uniform() - 0.5;
        z(j) = -sign(u) * std::log1p(-2.0 * std::abs(u)) / params.alpha(j);
      }
    }
    out.row(i) = (params.dict * z + rng.normal_vector(params.dim()) / std::sqrt(params.lambda)).transpose();
  }
  return out;
}

}  // namespace lvm
