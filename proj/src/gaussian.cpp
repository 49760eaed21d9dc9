#include "lvm/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "lvm/errors.hpp"

namespace lvm {
namespace {

double min_eig(const Mat& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

void require_psd(const Mat& s, const char* what) {
  if (s.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (!(ev(0) >= -1e-10 * scale))
    throw PreconditionError(std::string(what) + " is not positive semi-definite (min eigenvalue " +
                            std::to_string(ev(0)) + ")");
}

bool numerically_pd(const Mat& s) {
  if (s.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev(0) > 1e-12 * ev(ev.size() - 1) && ev(0) > 0.0;
}

void require_conformable(const GaussianBelief& source, const AffineGaussianChannel& channel) {
  if (channel.input_dim() != source.dim())
    throw DimensionError("channel expects source dimension " + std::to_string(channel.input_dim()) +
                         ", got " + std::to_string(source.dim()));
}

}  // namespace

GaussianBelief::GaussianBelief(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
    throw DimensionError("belief covariance must be " + std::to_string(mean_.size()) + "x" +
                         std::to_string(mean_.size()));
  if (!mean_.allFinite() || !cov_.allFinite()) throw PreconditionError("belief has non-finite entries");
  cov_ = symmetrize(cov_);
  require_psd(cov_, "belief covariance");
}

GaussianBelief GaussianBelief::standard(Eigen::Index dim) {
  return GaussianBelief(Vec::Zero(dim), Mat::Identity(dim, dim));
}

double GaussianBelief::min_eigenvalue() const { return min_eig(cov_); }

AffineGaussianChannel::AffineGaussianChannel(Mat weights, Vec offset, Mat noise_cov)
    : weights_(std::move(weights)), offset_(std::move(offset)), noise_cov_(std::move(noise_cov)) {
  if (weights_.rows() != offset_.size())
    throw DimensionError("channel weights have " + std::to_string(weights_.rows()) +
                         " rows but offset has length " + std::to_string(offset_.size()));
  if (noise_cov_.rows() != offset_.size() || noise_cov_.cols() != offset_.size())
    throw DimensionError("channel noise covariance must match the output dimension");
  noise_cov_ = symmetrize(noise_cov_);
  require_psd(noise_cov_, "channel noise covariance");
}

SpdFactor::SpdFactor(const Mat& s, const std::string& what) {
  if (s.rows() != s.cols()) throw DimensionError(what + " is not square");
  llt_.compute(s);
  if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) return;
  const double jitter = s.rows() > 0 ? 1e-9 * s.diagonal().mean() : 0.0;
  if (jitter > 0.0) {
    llt_.compute(s + jitter * Mat::Identity(s.rows(), s.cols()));
    if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) return;
  }
  throw SingularityError(what);
}

Mat SpdFactor::inverse() const { return symmetrize(llt_.solve(Mat::Identity(dim(), dim()))); }

double SpdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double SpdFactor::quad(const Vec& x) const {
  const Vec y = llt_.matrixL().solve(x);
  return y.squaredNorm();
}

GaussianBelief marginal_cumulants(const GaussianBelief& source, const AffineGaussianChannel& channel) {
  require_conformable(source, channel);
  const Mat& w = channel.weights();
  return GaussianBelief(w * source.mean() + channel.offset(),
                        w * source.cov() * w.transpose() + channel.noise_cov());
}

Mat cross_covariance(const GaussianBelief& source, const AffineGaussianChannel& channel) {
  require_conformable(source, channel);
  return source.cov() * channel.weights().transpose();
}

GainMatrix gain(const GaussianBelief& source, const AffineGaussianChannel& channel) {
  require_conformable(source, channel);
  const Mat& w = channel.weights();
  const Mat marginal = symmetrize(w * source.cov() * w.transpose() + channel.noise_cov());
  const SpdFactor f(marginal, "marginal covariance");
  // K' = S^-1 W Sigma_z since S and Sigma_z are symmetric.
  return GainMatrix{f.solve(Mat(w * source.cov())).transpose()};
}

GaussianBelief bayes_invert(const GaussianBelief& source, const AffineGaussianChannel& channel,
                            const Vec& obs, BayesForm form) {
  require_conformable(source, channel);
  if (obs.size() != channel.output_dim())
    throw DimensionError("observation has length " + std::to_string(obs.size()) + ", expected " +
                         std::to_string(channel.output_dim()));
  if (form == BayesForm::automatic)
    form = channel.output_dim() < source.dim() ? BayesForm::woodbury : BayesForm::direct;
  if (form == BayesForm::direct && !numerically_pd(source.cov())) form = BayesForm::woodbury;

  const Mat& w = channel.weights();
  const Vec innovation = obs - (w * source.mean() + channel.offset());

  if (form == BayesForm::woodbury) {
    const Mat marginal = symmetrize(w * source.cov() * w.transpose() + channel.noise_cov());
    const SpdFactor f(marginal, "marginal covariance");
    const Mat kt = f.solve(Mat(w * source.cov()));  // K'
    const Vec mean = source.mean() + kt.transpose() * innovation;
    const Mat cov = source.cov() - kt.transpose() * marginal * kt;
    return GaussianBelief(mean, cov);
  }

  const SpdFactor noise(channel.noise_cov(), "emission noise covariance");
  const SpdFactor prior(source.cov(), "source covariance");
  const Mat noise_inv_w = noise.solve(w);
  const Mat precision = symmetrize(w.transpose() * noise_inv_w + prior.inverse());
  const SpdFactor post(precision, "recognition precision");
  const Vec rhs = noise_inv_w.transpose() * (obs - channel.offset()) + prior.solve(source.mean());
  return GaussianBelief(post.solve(rhs), post.inverse());
}

Mat woodbury_inverse(const Mat& a, const Mat& u, const Mat& c, const Mat& v) {
  if (a.rows() != a.cols() || c.rows() != c.cols()) throw DimensionError("A and C must be square");
  if (u.rows() != a.rows() || u.cols() != c.rows() || v.rows() != c.cols() || v.cols() != a.cols())
    throw DimensionError("woodbury operands do not conform");
  const Eigen::FullPivLU<Mat> a_lu(a);
  if (!a_lu.isInvertible()) throw SingularityError("A");
  const Eigen::FullPivLU<Mat> c_lu(c);
  if (!c_lu.isInvertible()) throw SingularityError("C");
  const Mat a_inv_u = a_lu.solve(u);
  const Mat a_inv = a_lu.inverse();
  const Mat inner = c_lu.inverse() + v * a_inv_u;
  const Eigen::FullPivLU<Mat> inner_lu(inner);
  if (!inner_lu.isInvertible()) throw SingularityError("C^-1 + V A^-1 U");
  return a_inv - a_inv_u * inner_lu.solve(Mat(v * a_inv));
}

double expected_quadratic(const GaussianBelief& belief, const Mat& w, const Mat& a, const Vec& b) {
  if (w.cols() != belief.dim() || a.rows() != w.rows() || a.cols() != w.rows() || b.size() != w.rows())
    throw DimensionError("expected_quadratic operands do not conform");
  const Vec r = b - w * belief.mean();
  return (a * w * belief.cov() * w.transpose()).trace() + r.dot(a * r);
}

double gaussian_log_density(const Vec& x, const Vec& mean, const Mat& cov) {
  if (x.size() != mean.size() || cov.rows() != mean.size()) throw DimensionError("density operands do not conform");
  const SpdFactor f(cov, "covariance");
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + f.log_det() + f.quad(x - mean));
}

double gaussian_entropy(const Mat& cov) {
  const SpdFactor f(cov, "covariance");
  const double d = static_cast<double>(cov.rows());
  return 0.5 * (d * (1.0 + std::log(2.0 * std::numbers::pi)) + f.log_det());
}

Mat floor_eigenvalues(const Mat& s, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s));
  if (es.eigenvalues()(0) >= floor) return symmetrize(s);
  const Vec clamped = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace lvm
