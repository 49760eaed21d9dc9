#include "lvm/factor_analysis.hpp"

#include <cmath>

#include "lvm/errors.hpp"
#include "lvm/log.hpp"

namespace lvm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNoiseFloor = 1e-10;

struct Recognizer {
  Mat cov;       // (C' D^-1 C + I)^-1
  Mat rec_gain;  // cov C' D^-1, so E[z|x] = rec_gain (x - c)
};

Recognizer recognizer(const FaParams& p) {
  const Mat cd = p.loading.transpose() * p.diag_noise.cwiseInverse().asDiagonal();
  const Mat prec = symmetrize(cd * p.loading + Mat::Identity(p.num_factors(), p.num_factors()));
  const SpdFactor f(prec, "recognition precision");
  Recognizer r;
  r.cov = symmetrize(f.inverse());
  r.rec_gain = f.solve(cd);
  return r;
}

}  // namespace

void FaParams::validate() const {
  if (offset.size() != loading.rows() || diag_noise.size() != loading.rows())
    throw DimensionError("loading, offset and noise must share the data dimension");
  if (!loading.allFinite() || !offset.allFinite() || !diag_noise.allFinite())
    throw PreconditionError("factor analyzer parameters must be finite");
  if (diag_noise.size() > 0 && diag_noise.minCoeff() < kNoiseFloor)
    throw PreconditionError("noise variances must be at least 1e-10");
}

AffineGaussianChannel FaParams::channel() const {
  return AffineGaussianChannel(loading, offset, Mat(diag_noise.asDiagonal()));
}

GaussianBelief fa_recognize(const FaParams& params, const Vec& x) {
  params.validate();
  if (x.size() != params.dim()) throw DimensionError("sample dimension does not match the loading");
  const Recognizer r = recognizer(params);
  return GaussianBelief(r.rec_gain * (x - params.offset), r.cov);
}

double fa_log_marginal(const FaParams& params, const Vec& x) {
  return fa_mean_log_likelihood(params, x.transpose());
}

double fa_mean_log_likelihood(const FaParams& params, const Mat& data) {
  params.validate();
  if (data.cols() != params.dim()) throw DimensionError("data dimension does not match the loading");
  // Determinant lemma and Woodbury on C C' + D.
  const Vec dinv = params.diag_noise.cwiseInverse();
  const Mat cd = params.loading.transpose() * dinv.asDiagonal();
  const Mat m = symmetrize(cd * params.loading + Mat::Identity(params.num_factors(), params.num_factors()));
  const SpdFactor f(m, "I + C' D^-1 C");
  const double log_det = params.diag_noise.array().log().sum() + f.log_det();
  const double d = static_cast<double>(params.dim());
  double acc = 0.0;
  for (Eigen::Index n = 0; n < data.rows(); ++n) {
    const Vec r = data.row(n).transpose() - params.offset;
    const Vec u = cd * r;
    const double quad = r.dot(dinv.cwiseProduct(r)) - u.dot(f.solve(u));
    acc += -0.5 * (d * kLog2Pi + log_det + quad);
  }
  return acc / static_cast<double>(data.rows());
}

FaExpectedStats fa_e_step(const FaParams& params, const Mat& data) {
  params.validate();
  if (data.cols() != params.dim()) throw DimensionError("data dimension does not match the loading");
  const Recognizer r = recognizer(params);
  const Mat centered = data.rowwise() - params.offset.transpose();
  const Mat means = centered * r.rec_gain.transpose();  // N x K
  const double n = static_cast<double>(data.rows());
  FaExpectedStats s;
  s.n = n;
  s.offset = params.offset;
  s.sum_x_z = centered.transpose() * means;
  s.sum_zz = symmetrize(n * r.cov + means.transpose() * means);
  s.sum_xx_diag = centered.array().square().colwise().sum().transpose();
  s.sum_entropy = n * gaussian_entropy(r.cov);
  return s;
}

FaParams fa_m_step(const FaExpectedStats& stats) {
  if (!(stats.n > 0.0)) throw PreconditionError("expected statistics are empty");
  const Eigen::Index k = stats.sum_zz.rows();
  FaParams p;
  p.offset = stats.offset;
  if (k == 0) {
    p.loading = Mat::Zero(stats.sum_xx_diag.size(), 0);
  } else {
    Eigen::LLT<Mat> llt(stats.sum_zz);
    if (llt.info() != Eigen::Success) throw SingularityError("sum_zz");
    p.loading = llt.solve(stats.sum_x_z.transpose()).transpose();
  }
  const Vec explained = (p.loading * stats.sum_x_z.transpose()).diagonal();
  p.diag_noise = ((stats.sum_xx_diag - explained) / stats.n).cwiseMax(kNoiseFloor);
  return p;
}

double fa_free_energy(const FaParams& params, const FaExpectedStats& stats) {
  params.validate();
  const Vec dinv = params.diag_noise.cwiseInverse();
  const Mat& c = params.loading;
  const Vec cross = (stats.sum_x_z * c.transpose()).diagonal();
  const Vec fit = (c * stats.sum_zz * c.transpose()).diagonal();
  const double misfit = dinv.dot(stats.sum_xx_diag - 2.0 * cross + fit);
  const double d = static_cast<double>(params.dim());
  const double k = static_cast<double>(params.num_factors());
  const double n = stats.n;
  const double emission = 0.5 * (n * (d * kLog2Pi + params.diag_noise.array().log().sum()) + misfit);
  const double source = 0.5 * (n * k * kLog2Pi + stats.sum_zz.trace());
  return (emission + source - stats.sum_entropy) / n;
}

Mat pca_iterate(const Mat& w0, const Mat& data, int iters) {
  if (w0.rows() != data.cols()) throw DimensionError("loading rows must match the data dimension");
  const Mat x = (data.rowwise() - data.colwise().mean()).transpose();  // D x N
  Mat w = w0;
  const auto check_rank = [](const Mat& m, const char* what) {
    Eigen::ColPivHouseholderQR<Mat> qr(m);
    qr.setThreshold(1e-12);
    if (qr.rank() < m.cols()) throw RankError(std::string(what) + " is rank deficient");
  };
  check_rank(w, "W");
  for (int it = 0; it < iters; ++it) {
    const Mat wtw = w.transpose() * w;
    Eigen::LLT<Mat> llt(wtw);
    if (llt.info() != Eigen::Success) throw RankError("W is rank deficient");
    const Mat z = llt.solve(w.transpose() * x);  // K x N
    const Mat zz = z * z.transpose();
    Eigen::LLT<Mat> zllt(zz);
    if (zllt.info() != Eigen::Success) throw RankError("projected latents are rank deficient");
    const Mat next = zllt.solve(z * x.transpose()).transpose();
    const double change = (next - w).norm() / std::max(w.norm(), 1e-300);
    w = next;
    if (change < 1e-10) break;
  }
  return w;
}

FaParams fa_initialize(const Mat& data, Eigen::Index k, Rng& rng) {
  const Eigen::Index d = data.cols();
  if (data.rows() < 1) throw PreconditionError("no data");
  if (k < 0) throw PreconditionError("number of factors must be non-negative");
  if (k > d) warn("factor analyzer with more factors than data dimensions");
  FaParams p;
  p.offset = data.colwise().mean().transpose();
  const Mat centered = data.rowwise() - p.offset.transpose();
  const Vec var = centered.array().square().colwise().mean().transpose();
  p.diag_noise = var.cwiseMax(1e-6 * std::max(var.mean(), 1e-300)).cwiseMax(kNoiseFloor);
  Mat g(d, k);
  for (Eigen::Index j = 0; j < k; ++j) g.col(j) = rng.normal_vector(d);
  const Eigen::Index cols = std::min(d, k);
  Mat q = Mat::Zero(d, k);
  if (cols > 0) {
    Eigen::HouseholderQR<Mat> qr(g);
    q.leftCols(cols) = qr.householderQ() * Mat::Identity(d, cols);
  }
  p.loading = std::sqrt(var.mean()) * q;
  return p;
}

FaEm::FaEm(const Mat& data, FaParams init) : data_(&data), params_(std::move(init)) {}

double FaEm::e_step() {
  stats_ = fa_e_step(params_, *data_);
  return fa_free_energy(params_, stats_);
}

double FaEm::m_step() {
  params_ = fa_m_step(stats_);
  return fa_free_energy(params_, stats_);
}

FitReport<FaParams> fit_fa(const Mat& data, Eigen::Index k, const EmConfig& config) {
  return run_em(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        return FaEm(data, fa_initialize(data, k, rng));
      },
      config);
}

}  // namespace lvm
