#include "lvm/kalman.hpp"

#include <cmath>

#include "lvm/errors.hpp"
#include "lvm/recursion.hpp"

namespace lvm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Vec control_at(const Mat& controls, Eigen::Index t, Eigen::Index u) {
  if (u == 0) return Vec::Zero(0);
  return controls.row(t).transpose();
}

void check_controls(const SsmParams& p, const Mat& obs, const Mat& controls) {
  if (obs.cols() != p.obs_dim()) throw DimensionError("observation dimension does not match the emission");
  if (p.control_dim() == 0) return;
  if (controls.rows() != obs.rows() || controls.cols() != p.control_dim())
    throw DimensionError("controls must be T x U with one row per observation");
}

struct GaussianChainAlgebra {
  const SsmParams& params;
  const Mat& obs;
  const Mat& controls;

  GaussianBelief initial() const { return params.init; }

  GaussianBelief time_update(const GaussianBelief& filtered, Eigen::Index t) const {
    return kf_time_update(filtered, params, control_at(controls, t, params.control_dim()));
  }

  std::pair<GaussianBelief, double> measurement_update(const GaussianBelief& predicted, Eigen::Index t) const {
    auto r = kf_measurement_update(predicted, params, obs.row(t).transpose());
    return {std::move(r.belief), r.log_evidence};
  }

  // z_t | z_{t+1}, x_1..x_t: mean mu_f + J (z_{t+1} - mu_pred), noise V_f - J V_pred J'.
  AffineGaussianChannel future_condition(const GaussianBelief& filtered, const GaussianBelief& predicted_next) const {
    const SpdFactor f(predicted_next.cov(), "predicted covariance");
    const Mat j = f.solve(Mat(params.trans.weights() * filtered.cov())).transpose();
    const Mat noise = symmetrize(filtered.cov() - j * predicted_next.cov() * j.transpose());
    return AffineGaussianChannel(j, filtered.mean() - j * predicted_next.mean(), noise);
  }

  GaussianBelief backward_step(const GaussianBelief& smoothed_next, const AffineGaussianChannel& reverse) const {
    return marginal_cumulants(smoothed_next, reverse);
  }

  Mat pairwise(const GaussianBelief& smoothed_next, const AffineGaussianChannel& reverse) const {
    return cross_covariance(smoothed_next, reverse);
  }
};

Mat floored(const Mat& s) {
  const double scale = std::max(s.trace() / static_cast<double>(s.rows()), 1e-300);
  return floor_eigenvalues(symmetrize(s), 1e-10 * scale);
}

Mat psd_sqrt(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// sum_t E[(y - W r)(y - W r)'] from sums of y y', y r', r r'.
Mat residual_scatter(const Mat& yy, const Mat& yr, const Mat& rr, const Mat& w) {
  return symmetrize(yy - w * yr.transpose() - yr * w.transpose() + w * rr * w.transpose());
}

double gaussian_energy(const Mat& cov, const Mat& scatter, double count) {
  const SpdFactor f(cov, "noise covariance");
  const double d = static_cast<double>(cov.rows());
  return 0.5 * (count * (d * kLog2Pi + f.log_det()) + f.solve(scatter).trace());
}

}  // namespace

void SsmParams::validate() const {
  const Eigen::Index k = trans.input_dim();
  if (trans.output_dim() != k) throw DimensionError("transition must map the state space to itself");
  if (emission.input_dim() != k) throw DimensionError("emission input must be the state dimension");
  if (init.dim() != k) throw DimensionError("initial belief must be over the state space");
  if (control_gain.rows() != k) throw DimensionError("control gain must have one row per state");
}

GaussianBelief kf_time_update(const GaussianBelief& belief, const SsmParams& params, const Vec& control) {
  if (control.size() != params.control_dim()) throw DimensionError("control has the wrong length");
  Vec offset = params.trans.offset();
  if (params.control_dim() > 0) offset += params.control_gain * control;
  return marginal_cumulants(belief,
                            AffineGaussianChannel(params.trans.weights(), offset, params.trans.noise_cov()));
}

MeasurementUpdate kf_measurement_update(const GaussianBelief& belief, const SsmParams& params, const Vec& obs) {
  const Mat& c = params.emission.weights();
  if (obs.size() != c.rows()) throw DimensionError("observation has the wrong length");
  const Mat vc = belief.cov() * c.transpose();
  const SpdFactor s(symmetrize(c * vc + params.emission.noise_cov()), "innovation covariance");
  const Vec innov = obs - (c * belief.mean() + params.emission.offset());
  const Mat k = s.solve(Mat(vc.transpose())).transpose();
  const double d = static_cast<double>(obs.size());
  MeasurementUpdate out;
  out.belief = GaussianBelief(belief.mean() + k * innov, belief.cov() - k * vc.transpose());
  out.log_evidence = -0.5 * (d * kLog2Pi + s.log_det() + s.quad(innov));
  return out;
}

KalmanFilterResult kalman_filter(const SsmParams& params, const Mat& obs, const Mat& controls) {
  params.validate();
  check_controls(params, obs, controls);
  if (obs.rows() < 1) throw PreconditionError("sequence is empty");
  const GaussianChainAlgebra alg{params, obs, controls};
  auto pass = run_filter(alg, obs.rows());
  return {std::move(pass.filtered), std::move(pass.predicted), pass.loglik};
}

RtsResult rts_smoother(const SsmParams& params, const std::vector<GaussianBelief>& filtered,
                       const std::vector<GaussianBelief>& predicted) {
  if (filtered.size() != predicted.size()) throw DimensionError("filtered and predicted lengths differ");
  const Mat none;
  const GaussianChainAlgebra alg{params, none, none};
  auto pass = run_smoother(alg, filtered, predicted);
  return {std::move(pass.smoothed), std::move(pass.pairwise)};
}

SsmPosteriors kalman_smoother(const SsmParams& params, const Mat& obs, const Mat& controls) {
  auto f = kalman_filter(params, obs, controls);
  auto s = rts_smoother(params, f.filtered, f.predicted);
  return {std::move(f.filtered), std::move(f.predicted), std::move(s.smoothed), std::move(s.cross_cov), f.loglik};
}

LdsStats lds_e_step(const SsmParams& params, const std::vector<Mat>& sequences, const std::vector<Mat>& controls) {
  params.validate();
  const Eigen::Index k = params.state_dim();
  const Eigen::Index u = params.control_dim();
  const Eigen::Index d = params.obs_dim();
  if (u > 0 && controls.size() != sequences.size()) throw DimensionError("need one control matrix per sequence");
  const Eigen::Index r = k + u + 1;

  LdsStats s;
  s.control_dim = u;
  s.sum_next_reg = Mat::Zero(k, r);
  s.sum_reg_reg = Mat::Zero(r, r);
  s.sum_next_next = Mat::Zero(k, k);
  s.sum_x_reg = Mat::Zero(d, k + 1);
  s.sum_emit_reg = Mat::Zero(k + 1, k + 1);
  s.sum_xx = Mat::Zero(d, d);
  s.sum_z1 = Vec::Zero(k);
  s.sum_z1z1 = Mat::Zero(k, k);

  const Mat no_controls;
  for (std::size_t q = 0; q < sequences.size(); ++q) {
    const Mat& obs = sequences[q];
    const Mat& ctl = u > 0 ? controls[q] : no_controls;
    check_controls(params, obs, ctl);
    if (obs.rows() < 1) throw PreconditionError("sequence is empty");
    const GaussianChainAlgebra alg{params, obs, ctl};
    const auto fwd = run_filter(alg, obs.rows());
    const auto bwd = run_smoother(alg, fwd.filtered, fwd.predicted);
    const auto& sm = bwd.smoothed;
    const Eigen::Index steps = obs.rows();

    for (Eigen::Index t = 0; t < steps; ++t) {
      const Vec& m = sm[t].mean();
      const Mat zz = sm[t].cov() + m * m.transpose();
      const Vec x = obs.row(t).transpose();
      s.sum_x_reg.leftCols(k) += x * m.transpose();
      s.sum_x_reg.col(k) += x;
      s.sum_emit_reg.topLeftCorner(k, k) += zz;
      s.sum_emit_reg.topRightCorner(k, 1) += m;
      s.sum_emit_reg.bottomLeftCorner(1, k) += m.transpose();
      s.sum_emit_reg(k, k) += 1.0;
      s.sum_xx += x * x.transpose();
      if (t == 0) continue;

      const Vec& mp = sm[t - 1].mean();
      Vec reg_mean(r);
      reg_mean << mp, control_at(ctl, t, u), 1.0;
      Mat reg_cov = Mat::Zero(r, r);
      reg_cov.topLeftCorner(k, k) = sm[t - 1].cov();
      Mat cross = Mat::Zero(k, r);
      cross.leftCols(k) = bwd.pairwise[t - 1];
      s.sum_next_reg += cross + m * reg_mean.transpose();
      s.sum_reg_reg += reg_cov + reg_mean * reg_mean.transpose();
      s.sum_next_next += zz;
    }
    s.sum_z1 += sm[0].mean();
    s.sum_z1z1 += sm[0].cov() + sm[0].mean() * sm[0].mean().transpose();
    s.n_trans += static_cast<double>(steps - 1);
    s.n_emit += static_cast<double>(steps);
    s.n_seq += 1.0;
    s.loglik += fwd.loglik;
    s.entropy += gaussian_entropy(sm.back().cov());
    for (const auto& rev : bwd.reverse) s.entropy += gaussian_entropy(rev.noise_cov());
  }
  s.sum_reg_reg = symmetrize(s.sum_reg_reg);
  s.sum_emit_reg = symmetrize(s.sum_emit_reg);
  s.sum_next_next = symmetrize(s.sum_next_next);
  s.sum_z1z1 = symmetrize(s.sum_z1z1);
  return s;
}

SsmParams lds_m_step(const LdsStats& s) {
  const Eigen::Index k = s.sum_z1.size();
  const Eigen::Index u = s.control_dim;
  if (!(s.n_trans > 0.0)) throw PreconditionError("transition statistics need a sequence with T >= 2");
  if (!(s.n_seq > 0.0)) throw PreconditionError("no sequences");

  const auto regress = [](const Mat& yr, const Mat& rr, const char* what) -> Mat {
    Eigen::LLT<Mat> llt(rr);
    if (llt.info() != Eigen::Success) throw SingularityError(what);
    return llt.solve(yr.transpose()).transpose();
  };
  const Mat wt = regress(s.sum_next_reg, s.sum_reg_reg, "transition regressor moments");
  const Mat q = floored(residual_scatter(s.sum_next_next, s.sum_next_reg, s.sum_reg_reg, wt) / s.n_trans);
  const Mat we = regress(s.sum_x_reg, s.sum_emit_reg, "emission regressor moments");
  const Mat rcov = floored(residual_scatter(s.sum_xx, s.sum_x_reg, s.sum_emit_reg, we) / s.n_emit);
  const Vec mu1 = s.sum_z1 / s.n_seq;
  const Mat v1 = floored(s.sum_z1z1 / s.n_seq - mu1 * mu1.transpose());

  SsmParams p;
  p.trans = AffineGaussianChannel(wt.leftCols(k), wt.col(k + u), q);
  p.control_gain = wt.middleCols(k, u);
  p.emission = AffineGaussianChannel(we.leftCols(k), we.col(k), rcov);
  p.init = GaussianBelief(mu1, v1);
  return p;
}

double lds_free_energy(const SsmParams& p, const LdsStats& s) {
  p.validate();
  const Eigen::Index k = p.state_dim();
  const Eigen::Index u = p.control_dim();
  if (u != s.control_dim) throw DimensionError("statistics and parameters disagree on the control dimension");
  Mat wt(k, k + u + 1);
  wt << p.trans.weights(), p.control_gain, p.trans.offset();
  Mat we(p.obs_dim(), k + 1);
  we << p.emission.weights(), p.emission.offset();
  const Vec& mu = p.init.mean();
  const Mat init_scatter = symmetrize(s.sum_z1z1 - s.sum_z1 * mu.transpose() - mu * s.sum_z1.transpose() +
                                      s.n_seq * mu * mu.transpose());
  double energy = gaussian_energy(p.init.cov(), init_scatter, s.n_seq);
  if (s.n_trans > 0.0)
    energy += gaussian_energy(p.trans.noise_cov(),
                              residual_scatter(s.sum_next_next, s.sum_next_reg, s.sum_reg_reg, wt), s.n_trans);
  energy += gaussian_energy(p.emission.noise_cov(), residual_scatter(s.sum_xx, s.sum_x_reg, s.sum_emit_reg, we),
                            s.n_emit);
  return (energy - s.entropy) / s.n_emit;
}

SsmParams lds_initialize(const std::vector<Mat>& sequences, Eigen::Index k, Eigen::Index control_dim, Rng& rng) {
  if (sequences.empty()) throw PreconditionError("no sequences");
  const Eigen::Index d = sequences.front().cols();
  if (k < 1) throw PreconditionError("state dimension must be positive");
  Eigen::Index rows = 0;
  for (const Mat& s : sequences) {
    if (s.cols() != d) throw DimensionError("sequences disagree on dimension");
    rows += s.rows();
  }
  Mat all(rows, d);
  Eigen::Index at = 0;
  for (const Mat& s : sequences) {
    all.middleRows(at, s.rows()) = s;
    at += s.rows();
  }
  const Vec mean = all.colwise().mean().transpose();
  const Mat centered = all.rowwise() - mean.transpose();
  const Mat cov = symmetrize(centered.transpose() * centered / static_cast<double>(rows));
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  Mat c = Mat::Zero(d, k);
  double explained = 0.0;
  for (Eigen::Index j = 0; j < std::min(k, d); ++j) {
    const double lam = std::max(es.eigenvalues()(d - 1 - j), 0.0);
    c.col(j) = std::sqrt(lam) * es.eigenvectors().col(d - 1 - j);
    explained += lam;
  }
  const double resid = std::max((cov.trace() - explained) / static_cast<double>(d), 1e-3 * cov.trace() / d);

  Mat a = 0.9 * Mat::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) += 0.01 * rng.normal();

  SsmParams p;
  p.trans = AffineGaussianChannel(a, Vec::Zero(k), 0.19 * Mat::Identity(k, k));
  p.control_gain = Mat::Zero(k, control_dim);
  p.emission = AffineGaussianChannel(c, mean, resid * Mat::Identity(d, d));
  p.init = GaussianBelief(Vec::Zero(k), Mat::Identity(k, k));
  return p;
}

LdsEm::LdsEm(const std::vector<Mat>& sequences, const std::vector<Mat>& controls, SsmParams init)
    : sequences_(&sequences), controls_(&controls), params_(std::move(init)) {}

double LdsEm::e_step() {
  stats_ = lds_e_step(params_, *sequences_, *controls_);
  return lds_free_energy(params_, stats_);
}

double LdsEm::m_step() {
  params_ = lds_m_step(stats_);
  return lds_free_energy(params_, stats_);
}

FitReport<SsmParams> fit_lds(const std::vector<Mat>& sequences, Eigen::Index k, const EmConfig& config,
                             const std::vector<Mat>& controls) {
  const Eigen::Index u = controls.empty() ? 0 : controls.front().cols();
  return run_em(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        return LdsEm(sequences, controls, lds_initialize(sequences, k, u, rng));
      },
      config);
}

SsmSample ssm_sample(const SsmParams& params, Eigen::Index steps, Rng& rng, const Mat& controls) {
  params.validate();
  const Eigen::Index k = params.state_dim();
  const Eigen::Index d = params.obs_dim();
  if (params.control_dim() > 0 && (controls.rows() != steps || controls.cols() != params.control_dim()))
    throw DimensionError("controls must be T x U");
  const Mat lq = psd_sqrt(params.trans.noise_cov());
  const Mat lr = psd_sqrt(params.emission.noise_cov());
  SsmSample out{Mat(steps, k), Mat(steps, d)};
  Vec z = params.init.mean() + psd_sqrt(params.init.cov()) * rng.normal_vector(k);
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (t > 0) {
      z = params.trans.weights() * z + params.trans.offset() + lq * rng.normal_vector(k);
      if (params.control_dim() > 0) z += params.control_gain * controls.row(t).transpose();
    }
    out.states.row(t) = z.transpose();
    out.obs.row(t) = (params.emission.weights() * z + params.emission.offset() + lr * rng.normal_vector(d)).transpose();
  }
  return out;
}

}  // namespace lvm
