#include "lvm/discriminative.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>

#include "lvm/errors.hpp"
#include "lvm/gaussian.hpp"
#include "lvm/rng.hpp"

namespace lvm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_pair(const Mat& inputs, const Mat& outputs) {
  if (inputs.rows() != outputs.rows()) throw DimensionError("inputs and outputs need the same number of rows");
  if (inputs.rows() == 0) throw PreconditionError("no samples");
}

// W = szx (sxx + reg)^-1 on (optionally centered) sample averages.
LinearMap regularized_fit(const Mat& inputs, const Mat& outputs, const Mat* reg, const RegressionOptions& opts) {
  check_pair(inputs, outputs);
  const double n = static_cast<double>(inputs.rows());
  Vec xbar = Vec::Zero(inputs.cols());
  Vec zbar = Vec::Zero(outputs.cols());
  if (opts.center) {
    xbar = inputs.colwise().mean().transpose();
    zbar = outputs.colwise().mean().transpose();
  }
  const Mat x = inputs.rowwise() - xbar.transpose();
  const Mat z = outputs.rowwise() - zbar.transpose();
  Mat sxx = symmetrize(x.transpose() * x / n);
  if (reg) {
    if (reg->rows() != sxx.rows() || reg->cols() != sxx.cols()) throw DimensionError("regularizer must be D x D");
    sxx = symmetrize(sxx + *reg);
  }
  const Mat szx = z.transpose() * x / n;
  Eigen::LLT<Mat> llt(sxx);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14)
    throw SingularityError(reg ? "regularized input second moments" : "input second moments <xx'> (try ridge_fit)");
  LinearMap m;
  m.weights = llt.solve(szx.transpose()).transpose();
  m.intercept = zbar - m.weights * xbar;
  return m;
}

double ica_unit_loss(IcaNonlinearity nl, double y) {
  if (nl == IcaNonlinearity::logistic_cdf) return softplus(y) + softplus(-y);
  return 0.5 * (y * y + kLog2Pi);
}

double ica_unit_score(IcaNonlinearity nl, double y) {
  if (nl == IcaNonlinearity::logistic_cdf) return std::tanh(0.5 * y);
  return y;
}

double log_abs_det(const Mat& w) {
  if (w.rows() != w.cols()) throw DimensionError("unmixing matrix must be square");
  const Eigen::PartialPivLU<Mat> lu(w);
  const double det = lu.determinant();
  if (!(std::abs(det) > 1e-12) || !std::isfinite(det)) throw SingularityError("unmixing matrix");
  return std::log(std::abs(det));
}

}  // namespace

Mat LinearMap::apply_rows(const Mat& x) const { return (x * weights.transpose()).rowwise() + intercept.transpose(); }

LinearMap ols_fit(const Mat& inputs, const Mat& outputs, const RegressionOptions& opts) {
  return regularized_fit(inputs, outputs, nullptr, opts);
}

LinearMap ridge_fit(const Mat& inputs, const Mat& outputs, const Mat& prior_cov, const RegressionOptions& opts) {
  return regularized_fit(inputs, outputs, &prior_cov, opts);
}

LinearMap ridge_fit(const Mat& inputs, const Mat& outputs, double lambda, const RegressionOptions& opts) {
  if (lambda < 0.0) throw PreconditionError("ridge penalty must be non-negative");
  const Mat reg = lambda * Mat::Identity(inputs.cols(), inputs.cols());
  return regularized_fit(inputs, outputs, &reg, opts);
}

LinearMap wls_fit(const Mat& inputs, const Mat& outputs, const Mat& weight_matrix, const RegressionOptions& opts) {
  check_pair(inputs, outputs);
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  if (weight_matrix.rows() != n || weight_matrix.cols() != n) throw DimensionError("weight matrix must be N x N");
  Mat x(d + (opts.center ? 1 : 0), n);
  x.topRows(d) = inputs.transpose();
  if (opts.center) x.row(d).setOnes();
  const Mat z = outputs.transpose();
  const SpdFactor u(weight_matrix, "weight matrix");
  const Mat ux = u.solve(Mat(x.transpose()));  // U^-1 X'
  Eigen::LLT<Mat> llt(symmetrize(x * ux));
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) throw SingularityError("weighted input second moments");
  const Mat w = llt.solve(Mat((z * ux).transpose())).transpose();
  LinearMap m;
  m.weights = w.leftCols(d);
  m.intercept = opts.center ? Vec(w.col(d)) : Vec::Zero(outputs.cols());
  return m;
}

GlimFamily GlimFamily::parse(const std::string& name) {
  GlimFamily f;
  if (name == "gaussian") f.name = GlimFamilyName::gaussian;
  else if (name == "bernoulli-logit" || name == "bernoulli" || name == "logistic") f.name = GlimFamilyName::bernoulli_logit;
  else if (name == "poisson-log" || name == "poisson") f.name = GlimFamilyName::poisson_log;
  else if (name == "gamma-shape-log" || name == "gamma") f.name = GlimFamilyName::gamma_shape_log;
  else throw UsageError("unknown GLiM family '" + name + "'");
  return f;
}

std::string GlimFamily::to_string() const {
  switch (name) {
    case GlimFamilyName::gaussian: return "gaussian";
    case GlimFamilyName::bernoulli_logit: return "bernoulli-logit";
    case GlimFamilyName::poisson_log: return "poisson-log";
    case GlimFamilyName::gamma_shape_log: return "gamma-shape-log";
  }
  return "gaussian";
}

double GlimFamily::natural(double eta) const {
  return name == GlimFamilyName::gamma_shape_log ? std::exp(eta) : eta;
}

double GlimFamily::natural_slope(double eta) const {
  return name == GlimFamilyName::gamma_shape_log ? std::exp(eta) : 1.0;
}

double GlimFamily::sufficient(double z) const {
  return name == GlimFamilyName::gamma_shape_log ? std::log(z) : z;
}

double GlimFamily::log_partition(double theta) const {
  switch (name) {
    case GlimFamilyName::gaussian: return 0.5 * theta * theta;
    case GlimFamilyName::bernoulli_logit: return softplus(theta);
    case GlimFamilyName::poisson_log: return std::exp(theta);
    case GlimFamilyName::gamma_shape_log: return std::lgamma(theta) + theta * std::log(scale);
  }
  return 0.0;
}

double GlimFamily::mean(double theta) const {
  switch (name) {
    case GlimFamilyName::gaussian: return theta;
    case GlimFamilyName::bernoulli_logit: return sigmoid(theta);
    case GlimFamilyName::poisson_log: return std::exp(theta);
    case GlimFamilyName::gamma_shape_log: return boost::math::digamma(theta) + std::log(scale);
  }
  return 0.0;
}

double GlimFamily::variance(double theta) const {
  switch (name) {
    case GlimFamilyName::gaussian: return 1.0;
    case GlimFamilyName::bernoulli_logit: {
      const double m = sigmoid(theta);
      return m * (1.0 - m);
    }
    case GlimFamilyName::poisson_log: return std::exp(theta);
    case GlimFamilyName::gamma_shape_log: return boost::math::trigamma(theta);
  }
  return 0.0;
}

double GlimFamily::neg_log_lik(double z, double eta) const {
  const double theta = natural(eta);
  double base = 0.0;
  switch (name) {
    case GlimFamilyName::gaussian: base = 0.5 * (z * z + kLog2Pi); break;
    case GlimFamilyName::bernoulli_logit: break;
    case GlimFamilyName::poisson_log: base = std::lgamma(z + 1.0); break;
    case GlimFamilyName::gamma_shape_log: base = std::log(z) + z / scale; break;
  }
  return -theta * sufficient(z) + log_partition(theta) + base;
}

void GlimFamily::check_support(double z) const {
  bool ok = std::isfinite(z);
  switch (name) {
    case GlimFamilyName::gaussian: break;
    case GlimFamilyName::bernoulli_logit: ok = ok && (z == 0.0 || z == 1.0); break;
    case GlimFamilyName::poisson_log: ok = ok && z >= 0.0 && z == std::floor(z); break;
    case GlimFamilyName::gamma_shape_log: ok = ok && z > 0.0; break;
  }
  if (!ok) throw PreconditionError("response " + std::to_string(z) + " is outside the " + to_string() + " support");
}

double GlimFamily::response_mean(double eta) const {
  switch (name) {
    case GlimFamilyName::gaussian: return eta;
    case GlimFamilyName::bernoulli_logit: return sigmoid(eta);
    case GlimFamilyName::poisson_log: return std::exp(eta);
    case GlimFamilyName::gamma_shape_log: return std::exp(eta) * scale;
  }
  return eta;
}

double glim_objective(const Mat& inputs, const Vec& outputs, const GlimFamily& family, const Vec& w) {
  const Vec eta = inputs * w;
  double acc = 0.0;
  for (Eigen::Index n = 0; n < eta.size(); ++n) acc += family.neg_log_lik(outputs(n), eta(n));
  return acc / static_cast<double>(eta.size());
}

IrlsResult irls_fit(const Mat& inputs, const Vec& outputs, const GlimFamily& family, const IrlsConfig& config) {
  if (inputs.rows() != outputs.size()) throw DimensionError("inputs and outputs need the same number of rows");
  if (inputs.rows() == 0) throw PreconditionError("no samples");
  for (Eigen::Index n = 0; n < outputs.size(); ++n) family.check_support(outputs(n));
  const Eigen::Index d = inputs.cols();
  const double count = static_cast<double>(inputs.rows());
  const bool logistic = family.name == GlimFamilyName::bernoulli_logit;

  IrlsResult r;
  r.weights = config.init.size() == 0 ? Vec::Zero(d) : config.init;
  if (r.weights.size() != d) throw DimensionError("initial weights have the wrong length");
  double obj = glim_objective(inputs, outputs, family, r.weights);
  r.objective_trace.push_back(obj);

  const auto perfectly_separated = [&](const Vec& w) {
    if (!logistic) return false;
    const Vec eta = inputs * w;
    for (Eigen::Index n = 0; n < eta.size(); ++n)
      if ((2.0 * outputs(n) - 1.0) * eta(n) <= 0.0 || std::abs(outputs(n) - sigmoid(eta(n))) > 1e-6) return false;
    return true;
  };

  for (int it = 0; it < config.max_iter; ++it) {
    const Vec eta = inputs * r.weights;
    Vec grad_w(inputs.rows());
    Vec hess_w(inputs.rows());
    for (Eigen::Index n = 0; n < eta.size(); ++n) {
      const double theta = family.natural(eta(n));
      const double slope = family.natural_slope(eta(n));
      grad_w(n) = slope * (family.mean(theta) - family.sufficient(outputs(n)));
      hess_w(n) = slope * slope * family.variance(theta);
    }
    const Vec grad = inputs.transpose() * grad_w / count;
    if (grad.norm() < config.tol) {
      r.converged = true;
      break;
    }
    if (perfectly_separated(r.weights)) throw SeparationError("classes are linearly separable; weights diverge");
    const Mat hess = symmetrize(inputs.transpose() * hess_w.asDiagonal() * inputs / count);
    Eigen::LLT<Mat> llt(hess);
    if (llt.info() != Eigen::Success) throw HessianError("working Hessian is not positive definite");
    const Vec step = -llt.solve(grad);

    // Near the optimum the predicted decrease drops below the rounding error
    // of the objective; a full Newton step is then taken without comparison.
    const double predicted = -0.5 * grad.dot(step);
    const double slack = 1e-13 * std::max(1.0, std::abs(obj));
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
      const Vec candidate = r.weights + scale * step;
      const double next = glim_objective(inputs, outputs, family, candidate);
      const bool in_rounding = halving == 0 && predicted < slack && next <= obj + slack;
      if (std::isfinite(next) && (next <= obj || in_rounding)) {
        r.weights = candidate;
        obj = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    r.objective_trace.push_back(obj);
    r.iterations = it + 1;
    if (logistic && r.weights.norm() > 1e6) throw SeparationError("weight norm exceeded 1e6");
  }
  return r;
}

double ica_loss(const IcaModel& model, const Mat& batch) {
  if (batch.cols() != model.unmixing.cols()) throw DimensionError("batch width does not match the unmixing matrix");
  const double lad = log_abs_det(model.unmixing);
  const Mat y = batch * model.unmixing.transpose();
  double acc = 0.0;
  for (Eigen::Index n = 0; n < y.rows(); ++n)
    for (Eigen::Index k = 0; k < y.cols(); ++k) acc += ica_unit_loss(model.nonlinearity, y(n, k));
  return acc / static_cast<double>(y.rows()) - lad;
}

Mat ica_gradient(const IcaModel& model, const Mat& batch) {
  if (batch.cols() != model.unmixing.cols()) throw DimensionError("batch width does not match the unmixing matrix");
  log_abs_det(model.unmixing);
  const Mat y = batch * model.unmixing.transpose();
  Mat score(y.rows(), y.cols());
  for (Eigen::Index n = 0; n < y.rows(); ++n)
    for (Eigen::Index k = 0; k < y.cols(); ++k) score(n, k) = ica_unit_score(model.nonlinearity, y(n, k));
  return score.transpose() * batch / static_cast<double>(y.rows()) - model.unmixing.inverse().transpose();
}

IcaFitResult ica_fit(const Mat& batch, const IcaConfig& config) {
  const Eigen::Index k = batch.cols();
  IcaFitResult r;
  r.model.nonlinearity = config.nonlinearity;
  r.model.unmixing = Mat::Identity(k, k);
  if (config.random_init) {
    Rng rng(config.seed);
    Mat g(k, k);
    for (Eigen::Index j = 0; j < k; ++j) g.col(j) = rng.normal_vector(k);
    r.model.unmixing = Eigen::HouseholderQR<Mat>(g).householderQ();
  }
  double loss = ica_loss(r.model, batch);
  r.loss_trace.push_back(loss);
  for (int it = 0; it < config.iters; ++it) {
    const Mat grad = ica_gradient(r.model, batch);
    double step = config.learning_rate;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, step *= 0.5) {
      IcaModel candidate{r.model.unmixing - step * grad, r.model.nonlinearity};
      double next = std::numeric_limits<double>::infinity();
      try {
        next = ica_loss(candidate, batch);
      } catch (const SingularityError&) {
        continue;
      }
      if (next <= loss) {
        r.model = std::move(candidate);
        loss = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    r.loss_trace.push_back(loss);
  }
  return r;
}

}  // namespace lvm
