#include "lvm/rbm.hpp"

#include <cmath>
#include <limits>

#include "lvm/errors.hpp"

namespace lvm {
namespace {

constexpr Eigen::Index kMaxEnumeratedUnits = 22;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Vec sigmoid(const Vec& x) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = sigmoid(x(i));
  return out;
}

Vec bits(Eigen::Index index, Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = static_cast<double>((index >> i) & 1);
  return v;
}

Eigen::Index index_of(const Vec& v) {
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) != 0.0) idx |= Eigen::Index{1} << i;
  return idx;
}

double bernoulli_prob(const Vec& means, const Vec& state) {
  double p = 1.0;
  for (Eigen::Index i = 0; i < means.size(); ++i) p *= state(i) != 0.0 ? means(i) : 1.0 - means(i);
  return p;
}

Vec sample_bernoulli(const Vec& means, Rng& rng) {
  Vec s(means.size());
  for (Eigen::Index i = 0; i < means.size(); ++i) s(i) = rng.uniform() < means(i) ? 1.0 : 0.0;
  return s;
}

RbmGradient stats(const Vec& v, const Vec& h) { return {v * h.transpose(), v, h}; }

RbmGradient zero_gradient(const RbmParams& p) {
  return {Mat::Zero(p.num_visible(), p.num_hidden()), Vec::Zero(p.num_visible()), Vec::Zero(p.num_hidden())};
}

void guard(Eigen::Index units, Eigen::Index limit) {
  if (units > limit)
    throw SizeError("enumeration over " + std::to_string(units) + " binary units exceeds the limit of " +
                    std::to_string(limit));
}

double kl_vectors(const Vec& p, const Vec& q) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) continue;
    if (q(i) == 0.0) return std::numeric_limits<double>::infinity();
    acc += p(i) * std::log(p(i) / q(i));
  }
  return std::max(acc, 0.0);
}

}  // namespace

void RbmParams::validate() const {
  if (visible_bias.size() != weights.rows() || hidden_bias.size() != weights.cols())
    throw DimensionError("biases must match the weight matrix shape");
  if (!weights.allFinite() || !visible_bias.allFinite() || !hidden_bias.allFinite())
    throw PreconditionError("RBM parameters must be finite");
}

RbmParams RbmParams::zeros(Eigen::Index v, Eigen::Index h) { return {Mat::Zero(v, h), Vec::Zero(v), Vec::Zero(h)}; }

Vec RbmGradient::flat() const {
  Vec out(d_weights.size() + d_visible.size() + d_hidden.size());
  out << Eigen::Map<const Vec>(d_weights.data(), d_weights.size()), d_visible, d_hidden;
  return out;
}

RbmGradient& RbmGradient::operator+=(const RbmGradient& o) {
  d_weights += o.d_weights;
  d_visible += o.d_visible;
  d_hidden += o.d_hidden;
  return *this;
}

RbmGradient& RbmGradient::operator*=(double s) {
  d_weights *= s;
  d_visible *= s;
  d_hidden *= s;
  return *this;
}

void check_binary(const Mat& states) {
  if (!(states.array() == 0.0 || states.array() == 1.0).all()) throw PreconditionError("states must be 0 or 1");
}

double rbm_energy(const RbmParams& params, const Vec& v, const Vec& h) {
  params.validate();
  if (v.size() != params.num_visible() || h.size() != params.num_hidden())
    throw DimensionError("state sizes do not match the RBM");
  return -params.visible_bias.dot(v) - params.hidden_bias.dot(h) - v.dot(params.weights * h);
}

Vec rbm_conditionals(const RbmParams& params, Given given, const Vec& state) {
  params.validate();
  if (given == Given::visible) {
    if (state.size() != params.num_visible()) throw DimensionError("visible state has the wrong length");
    return sigmoid(Vec(params.hidden_bias + params.weights.transpose() * state));
  }
  if (state.size() != params.num_hidden()) throw DimensionError("hidden state has the wrong length");
  return sigmoid(Vec(params.visible_bias + params.weights * state));
}

double log_partition_bruteforce(const RbmParams& params) {
  params.validate();
  const Eigen::Index nv = params.num_visible();
  const Eigen::Index nh = params.num_hidden();
  guard(nv + nh, kMaxEnumeratedUnits);
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (Eigen::Index hi = 0; hi < (Eigen::Index{1} << nh); ++hi) {
    const Vec h = bits(hi, nh);
    const Vec wh = params.weights * h;
    const double bh = params.hidden_bias.dot(h);
    for (Eigen::Index vi = 0; vi < (Eigen::Index{1} << nv); ++vi) {
      const Vec v = bits(vi, nv);
      const double e = params.visible_bias.dot(v) + bh + v.dot(wh);
      if (e > m) {
        s = s * std::exp(m - e) + 1.0;
        m = e;
      } else {
        s += std::exp(e - m);
      }
    }
  }
  return m + std::log(s);
}

double rbm_unnormalized_log_marginal(const RbmParams& params, const Vec& v) {
  const Vec a = params.hidden_bias + params.weights.transpose() * v;
  double acc = params.visible_bias.dot(v);
  for (Eigen::Index j = 0; j < a.size(); ++j) acc += softplus(a(j));
  return acc;
}

Vec visible_state(Eigen::Index index, Eigen::Index v) { return bits(index, v); }

Vec rbm_visible_distribution(const RbmParams& params) {
  params.validate();
  const Eigen::Index nv = params.num_visible();
  guard(nv, kMaxEnumeratedUnits);
  Vec logp(Eigen::Index{1} << nv);
  for (Eigen::Index vi = 0; vi < logp.size(); ++vi) logp(vi) = rbm_unnormalized_log_marginal(params, bits(vi, nv));
  return (logp.array() - log_sum_exp(logp)).exp().matrix();
}

Vec empirical_visible_distribution(const Mat& data) {
  check_binary(data);
  guard(data.cols(), kMaxEnumeratedUnits);
  if (data.rows() == 0) throw PreconditionError("no data");
  Vec p = Vec::Zero(Eigen::Index{1} << data.cols());
  for (Eigen::Index n = 0; n < data.rows(); ++n) p(index_of(data.row(n).transpose())) += 1.0;
  return p / static_cast<double>(data.rows());
}

double rbm_kl_to_data(const RbmParams& params, const Mat& data) {
  if (data.cols() != params.num_visible()) throw DimensionError("data width does not match the RBM");
  return kl_vectors(empirical_visible_distribution(data), rbm_visible_distribution(params));
}

RbmGradient exact_kl_gradient(const RbmParams& params, const Mat& data) {
  if (data.cols() != params.num_visible()) throw DimensionError("data width does not match the RBM");
  check_binary(data);
  const Eigen::Index nv = params.num_visible();
  const Vec pv = rbm_visible_distribution(params);
  RbmGradient g = zero_gradient(params);
  for (Eigen::Index vi = 0; vi < pv.size(); ++vi) {
    const Vec v = bits(vi, nv);
    RbmGradient s = stats(v, rbm_conditionals(params, Given::visible, v));
    s *= pv(vi);
    g += s;
  }
  RbmGradient d = zero_gradient(params);
  for (Eigen::Index n = 0; n < data.rows(); ++n) {
    const Vec v = data.row(n).transpose();
    d += stats(v, rbm_conditionals(params, Given::visible, v));
  }
  d *= -1.0 / static_cast<double>(data.rows());
  g += d;
  return g;
}

std::vector<RbmGradient> cd_n_chain_gradients(const RbmParams& params, const Mat& data, int n, Rng& rng) {
  params.validate();
  if (data.cols() != params.num_visible()) throw DimensionError("data width does not match the RBM");
  check_binary(data);
  if (n < 0) throw PreconditionError("CD step count must be non-negative");
  const Rng base = rng.substream(rng());
  std::vector<RbmGradient> out;
  out.reserve(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    if (n == 0) {
      out.push_back(zero_gradient(params));
      continue;
    }
    Rng r = base.substream(static_cast<std::uint64_t>(c));
    const Vec v0 = data.row(c).transpose();
    const Vec h0 = rbm_conditionals(params, Given::visible, v0);
    Vec v = v0;
    Vec hm = h0;
    for (int k = 0; k < n; ++k) {
      const Vec h = sample_bernoulli(hm, r);
      v = sample_bernoulli(rbm_conditionals(params, Given::hidden, h), r);
      hm = rbm_conditionals(params, Given::visible, v);
    }
    RbmGradient g = stats(v, hm);
    RbmGradient pos = stats(v0, h0);
    pos *= -1.0;
    g += pos;
    out.push_back(std::move(g));
  }
  return out;
}

RbmGradient cd_n_gradient(const RbmParams& params, const Mat& data, int n, Rng& rng) {
  const auto chains = cd_n_chain_gradients(params, data, n, rng);
  RbmGradient g = zero_gradient(params);
  for (const auto& c : chains) g += c;
  if (!chains.empty()) g *= 1.0 / static_cast<double>(chains.size());
  return g;
}

double gradient_angle(const RbmGradient& a, const RbmGradient& b) {
  const Vec x = a.flat();
  const Vec y = b.flat();
  const double denom = x.norm() * y.norm();
  if (denom == 0.0) return 0.0;
  return std::acos(std::clamp(x.dot(y) / denom, -1.0, 1.0));
}

Mat rbm_visible_gibbs_kernel(const RbmParams& params) {
  params.validate();
  const Eigen::Index nv = params.num_visible();
  const Eigen::Index nh = params.num_hidden();
  guard(nv, 12);
  guard(nh, 16);
  const Eigen::Index sv = Eigen::Index{1} << nv;
  const Eigen::Index sh = Eigen::Index{1} << nh;
  // ph(h, v) = p(h | v), pv(v', h) = p(v' | h)
  Mat ph(sh, sv), pv(sv, sh);
  for (Eigen::Index vi = 0; vi < sv; ++vi) {
    const Vec m = rbm_conditionals(params, Given::visible, bits(vi, nv));
    for (Eigen::Index hi = 0; hi < sh; ++hi) ph(hi, vi) = bernoulli_prob(m, bits(hi, nh));
  }
  for (Eigen::Index hi = 0; hi < sh; ++hi) {
    const Vec m = rbm_conditionals(params, Given::hidden, bits(hi, nh));
    for (Eigen::Index vi = 0; vi < sv; ++vi) pv(vi, hi) = bernoulli_prob(m, bits(vi, nv));
  }
  return pv * ph;
}

double contrastive_divergence(const RbmParams& params, const Vec& p0, int n) {
  const Mat t = rbm_visible_gibbs_kernel(params);
  if (p0.size() != t.rows()) throw DimensionError("initial distribution must cover every visible configuration");
  Vec pn = p0;
  for (int k = 0; k < n; ++k) pn = t * pn;
  const Vec p = rbm_visible_distribution(params);
  return kl_vectors(p0, p) - kl_vectors(pn, p);
}

Vec rbm_joint_distribution(const RbmParams& params) {
  params.validate();
  const Eigen::Index nv = params.num_visible();
  const Eigen::Index nh = params.num_hidden();
  guard(nv + nh, kMaxEnumeratedUnits);
  const Eigen::Index sv = Eigen::Index{1} << nv;
  Vec logp(Eigen::Index{1} << (nv + nh));
  for (Eigen::Index hi = 0; hi < (Eigen::Index{1} << nh); ++hi)
    for (Eigen::Index vi = 0; vi < sv; ++vi)
      logp(vi + sv * hi) = -rbm_energy(params, bits(vi, nv), bits(hi, nh));
  return (logp.array() - log_sum_exp(logp)).exp().matrix();
}

Mat rbm_gibbs_sweep_operator(const RbmParams& params) {
  params.validate();
  const Eigen::Index nv = params.num_visible();
  const Eigen::Index nh = params.num_hidden();
  guard(nv + nh, 12);
  const Eigen::Index sv = Eigen::Index{1} << nv;
  const Eigen::Index sh = Eigen::Index{1} << nh;
  Mat op = Mat::Zero(sv * sh, sv * sh);
  for (Eigen::Index vi = 0; vi < sv; ++vi) {
    const Vec hm = rbm_conditionals(params, Given::visible, bits(vi, nv));
    for (Eigen::Index hn = 0; hn < sh; ++hn) {
      const Vec h = bits(hn, nh);
      const double p_h = bernoulli_prob(hm, h);
      const Vec vm = rbm_conditionals(params, Given::hidden, h);
      for (Eigen::Index vn = 0; vn < sv; ++vn) {
        const double p = p_h * bernoulli_prob(vm, bits(vn, nv));
        // The sweep ignores the current hidden state.
        for (Eigen::Index hi = 0; hi < sh; ++hi) op(vn + sv * hn, vi + sv * hi) = p;
      }
    }
  }
  return op;
}

RbmParams rbm_train_cd(RbmParams params, const Mat& data, int n, double learning_rate, int steps, Rng& rng) {
  for (int s = 0; s < steps; ++s) {
    const RbmGradient g = cd_n_gradient(params, data, n, rng);
    params.weights -= learning_rate * g.d_weights;
    params.visible_bias -= learning_rate * g.d_visible;
    params.hidden_bias -= learning_rate * g.d_hidden;
  }
  return params;
}

Mat rbm_sample(const RbmParams& params, Eigen::Index n, int burn_in, Rng& rng) {
  params.validate();
  Mat out(n, params.num_visible());
  for (Eigen::Index c = 0; c < n; ++c) {
    Vec v = sample_bernoulli(Vec::Constant(params.num_visible(), 0.5), rng);
    for (int k = 0; k < burn_in; ++k) {
      const Vec h = sample_bernoulli(rbm_conditionals(params, Given::visible, v), rng);
      v = sample_bernoulli(rbm_conditionals(params, Given::hidden, h), rng);
    }
    out.row(c) = v.transpose();
  }
  return out;
}

DiscreteLatentModel rbm_as_latent_model(const RbmParams& params) {
  params.validate();
  const Eigen::Index nv = params.num_visible();
  const Eigen::Index nh = params.num_hidden();
  guard(nv, 16);
  guard(nh, 16);
  const Eigen::Index sv = Eigen::Index{1} << nv;
  const Eigen::Index sh = Eigen::Index{1} << nh;
  Vec log_source(sh);
  Mat emission(sh, sv);
  for (Eigen::Index hi = 0; hi < sh; ++hi) {
    const Vec h = bits(hi, nh);
    const Vec a = params.visible_bias + params.weights * h;
    log_source(hi) = params.hidden_bias.dot(h);
    for (Eigen::Index i = 0; i < nv; ++i) log_source(hi) += softplus(a(i));
    const Vec m = sigmoid(a);
    for (Eigen::Index vi = 0; vi < sv; ++vi) emission(hi, vi) = bernoulli_prob(m, bits(vi, nv));
  }
  return DiscreteLatentModel(DiscreteDistribution::from_log_weights(log_source), emission);
}

}  // namespace lvm
