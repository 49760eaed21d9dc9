// lvm: fit, infer, sample and evaluate latent-variable models from CSV data.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "lvm/discriminative.hpp"
#include "lvm/errors.hpp"
#include "lvm/factor_analysis.hpp"
#include "lvm/gmm.hpp"
#include "lvm/hmm.hpp"
#include "lvm/info.hpp"
#include "lvm/io.hpp"
#include "lvm/kalman.hpp"
#include "lvm/rbm.hpp"
#include "lvm/sparse_coding.hpp"

using namespace lvm;

namespace {

struct Options {
  std::string command;
  std::string model;
  std::string data;
  std::string in;
  std::string out;
  std::string metrics;
  std::string seq_column;
  std::string target;
  std::string family = "gaussian";
  int k = -1;
  long n = -1;
  std::uint64_t seed = 0;
  int max_iter = -1;
  double tol = -1.0;
  int restarts = 1;
  double lr = -1.0;
  int cd_n = 1;
  double lambda = 1.0;
  double alpha = 1.0;
};

int exit_code_for(const std::string& code) {
  static const std::map<std::string, int> codes = {
      {"UsageError", 2},          {"DimensionError", 3},    {"PreconditionError", 4},
      {"SingularityError", 5},    {"EmptyComponentError", 6}, {"NumericalDivergenceError", 7},
      {"UnderflowError", 8},      {"ConvergenceError", 9},  {"ParseError", 10},
      {"RankError", 11},          {"SizeError", 12},        {"HessianError", 13},
      {"SeparationError", 14},    {"VersionError", 15},     {"KindMismatchError", 16},
      {"IoError", 17}};
  const auto it = codes.find(code);
  return it == codes.end() ? 1 : it->second;
}

int report_error(const std::string& code, const std::string& message) {
  const int exit_code = exit_code_for(code);
  Json j = {{"error", code}, {"message", message}, {"exit_code", exit_code}};
  std::cerr << j.dump() << '\n';
  return exit_code;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
}

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void require_data(const Options& o) {
  if (o.data.empty()) throw UsageError("--data is required");
}

void require_k(const Options& o) {
  if (o.k < 1) throw UsageError("--k must be a positive integer");
}

EmConfig em_config(const Options& o) {
  EmConfig c;
  if (o.max_iter >= 0) c.max_iter = o.max_iter;
  if (o.tol >= 0.0) c.tol = o.tol;
  c.seed = o.seed;
  c.restarts = o.restarts;
  return c;
}

std::vector<Mat> load_sequence_list(const Options& o) {
  require_data(o);
  if (o.seq_column.empty()) return {load_dataset(o.data).rows};
  return load_sequences(o.data, o.seq_column).sequences;
}

double total_rows(const std::vector<Mat>& seqs) {
  double n = 0.0;
  for (const Mat& s : seqs) n += static_cast<double>(s.rows());
  return n;
}

// Splits a dataset into GLiM features and a target column.
std::pair<Mat, Vec> glim_columns(const Dataset& d, const std::string& target,
                                 const std::vector<std::string>& features = {}) {
  if (d.dim() < 1) throw DimensionError("dataset has no columns");
  std::string t = target.empty() ? d.column_names.back() : target;
  Eigen::Index tcol = -1;
  for (std::size_t c = 0; c < d.column_names.size(); ++c)
    if (d.column_names[c] == t) tcol = static_cast<Eigen::Index>(c);
  if (tcol < 0) throw UsageError("no target column '" + t + "'");
  std::vector<Eigen::Index> cols;
  if (features.empty()) {
    for (Eigen::Index c = 0; c < d.dim(); ++c)
      if (c != tcol) cols.push_back(c);
  } else {
    for (const auto& f : features) {
      Eigen::Index found = -1;
      for (std::size_t c = 0; c < d.column_names.size(); ++c)
        if (d.column_names[c] == f) found = static_cast<Eigen::Index>(c);
      if (found < 0) throw DimensionError("data lacks feature column '" + f + "'");
      cols.push_back(found);
    }
  }
  Mat x(d.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = d.rows.col(cols[j]);
  return {x, d.rows.col(tcol)};
}

Mat with_ones(const Mat& x) {
  Mat a(x.rows(), x.cols() + 1);
  a << x, Vec::Ones(x.rows());
  return a;
}

// Exact, by enumerating the visible configurations.
double rbm_mean_nll(const RbmParams& p, const Mat& data) {
  check_binary(data);
  const Vec pv = rbm_visible_distribution(p);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Eigen::Index idx = 0;
    for (Eigen::Index b = 0; b < data.cols(); ++b)
      if (data(i, b) != 0.0) idx |= Eigen::Index{1} << b;
    acc -= std::log(pv(idx));
  }
  return acc / static_cast<double>(data.rows());
}

// Mean log-likelihood per sample (per observation for sequence models).
double evaluate(const ModelFile& m, const Options& o) {
  const std::string& kind = m.kind;
  if (kind == "hmm" || kind == "ssm") {
    const auto seqs = load_sequence_list(o);
    double ll = 0.0;
    if (kind == "hmm") {
      const HmmParams p = hmm_from_json(m.params);
      for (const Mat& s : seqs) ll += hmm_filter(p, s).loglik;
    } else {
      const SsmParams p = ssm_from_json(m.params);
      for (const Mat& s : seqs) ll += kalman_filter(p, s).loglik;
    }
    return ll / total_rows(seqs);
  }
  require_data(o);
  const Dataset d = load_dataset(o.data);
  if (d.size() == 0) throw PreconditionError("dataset is empty");
  double ll = 0.0;
  if (kind == "gmm") {
    const GmmParams p = gmm_from_json(m.params);
    for (Eigen::Index i = 0; i < d.size(); ++i) ll += gmm_log_marginal(p, d.rows.row(i).transpose());
    return ll / static_cast<double>(d.size());
  }
  if (kind == "fa") return fa_mean_log_likelihood(fa_from_json(m.params), d.rows);
  if (kind == "sc") {
    const SparseCodingParams p = sc_from_json(m.params);
    for (Eigen::Index i = 0; i < d.size(); ++i) ll += sc_log_marginal(p, d.rows.row(i).transpose());
    return ll / static_cast<double>(d.size());
  }
  if (kind == "rbm") {
    const RbmParams p = rbm_from_json(m.params);
    if (d.dim() != p.num_visible()) throw DimensionError("data width does not match the RBM");
    return -rbm_mean_nll(p, d.rows);
  }
  if (kind == "glim") {
    const GlimModel g = glim_from_json(m.params);
    const auto [x, z] = glim_columns(d, g.target, g.features);
    if (x.cols() != g.weights.size()) throw DimensionError("feature count does not match the model");
    Vec w(g.weights.size() + 1);
    w << g.weights, g.intercept;
    return -glim_objective(with_ones(x), z, g.family, w);
  }
  if (kind == "ica") return -ica_loss(ica_from_json(m.params), d.rows);
  throw UsageError("unknown model kind '" + kind + "'");
}

Json trace_json(const std::vector<double>& trace) {
  Json t = Json::array();
  for (double v : trace) t.push_back(v);
  return t;
}

int cmd_fit(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  ModelFile file;
  file.kind = o.model;
  file.fit.seed = o.seed;
  std::vector<double> trace;

  const auto record = [&](const auto& report, Json params) {
    file.params = std::move(params);
    file.fit.iterations = report.iterations;
    file.fit.final_free_energy = report.final_free_energy();
    file.fit.seed = report.seed;
    trace = report.free_energy_trace;
  };

  if (o.model == "gmm") {
    require_k(o);
    require_data(o);
    const Dataset d = load_dataset(o.data);
    const auto r = fit_gmm(d.rows, o.k, em_config(o));
    record(r, to_json(r.final_params));
  } else if (o.model == "fa") {
    require_k(o);
    require_data(o);
    const Dataset d = load_dataset(o.data);
    const auto r = fit_fa(d.rows, o.k, em_config(o));
    record(r, to_json(r.final_params));
  } else if (o.model == "sc") {
    require_k(o);
    require_data(o);
    const Dataset d = load_dataset(o.data);
    const auto r = fit_sparse_coding(d.rows, o.k, o.lambda, o.alpha, em_config(o));
    record(r, to_json(r.final_params));
  } else if (o.model == "hmm") {
    require_k(o);
    const auto seqs = load_sequence_list(o);
    const auto r = fit_hmm(seqs, o.k, em_config(o));
    record(r, to_json(r.final_params));
  } else if (o.model == "ssm") {
    require_k(o);
    const auto seqs = load_sequence_list(o);
    const auto r = fit_lds(seqs, o.k, em_config(o));
    record(r, to_json(r.final_params));
  } else if (o.model == "rbm") {
    require_k(o);
    require_data(o);
    const Dataset d = load_dataset(o.data);
    check_binary(d.rows);
    Rng rng(o.seed);
    Rng init = rng.substream("init");
    RbmParams p = RbmParams::zeros(d.dim(), o.k);
    for (Eigen::Index i = 0; i < p.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < p.weights.cols(); ++j) p.weights(i, j) = 0.1 * init.normal();
    Rng chains = rng.substream("chains");
    const int steps = o.max_iter >= 0 ? o.max_iter : 2000;
    const double lr = o.lr > 0.0 ? o.lr : 0.05;
    const bool enumerable = d.dim() <= 16;
    const auto nll = [&](const RbmParams& q) { return rbm_mean_nll(q, d.rows); };
    if (enumerable) trace.push_back(nll(p));
    for (int s = 0; s < steps; ++s) {
      p = rbm_train_cd(p, d.rows, o.cd_n, lr, 1, chains);
      if (enumerable) trace.push_back(nll(p));
    }
    file.params = to_json(p);
    file.fit.iterations = steps;
    file.fit.final_free_energy = trace.empty() ? 0.0 : trace.back();
  } else if (o.model == "glim") {
    require_data(o);
    const Dataset d = load_dataset(o.data);
    GlimModel g;
    g.family = GlimFamily::parse(o.family);
    g.target = o.target.empty() ? d.column_names.back() : o.target;
    const auto [x, z] = glim_columns(d, g.target);
    for (std::size_t c = 0; c < d.column_names.size(); ++c)
      if (d.column_names[c] != g.target) g.features.push_back(d.column_names[c]);
    IrlsConfig cfg;
    if (o.max_iter >= 0) cfg.max_iter = o.max_iter;
    if (o.tol >= 0.0) cfg.tol = o.tol;
    const IrlsResult r = irls_fit(with_ones(x), z, g.family, cfg);
    g.weights = r.weights.head(x.cols());
    g.intercept = r.weights(x.cols());
    file.params = to_json(g);
    file.fit.iterations = r.iterations;
    file.fit.final_free_energy = r.objective_trace.back();
    trace = r.objective_trace;
  } else if (o.model == "ica") {
    require_data(o);
    const Dataset d = load_dataset(o.data);
    IcaConfig cfg;
    cfg.seed = o.seed;
    if (o.max_iter >= 0) cfg.iters = o.max_iter;
    if (o.lr > 0.0) cfg.learning_rate = o.lr;
    if (o.family == "gaussian-cdf") cfg.nonlinearity = IcaNonlinearity::gaussian_cdf;
    const IcaFitResult r = ica_fit(d.rows, cfg);
    file.params = to_json(r.model);
    file.fit.iterations = static_cast<int>(r.loss_trace.size()) - 1;
    file.fit.final_free_energy = r.loss_trace.back();
    trace = r.loss_trace;
  } else {
    throw UsageError("unknown model '" + o.model + "'");
  }

  // Evaluate the stored parameters so fit and eval report the same number.
  const ModelFile stored = parse_model(serialize_model(file));
  const double ll = evaluate(stored, o);
  if (!o.out.empty()) save_model(file, o.out);
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  Json metrics = {{"loglik_per_sample", ll},
                  {"free_energy_trace", trace_json(trace)},
                  {"iterations", file.fit.iterations},
                  {"seed", file.fit.seed},
                  {"wall_ms", ms}};
  emit(o.metrics, metrics.dump() + "\n");
  return 0;
}

ModelFile load_input_model(const Options& o) {
  if (o.in.empty()) throw UsageError("--in MODEL is required");
  ModelFile m = load_model(o.in);
  expect_kind(m, o.model);
  return m;
}

int cmd_eval(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  const ModelFile m = load_input_model(o);
  Json metrics = {{"loglik_per_sample", evaluate(m, o)}};
  if (m.kind == "rbm") {
    const RbmParams p = rbm_from_json(m.params);
    const Dataset d = load_dataset(o.data);
    const DiscreteLatentModel model = rbm_as_latent_model(p);
    const DiscreteDistribution data(empirical_visible_distribution(d.rows));
    const CodingCostReport r = bits_back_costs(model, data, ExactProxy{});
    metrics["coding_cost_nats"] = {{"marginal_cross_entropy", r.marginal_cross_entropy},
                                   {"hard_assignment_cost", r.hard_assignment_cost},
                                   {"stochastic_cost_before_refund", r.stochastic_cost_before_refund},
                                   {"refund", r.refund},
                                   {"proxy_kl", r.proxy_kl}};
  }
  metrics["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  emit(o.metrics.empty() ? o.out : o.metrics, metrics.dump() + "\n");
  return 0;
}

int cmd_infer(const Options& o) {
  const ModelFile m = load_input_model(o);
  const std::string& kind = m.kind;
  if (kind == "hmm" || kind == "ssm") {
    const auto seqs = load_sequence_list(o);
    std::vector<Vec> rows;
    std::vector<std::string> names = {"seq", "t"};
    if (kind == "hmm") {
      const HmmParams p = hmm_from_json(m.params);
      names = concat(names, numbered("p", p.num_states()));
      for (std::size_t s = 0; s < seqs.size(); ++s) {
        const HmmPosteriors post = hmm_smoother(p, seqs[s]);
        for (Eigen::Index t = 0; t < post.smoother.rows(); ++t) {
          Vec r(2 + p.num_states());
          r << static_cast<double>(s), static_cast<double>(t), post.smoother.row(t).transpose();
          rows.push_back(r);
        }
      }
    } else {
      const SsmParams p = ssm_from_json(m.params);
      const Eigen::Index k = p.state_dim();
      names = concat(concat(names, numbered("m", k)), numbered("v", k));
      for (std::size_t s = 0; s < seqs.size(); ++s) {
        const SsmPosteriors post = kalman_smoother(p, seqs[s]);
        for (std::size_t t = 0; t < post.smoothed.size(); ++t) {
          Vec r(2 + 2 * k);
          r << static_cast<double>(s), static_cast<double>(t), post.smoothed[t].mean(), post.smoothed[t].cov().diagonal();
          rows.push_back(r);
        }
      }
    }
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    emit(o.out, to_csv(out, names));
    return 0;
  }

  require_data(o);
  const Dataset d = load_dataset(o.data);
  Mat out;
  std::vector<std::string> names;
  if (kind == "gmm") {
    const GmmParams p = gmm_from_json(m.params);
    out = gmm_e_step(p, d.rows).table;
    names = numbered("r", p.num_components());
  } else if (kind == "fa" || kind == "sc") {
    std::vector<GaussianBelief> post;
    Eigen::Index k = 0;
    if (kind == "fa") {
      const FaParams p = fa_from_json(m.params);
      k = p.num_factors();
      for (Eigen::Index i = 0; i < d.size(); ++i) post.push_back(fa_recognize(p, d.rows.row(i).transpose()));
    } else {
      const SparseCodingParams p = sc_from_json(m.params);
      k = p.num_sources();
      for (const auto& r : sc_e_step(p, d.rows))
        post.emplace_back(r.mode, SpdFactor(r.precision, "recognition precision").inverse());
    }
    out.resize(d.size(), 2 * k);
    for (Eigen::Index i = 0; i < d.size(); ++i) out.row(i) << post[i].mean().transpose(), post[i].cov().diagonal().transpose();
    names = concat(numbered("m", k), numbered("v", k));
  } else if (kind == "rbm") {
    const RbmParams p = rbm_from_json(m.params);
    if (d.dim() != p.num_visible()) throw DimensionError("data width does not match the RBM");
    out.resize(d.size(), p.num_hidden());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      out.row(i) = rbm_conditionals(p, Given::visible, d.rows.row(i).transpose()).transpose();
    names = numbered("h", p.num_hidden());
  } else if (kind == "glim") {
    const GlimModel g = glim_from_json(m.params);
    Mat x = d.rows;
    if (!g.features.empty()) {
      x.resize(d.size(), static_cast<Eigen::Index>(g.features.size()));
      for (std::size_t f = 0; f < g.features.size(); ++f) {
        auto it = std::find(d.column_names.begin(), d.column_names.end(), g.features[f]);
        if (it == d.column_names.end()) throw DimensionError("data lacks feature column '" + g.features[f] + "'");
        x.col(static_cast<Eigen::Index>(f)) = d.rows.col(it - d.column_names.begin());
      }
    }
    if (x.cols() != g.weights.size()) throw DimensionError("feature count does not match the model");
    const Vec eta = (x * g.weights).array() + g.intercept;
    out.resize(d.size(), 1);
    for (Eigen::Index i = 0; i < d.size(); ++i) out(i, 0) = g.family.response_mean(eta(i));
    names = {"mean"};
  } else if (kind == "ica") {
    const IcaModel p = ica_from_json(m.params);
    if (d.dim() != p.unmixing.cols()) throw DimensionError("data width does not match the unmixing matrix");
    out = d.rows * p.unmixing.transpose();
    names = numbered("s", p.unmixing.rows());
  } else {
    throw UsageError("unknown model kind '" + kind + "'");
  }
  emit(o.out, to_csv(out, names));
  return 0;
}

int cmd_sample(const Options& o) {
  const ModelFile m = load_input_model(o);
  if (o.n < 0) throw UsageError("--n must be a non-negative integer");
  const Eigen::Index n = o.n;
  Rng rng = Rng(o.seed).substream("sample");
  const std::string& kind = m.kind;
  Mat out;
  std::string prefix = "x";
  if (kind == "gmm") {
    const GmmParams p = gmm_from_json(m.params);
    out.resize(n, p.dim());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index c = rng.categorical(p.weights.probs());
      const Mat l = Eigen::LLT<Mat>(p.covs[c]).matrixL();
      out.row(i) = (p.means[c] + l * rng.normal_vector(p.dim())).transpose();
    }
  } else if (kind == "fa") {
    const FaParams p = fa_from_json(m.params);
    out.resize(n, p.dim());
    for (Eigen::Index i = 0; i < n; ++i)
      out.row(i) = (p.loading * rng.normal_vector(p.num_factors()) + p.offset +
                    p.diag_noise.cwiseSqrt().cwiseProduct(rng.normal_vector(p.dim())))
                       .transpose();
  } else if (kind == "sc") {
    out = sc_sample(sc_from_json(m.params), n, rng);
  } else if (kind == "hmm") {
    out = hmm_sample(hmm_from_json(m.params), n, rng).second;
    if (n == 0) out.resize(0, hmm_from_json(m.params).dim());
  } else if (kind == "ssm") {
    const SsmParams p = ssm_from_json(m.params);
    if (p.control_dim() > 0) throw UsageError("sampling a model with controls is not supported");
    out = ssm_sample(p, n, rng).obs;
  } else if (kind == "rbm") {
    out = rbm_sample(rbm_from_json(m.params), n, 1000, rng);
    prefix = "v";
  } else if (kind == "ica") {
    const IcaModel p = ica_from_json(m.params);
    const Eigen::Index k = p.unmixing.rows();
    Mat s(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < k; ++j) {
        if (p.nonlinearity == IcaNonlinearity::gaussian_cdf) {
          s(i, j) = rng.normal();
        } else {
          double u = rng.uniform();
          while (u == 0.0) u = rng.uniform();
          s(i, j) = std::log(u / (1.0 - u));
        }
      }
    out = s * p.unmixing.inverse().transpose();
  } else if (kind == "glim") {
    require_data(o);
    const GlimModel g = glim_from_json(m.params);
    const Dataset d = load_dataset(o.data);
    Mat x(d.size(), static_cast<Eigen::Index>(g.features.size()));
    for (std::size_t f = 0; f < g.features.size(); ++f) {
      auto it = std::find(d.column_names.begin(), d.column_names.end(), g.features[f]);
      if (it == d.column_names.end()) throw DimensionError("data lacks feature column '" + g.features[f] + "'");
      x.col(static_cast<Eigen::Index>(f)) = d.rows.col(it - d.column_names.begin());
    }
    const Eigen::Index rows = std::min<Eigen::Index>(n, d.size());
    out.resize(rows, 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double eta = x.row(i).dot(g.weights) + g.intercept;
      switch (g.family.name) {
        case GlimFamilyName::gaussian: out(i, 0) = eta + rng.normal(); break;
        case GlimFamilyName::bernoulli_logit: out(i, 0) = rng.uniform() < g.family.response_mean(eta) ? 1.0 : 0.0; break;
        case GlimFamilyName::poisson_log: out(i, 0) = std::poisson_distribution<long>(std::exp(eta))(rng); break;
        case GlimFamilyName::gamma_shape_log:
          out(i, 0) = std::gamma_distribution<double>(std::exp(eta), g.family.scale)(rng);
          break;
      }
    }
    emit(o.out, to_csv(out, {g.target.empty() ? "z" : g.target}));
    return 0;
  } else {
    throw UsageError("unknown model kind '" + kind + "'");
  }
  emit(o.out, to_csv(out, numbered(prefix, out.cols())));
  return 0;
}

void check_threads() {
  const char* env = std::getenv("LVM_THREADS");
  if (!env) return;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) throw UsageError("LVM_THREADS must be a positive integer");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Fit, infer, sample and evaluate latent-variable models"};
  app.add_option("command", o.command, "fit | infer | sample | eval")
      ->required()
      ->check(CLI::IsMember({"fit", "infer", "sample", "eval"}));
  app.add_option("--model", o.model, "gmm | fa | sc | hmm | ssm | rbm | glim | ica")
      ->required()
      ->check(CLI::IsMember({"gmm", "fa", "sc", "hmm", "ssm", "rbm", "glim", "ica"}));
  app.add_option("--data", o.data, "CSV file with a header line");
  app.add_option("--in", o.in, "model file for infer, sample and eval");
  app.add_option("--out", o.out, "model file (fit) or CSV output (infer, sample)");
  app.add_option("--metrics", o.metrics, "metrics JSON output; stdout when absent");
  app.add_option("--k", o.k, "components, factors, sources, states or hidden units");
  app.add_option("--n", o.n, "number of samples to draw");
  app.add_option("--family", o.family, "GLiM family, or the ICA nonlinearity");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--max-iter", o.max_iter, "iteration cap");
  app.add_option("--tol", o.tol, "convergence tolerance");
  app.add_option("--restarts", o.restarts, "EM restarts; the lowest final free energy wins");
  app.add_option("--seq-column", o.seq_column, "column that groups rows into sequences");
  app.add_option("--target", o.target, "GLiM response column; the last column by default");
  app.add_option("--lr", o.lr, "learning rate (rbm, ica)");
  app.add_option("--cd-n", o.cd_n, "Gibbs steps per CD gradient (rbm)");
  app.add_option("--lambda", o.lambda, "emission precision (sc)");
  app.add_option("--alpha", o.alpha, "Laplace scale of every source (sc)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what());
  }

  try {
    check_threads();
    if (o.command == "fit") return cmd_fit(o);
    if (o.command == "eval") return cmd_eval(o);
    if (o.command == "infer") return cmd_infer(o);
    return cmd_sample(o);
  } catch (const Error& e) {
    return report_error(e.code(), e.what());
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what());
  }
}
