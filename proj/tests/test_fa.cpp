#include <doctest.h>

#include "lvm/errors.hpp"
#include "lvm/factor_analysis.hpp"
#include "oracles.hpp"

using namespace lvm;

namespace {

FaParams random_fa(Rng& rng, Eigen::Index d, Eigen::Index k) {
  FaParams p;
  p.loading = oracle::random_matrix(rng, d, k);
  p.offset = rng.normal_vector(d);
  p.diag_noise = Vec::Constant(d, 0.2) + 0.5 * rng.normal_vector(d).cwiseAbs();
  return p;
}

Mat sample_fa(const FaParams& p, Eigen::Index n, Rng& rng) {
  Mat x(n, p.dim());
  for (Eigen::Index i = 0; i < n; ++i)
    x.row(i) = (p.loading * rng.normal_vector(p.num_factors()) + p.offset +
                p.diag_noise.cwiseSqrt().cwiseProduct(rng.normal_vector(p.dim())))
                   .transpose();
  return x;
}

}  // namespace

TEST_SUITE("factor-analysis") {

TEST_CASE("recognition and marginal against the joint") {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const FaParams p = random_fa(rng, 5, 2);
    const Vec x = rng.normal_vector(5);
    Vec mean(7);
    mean << Vec::Zero(2), p.offset;
    Mat cov(7, 7);
    cov << Mat::Identity(2, 2), p.loading.transpose(), p.loading,
        p.loading * p.loading.transpose() + Mat(p.diag_noise.asDiagonal());
    const auto ref = oracle::condition(mean, cov, 2, x);
    const GaussianBelief post = fa_recognize(p, x);
    CHECK(oracle::max_abs(post.mean() - ref.mean) < 1e-10);
    CHECK(oracle::max_abs(post.cov() - ref.cov) < 1e-10);
    const double lm = oracle::log_normal(x, p.offset, cov.bottomRightCorner(5, 5));
    CHECK(fa_log_marginal(p, x) == doctest::Approx(lm).epsilon(1e-11));
  }
}

TEST_CASE("EM monotone and tight") {
  Rng rng(2);
  const FaParams truth = random_fa(rng, 6, 2);
  const Mat x = sample_fa(truth, 200, rng);
  Rng init(3);
  FaEm em(x, fa_initialize(x, 2, init));
  double prev = em.e_step();
  for (int it = 0; it < 50; ++it) {
    const double m = em.m_step();
    const double e = em.e_step();
    CHECK(m <= prev + 1e-9);
    CHECK(e <= m + 1e-9);
    CHECK(std::abs(e + fa_mean_log_likelihood(em.params(), x)) < 1e-9);
    prev = e;
  }
}

TEST_CASE("iterative PCA finds the top eigenspace") {
  Rng rng(4);
  Mat x = oracle::random_matrix(rng, 300, 5) * Vec{{3.0, 2.0, 1.0, 0.5, 0.2}}.asDiagonal();
  x = x * oracle::random_spd(rng, 5);
  const Mat w = pca_iterate(oracle::random_matrix(rng, 5, 2), x, 5000);
  const Mat centered = x.rowwise() - x.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Mat> es(centered.transpose() * centered);
  const Mat top = es.eigenvectors().rightCols(2);
  CHECK(oracle::principal_angle(w, top) < 1e-6);
  CHECK_THROWS_AS(pca_iterate(Mat::Zero(5, 2), x, 10), RankError);
}

TEST_CASE("invalid parameters") {
  Rng rng(5);
  FaParams p = random_fa(rng, 3, 1);
  p.diag_noise(0) = 0.0;
  CHECK_THROWS(p.validate());
  CHECK_THROWS_AS(fa_recognize(random_fa(rng, 3, 1), Vec::Zero(4)), DimensionError);
}

}
