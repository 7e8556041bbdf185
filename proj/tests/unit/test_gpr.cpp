#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <numbers>
#include <random>

#include "cklemap/error.hpp"
#include "cklemap/gpr.hpp"
#include "problems.hpp"

namespace cklemap {
namespace {

std::vector<Point> random_points(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

Vector draw(const std::vector<Point>& x, const KernelParams& k, std::mt19937_64& rng) {
  Matrix c = covariance(x, x, k, true);
  c.diagonal().array() += 1e-10 * k.sigma * k.sigma;
  const Eigen::LLT<Matrix> llt(c);
  std::normal_distribution<double> normal;
  Vector z(c.rows());
  for (auto& v : z) v = normal(rng);
  return llt.matrixL() * z;
}

double dense_nlml(const KernelParams& k, const std::vector<Point>& x, const Vector& y) {
  const Matrix c = covariance(x, x, k, true);
  const Eigen::FullPivLU<Matrix> lu(c);
  const double n = static_cast<double>(y.size());
  return 0.5 * y.dot(lu.solve(y)) + 0.5 * std::log(lu.determinant()) + 0.5 * n * std::log(2 * std::numbers::pi);
}

TEST(Matern52, KnownValues) {
  const KernelParams unit{1.0, 1.0, 0.0};
  EXPECT_EQ(matern52(0.0, unit), 1.0);
  EXPECT_NEAR(matern52(1.0, unit), 0.5239941088318203, 1e-15);
  const double s5 = std::sqrt(5.0);
  EXPECT_NEAR(matern52(1.0, unit), (1.0 + s5 + 5.0 / 3.0) * std::exp(-s5), 1e-15);
  const KernelParams k{2.0, 0.5, 0.1};
  EXPECT_NEAR(matern52(0.5, k), 4.0 * 0.5239941088318203, 1e-14);
  EXPECT_DOUBLE_EQ(matern52(0.0, k, true), 4.1);
  EXPECT_DOUBLE_EQ(matern52(0.0, k, false), 4.0);
}

TEST(Matern52, MonotoneDecayInDistance) {
  const KernelParams k{1.3, 0.2, 0.0};
  double prev = matern52(0.0, k);
  for (int i = 1; i < 100; ++i) {
    const double v = matern52(0.01 * i, k);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
}

TEST(Covariance, NuggetOnSamePointDiagonalOnly) {
  const std::vector<Point> a{{0, 0}, {1, 0}}, b{{0, 0}, {1, 0}};
  const KernelParams k{1.0, 1.0, 0.5};
  const Matrix same = covariance(a, a, k, true);
  const Matrix cross = covariance(a, b, k, false);
  EXPECT_DOUBLE_EQ(same(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(cross(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(same(0, 1), cross(0, 1));
  EXPECT_EQ(same, same.transpose());
}

TEST(Nlml, SinglePointClosedForm) {
  const std::vector<Point> x{{0.3, 0.4}};
  EXPECT_NEAR(neg_log_marginal_likelihood({1.0, 1.0, 0.0}, x, Vector::Zero(1)), 0.9189385332046727, 1e-15);
  // sigma^2 = 4, y = 2: 0.5 * 1 + log 2 + 0.5 log 2 pi
  EXPECT_NEAR(neg_log_marginal_likelihood({2.0, 1.0, 0.0}, x, Vector::Constant(1, 2.0)),
              0.5 + std::log(2.0) + 0.9189385332046727, 1e-14);
}

TEST(Nlml, MatchesDenseOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_points(15, rng);
    const KernelParams k{0.5 + 0.2 * trial, 0.1 + 0.05 * trial, 1e-6};
    const Vector y = draw(x, {1.0, 0.3, 0.0}, rng);
    const double expected = dense_nlml(k, x, y);
    EXPECT_NEAR(neg_log_marginal_likelihood(k, x, y), expected, 1e-8 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Nlml, ZeroDataOnlyLogDet) {
  std::mt19937_64 rng(2);
  const auto x = random_points(10, rng);
  const KernelParams k{1.0, 0.3, 1e-6};
  const Matrix c = covariance(x, x, k, true);
  const double expected = 0.5 * std::log(c.determinant()) + 5.0 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(neg_log_marginal_likelihood(k, x, Vector::Zero(10)), expected, 1e-9);
}

TEST(Nlml, DuplicatePointsWithoutNuggetAreInfinite) {
  const std::vector<Point> x{{0.5, 0.5}, {0.5, 0.5}};
  const Vector y = Vector::Ones(2);
  EXPECT_TRUE(std::isinf(neg_log_marginal_likelihood({1.0, 1.0, 0.0}, x, y)));
  EXPECT_TRUE(std::isfinite(neg_log_marginal_likelihood({1.0, 1.0, 0.1}, x, y)));
}

TEST(Fit, RecoversHyperparameters) {
  // Median over seeds keeps the check robust to a single unlucky draw.
  const KernelParams truth{1.5, 0.3, 0.0};
  std::vector<double> sigmas, lengths;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto x = random_points(200, rng);
    const Vector y = draw(x, truth, rng);
    const FitResult r = fit_hyperparameters(x, y);
    EXPECT_EQ(r.status, FitStatus::Ok);
    sigmas.push_back(r.params.sigma);
    lengths.push_back(r.params.length);
  }
  std::sort(sigmas.begin(), sigmas.end());
  std::sort(lengths.begin(), lengths.end());
  EXPECT_NEAR(sigmas[1], truth.sigma, 0.3 * truth.sigma);
  EXPECT_NEAR(lengths[1], truth.length, 0.3 * truth.length);
}

TEST(Fit, NoWorseThanAnyStart) {
  std::mt19937_64 rng(3);
  const auto x = random_points(40, rng);
  const Vector y = draw(x, {0.7, 0.15, 0.0}, rng);
  const FitResult r = fit_hyperparameters(x, y);
  ASSERT_EQ(r.start_nlml.size(), 16u);
  for (const double s : r.start_nlml) EXPECT_LE(r.nlml, s);
  EXPECT_NEAR(r.nlml, neg_log_marginal_likelihood(r.params, x, y), 1e-12 * std::abs(r.nlml));
  EXPECT_GE(r.params.sigma, r.sigma_min);
  EXPECT_LE(r.params.sigma, r.sigma_max);
  EXPECT_GE(r.params.length, r.length_min);
  EXPECT_LE(r.params.length, r.length_max);
}

TEST(Fit, DegenerateConstantData) {
  const std::vector<Point> x{{0, 0}, {1, 0}, {0, 1}};
  const FitResult r = fit_hyperparameters(x, Vector::Constant(3, 2.0));
  EXPECT_EQ(r.status, FitStatus::Degenerate);
  EXPECT_DOUBLE_EQ(r.params.sigma, r.sigma_min);
  EXPECT_DOUBLE_EQ(r.params.length, r.length_max);
}

TEST(Fit, RejectsUnusableInput) {
  const std::vector<Point> one{{0, 0}};
  EXPECT_THROW(fit_hyperparameters(one, Vector::Ones(1)), InvalidArgument);
  const std::vector<Point> same{{0.2, 0.2}, {0.2, 0.2}};
  EXPECT_THROW(fit_hyperparameters(same, Vector::LinSpaced(2, 0, 1)), InvalidArgument);
  const std::vector<Point> two{{0, 0}, {1, 1}};
  EXPECT_THROW(fit_hyperparameters(two, Vector::Ones(3)), InvalidArgument);
}

class ConditionTest : public ::testing::Test {
 protected:
  Mesh mesh = build_mesh(testing::square_spec(8));
  KernelParams kernel{1.2, 0.3, 1e-10};
  ObservationSet train{{0, 9, 27, 36, 50, 63}, (Vector(6) << 0.4, -1.0, 0.3, 1.1, -0.2, 0.8).finished()};
};

TEST_F(ConditionTest, MatchesDenseKriging) {
  const GpPosterior post = condition(kernel, train, mesh);
  const auto xs = gather_points(mesh, train.indices());
  const auto all = mesh.centers();
  const Matrix kss = covariance(xs, xs, kernel, true);
  const Matrix ksa = covariance(xs, all, kernel, false);
  const Eigen::FullPivLU<Matrix> lu(kss);
  const Vector mean = ksa.transpose() * lu.solve(train.values());
  const Matrix cov = covariance(all, all, kernel, true) - ksa.transpose() * lu.solve(ksa);
  EXPECT_LE((post.mean - mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((post.cov - cov).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(ConditionTest, InterpolatesAndIsPsd) {
  const GpPosterior post = condition(kernel, train, mesh);
  for (Index k = 0; k < train.size(); ++k) {
    const Index c = train.indices()[k];
    EXPECT_NEAR(post.mean[c], train.values()[k], 1e-6);
    EXPECT_NEAR(post.cov(c, c), 0.0, 1e-6);
  }
  EXPECT_EQ(post.cov, post.cov.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(post.cov);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  EXPECT_LE(post.cov.diagonal().maxCoeff(), kernel.sigma * kernel.sigma + kernel.nugget + 1e-12);
}

TEST_F(ConditionTest, Errors) {
  EXPECT_THROW(condition(kernel, ObservationSet{}, mesh), InvalidArgument);
  const ObservationSet out_of_range{{64}, Vector::Ones(1)};
  EXPECT_THROW(condition(kernel, out_of_range, mesh), InvalidArgument);
  EXPECT_THROW(condition({-1.0, 1.0, 0.0}, train, mesh), InvalidArgument);
}

}  // namespace
}  // namespace cklemap
