#include <gtest/gtest.h>

#include <Eigen/QR>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "cklemap/error.hpp"
#include "cklemap/trust_region.hpp"

namespace cklemap {
namespace {

class Linear : public LeastSquaresProblem {
 public:
  Linear(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  Vector residual(const Vector& x) override { return a_ * x - b_; }
  Matrix jacobian(const Vector&) override { return a_; }

 private:
  Matrix a_;
  Vector b_;
};

class Rosenbrock : public LeastSquaresProblem {
 public:
  Vector residual(const Vector& x) override {
    return (Vector(2) << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]).finished();
  }
  Matrix jacobian(const Vector& x) override { return (Matrix(2, 2) << -20.0 * x[0], 10.0, -1.0, 0.0).finished(); }
};

// Wraps a problem and sabotages selected residual calls (1-based count).
class Faulty : public LeastSquaresProblem {
 public:
  Faulty(LeastSquaresProblem& inner, std::function<Vector(int, const Vector&)> hook)
      : inner_(inner), hook_(std::move(hook)) {}
  Vector residual(const Vector& x) override {
    ++calls_;
    return hook_(calls_, inner_.residual(x));
  }
  Matrix jacobian(const Vector& x) override { return inner_.jacobian(x); }

 private:
  LeastSquaresProblem& inner_;
  std::function<Vector(int, const Vector&)> hook_;
  int calls_ = 0;
};

TEST(TrustRegion, LinearLeastSquaresMatchesQr) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix a(20, 5);
  Vector b(20);
  for (Index i = 0; i < 20; ++i) {
    b[i] = normal(rng);
    for (Index j = 0; j < 5; ++j) a(i, j) = normal(rng);
  }
  Linear prob(a, b);
  const LsqResult r = trust_region_lsq(prob, Vector::Zero(5));
  EXPECT_TRUE(converged(r.status)) << to_string(r.status);
  const Vector expected = a.colPivHouseholderQr().solve(b);
  EXPECT_LE((r.x - expected).norm(), 1e-8 * expected.norm());
  EXPECT_LE(r.iterations, 3);
}

TEST(TrustRegion, Rosenbrock) {
  Rosenbrock prob;
  const LsqResult r = trust_region_lsq(prob, Vector((Vector(2) << -1.2, 1.0).finished()));
  EXPECT_TRUE(converged(r.status)) << to_string(r.status);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  EXPECT_LT(r.cost, 1e-12);
}

TEST(TrustRegion, CostsStrictlyDecrease) {
  Rosenbrock prob;
  const LsqResult r = trust_region_lsq(prob, Vector((Vector(2) << -1.2, 1.0).finished()));
  ASSERT_GE(r.costs.size(), 2u);
  for (std::size_t k = 1; k < r.costs.size(); ++k) EXPECT_LT(r.costs[k], r.costs[k - 1]);
  EXPECT_EQ(r.costs.back(), r.cost);
  EXPECT_GE(r.evaluations, static_cast<int>(r.costs.size()));
}

TEST(TrustRegion, ZeroResidualAtStart) {
  Linear prob(Matrix::Identity(2, 2), Vector::Ones(2));
  const LsqResult r = trust_region_lsq(prob, Vector::Ones(2));
  EXPECT_EQ(r.status, LsqStatus::ConvergedGtol);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.cost, 0.0);
}

TEST(TrustRegion, EvaluationErrorShrinksRadius) {
  Rosenbrock inner;
  Faulty prob(inner, [](int call, const Vector& f) -> Vector {
    if (call == 2 || call == 3) throw EvaluationError("not here");
    return f;
  });
  const LsqResult r = trust_region_lsq(prob, Vector((Vector(2) << -1.2, 1.0).finished()));
  EXPECT_TRUE(converged(r.status));
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
}

TEST(TrustRegion, NonFiniteTrialIsRejected) {
  Rosenbrock inner;
  Faulty prob(inner, [](int call, const Vector& f) -> Vector {
    if (call == 2) return Vector::Constant(f.size(), std::numeric_limits<double>::quiet_NaN());
    return f;
  });
  const LsqResult r = trust_region_lsq(prob, Vector((Vector(2) << -1.2, 1.0).finished()));
  EXPECT_TRUE(converged(r.status));
  EXPECT_TRUE(r.x.allFinite());
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(TrustRegion, NonFiniteStartThrows) {
  Rosenbrock inner;
  Faulty prob(inner, [](int, const Vector& f) -> Vector { return f * std::numeric_limits<double>::infinity(); });
  EXPECT_THROW(trust_region_lsq(prob, Vector::Zero(2)), EvaluationError);
  const Vector bad = Vector::Constant(2, std::nan(""));
  EXPECT_THROW(trust_region_lsq(inner, bad), InvalidArgument);
}

TEST(TrustRegion, OtherExceptionsPropagate) {
  Rosenbrock inner;
  Faulty prob(inner, [](int call, const Vector& f) -> Vector {
    if (call == 2) throw std::runtime_error("disk on fire");
    return f;
  });
  EXPECT_THROW(trust_region_lsq(prob, Vector::Zero(2)), std::runtime_error);
}

TEST(TrustRegion, ZeroBudgetTimesOut) {
  Rosenbrock prob;
  TrustRegionOptions opts;
  opts.time_budget_s = 0.0;
  const LsqResult r = trust_region_lsq(prob, Vector::Zero(2), opts);
  EXPECT_EQ(r.status, LsqStatus::Timeout);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(to_string(r.status), "timeout");
  EXPECT_FALSE(converged(r.status));
}

TEST(TrustRegion, IterationCap) {
  Rosenbrock prob;
  TrustRegionOptions opts;
  opts.max_iterations = 1;
  const LsqResult r = trust_region_lsq(prob, Vector((Vector(2) << -1.2, 1.0).finished()), opts);
  EXPECT_EQ(r.status, LsqStatus::MaxIterations);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(to_string(r.status), "max-iter");
}

TEST(TrustRegion, RejectsBadTolerances) {
  Rosenbrock prob;
  TrustRegionOptions opts;
  opts.gtol = 0.0;
  EXPECT_THROW(trust_region_lsq(prob, Vector::Zero(2), opts), InvalidArgument);
}

TEST(TrustRegion, StatusNames) {
  EXPECT_EQ(to_string(LsqStatus::ConvergedFtol), "converged-ftol");
  EXPECT_EQ(to_string(LsqStatus::ConvergedGtol), "converged-gtol");
  EXPECT_EQ(to_string(LsqStatus::ConvergedXtol), "converged-xtol");
  EXPECT_TRUE(converged(LsqStatus::ConvergedXtol));
  EXPECT_FALSE(converged(LsqStatus::MaxIterations));
}

}  // namespace
}  // namespace cklemap
