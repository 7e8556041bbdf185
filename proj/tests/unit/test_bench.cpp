#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cklemap/bench.hpp"
#include "cklemap/error.hpp"
#include "problems.hpp"

namespace cklemap {
namespace {

ScalingSetup small_setup() {
  ScalingSetup s;
  s.base = testing::square_spec(6);
  s.synth.kernel = {1.0, 0.3, 0.0};
  s.synth.seed = 3;
  s.synth.n_y_obs = 6;
  s.synth.n_u_obs = 12;
  s.fixed_kernel = KernelParams{1.0, 0.3, 1e-8};
  s.basis.rtol = 1e-6;
  s.bench.levels = 2;
  return s;
}

TEST(PowerLaw, TwoPointsExact) {
  const std::vector<std::pair<double, double>> p{{10, 100}, {100, 10000}};
  const PowerLaw law = fit_power_law(p);
  EXPECT_NEAR(law.exponent, 2.0, 1e-14);
  EXPECT_NEAR(law.coefficient, 1.0, 1e-12);
}

TEST(PowerLaw, ConstantTimes) {
  const std::vector<std::pair<double, double>> p{{10, 3}, {100, 3}, {1000, 3}};
  const PowerLaw law = fit_power_law(p);
  EXPECT_NEAR(law.exponent, 0.0, 1e-14);
  EXPECT_NEAR(law.coefficient, 3.0, 1e-12);
}

TEST(PowerLaw, NoisyRegression) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<std::pair<double, double>> p;
  for (double n = 100; n <= 1e5; n *= 2) p.emplace_back(n, 3.0 * std::pow(n, 1.5) * (1.0 + noise(rng)));
  EXPECT_NEAR(fit_power_law(p).exponent, 1.5, 0.05);
}

TEST(PowerLaw, RejectsBadPoints) {
  const std::vector<std::pair<double, double>> one{{10, 1}};
  EXPECT_THROW(fit_power_law(one), InvalidArgument);
  const std::vector<std::pair<double, double>> zero{{10, 1}, {20, 0}};
  EXPECT_THROW(fit_power_law(zero), InvalidArgument);
  const std::vector<std::pair<double, double>> same{{10, 1}, {10, 2}};
  EXPECT_THROW(fit_power_law(same), InvalidArgument);
}

TEST(RunScaling, RowPerLevelAndMethod) {
  const ScalingSetup s = small_setup();
  int callbacks = 0;
  const auto rows = run_scaling(s, [&](const ScalingRow&) { ++callbacks; });
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(callbacks, 6);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].n, k < 3 ? 36 : 144);
    EXPECT_EQ(rows[k].method, s.bench.methods[k % 3]);
    EXPECT_TRUE(rows[k].status.rfind("converged", 0) == 0) << rows[k].status;
    EXPECT_GT(rows[k].time_s, 0.0);
    EXPECT_GE(rows[k].rel_l2, 0.0);
  }
  // Plain and accelerated CKLEMAP share their iterates.
  EXPECT_EQ(rows[1].iterations, rows[2].iterations);
  EXPECT_NEAR(rows[1].rel_l2, rows[2].rel_l2, 1e-8);
}

TEST(RunScaling, ReplicatesUseDifferentWells) {
  ScalingSetup s = small_setup();
  s.bench.levels = 1;
  s.bench.replicates = 2;
  s.bench.methods = {Method::CklemapAccel};
  const auto rows = run_scaling(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].replicate, 0);
  EXPECT_EQ(rows[1].replicate, 1);
  EXPECT_NE(rows[0].rel_l2, rows[1].rel_l2);
}

TEST(RunScaling, ZeroBudgetTimesOutEverywhere) {
  ScalingSetup s = small_setup();
  s.bench.time_budget_s = 0.0;
  const auto rows = run_scaling(s);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) EXPECT_EQ(r.status, "timeout");
}

TEST(RunScaling, RejectsEmptyLadder) {
  ScalingSetup s = small_setup();
  s.bench.levels = 0;
  EXPECT_THROW(run_scaling(s), InvalidArgument);
  s.bench.levels = 1;
  s.bench.methods.clear();
  EXPECT_THROW(run_scaling(s), InvalidArgument);
}

TEST(FitScaling, MediansAndExtrapolation) {
  std::vector<ScalingRow> rows{
      {100, Method::Map, 0, 1.0, 3, 0.1, 0.2, "converged-ftol"},
      {100, Method::Map, 1, 3.0, 3, 0.1, 0.2, "converged-ftol"},
      {100, Method::Map, 2, 2.0, 3, 0.1, 0.2, "converged-ftol"},
      {400, Method::Map, 0, 8.0, 3, 0.1, 0.2, "converged-gtol"},
      {1600, Method::Map, 0, 5.0, 0, NAN, NAN, "timeout"},
      {100, Method::Cklemap, 0, 0.5, 3, 0.1, 0.2, "converged-ftol"},
  };
  const std::vector<Method> methods{Method::Map, Method::Cklemap};
  const auto fits = fit_scaling(rows, methods);
  ASSERT_EQ(fits.size(), 2u);
  ASSERT_EQ(fits[0].medians.size(), 2u);
  EXPECT_EQ(fits[0].medians[0].second, 2.0);
  ASSERT_TRUE(fits[0].law);
  EXPECT_NEAR(fits[0].law->exponent, 1.0, 1e-12);
  ASSERT_EQ(fits[0].extrapolated.size(), 1u);
  EXPECT_NEAR(fits[0].extrapolated[0].second, 32.0, 1e-9);
  EXPECT_FALSE(fits[1].law);

  const auto j = scaling_fit_json(fits);
  EXPECT_NEAR(j["map"]["s"].get<double>(), 1.0, 1e-12);
  EXPECT_TRUE(j["cklemap"]["s"].is_null());
  EXPECT_TRUE(j["map"]["extrapolated"][0]["extrapolated"].get<bool>());
}

TEST(ScalingCsv, RoundTrip) {
  const std::vector<ScalingRow> rows{{64, Method::Map, 0, 0.125, 4, 0.25, 0.5, "converged-ftol"},
                                     {256, Method::CklemapAccel, 1, 2.5, 0, NAN, NAN, "timeout"}};
  std::stringstream ss;
  write_scaling_csv(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "N,method,replicate,time_s,iterations,rel_l2,abs_linf,status");
  const auto back = read_scaling_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].n, 64);
  EXPECT_EQ(back[0].time_s, 0.125);
  EXPECT_EQ(back[1].method, Method::CklemapAccel);
  EXPECT_EQ(back[1].status, "timeout");
  EXPECT_TRUE(std::isnan(back[1].rel_l2));

  std::stringstream bad("N,method\n");
  EXPECT_THROW(read_scaling_csv(bad), ConfigError);
}

}  // namespace
}  // namespace cklemap
