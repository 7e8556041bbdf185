#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cklemap/ckle.hpp"
#include "cklemap/gpr.hpp"
#include "cklemap/inverse.hpp"
#include "cklemap/synth.hpp"

namespace cklemap {

struct BenchOptions {
  int levels = 3;      // base mesh, then levels - 1 refinements
  int replicates = 1;  // observation draws per level
  std::vector<Method> methods{Method::Map, Method::Cklemap, Method::CklemapAccel};
  double time_budget_s = -1.0;  // per inversion; < 0 unlimited
};

struct ScalingSetup {
  MeshSpec base;
  SynthSpec synth;
  FitOptions gp;
  std::optional<KernelParams> fixed_kernel;  // skips hyperparameter fitting
  BasisOptions basis;
  InverseConfig inverse;
  BenchOptions bench;
};

struct ScalingRow {
  Index n = 0;
  Method method = Method::Map;
  int replicate = 0;
  double time_s = 0.0;
  int iterations = 0;
  double rel_l2 = 0.0;
  double abs_linf = 0.0;
  std::string status;
};

/// The reference field is drawn once on the base mesh and carried up the
/// ladder with refine_mesh. Replicate r samples wells with seed + r; every
/// method of a replicate sees the same wells. A method that times out is
/// not run at finer levels of that replicate (its rows are marked timeout).
/// Failures are recorded as rows with status "error".
std::vector<ScalingRow> run_scaling(const ScalingSetup& setup,
                                    const std::function<void(const ScalingRow&)>& on_row = {});

struct PowerLaw {
  double coefficient = 0.0;  // a in t = a N^s
  double exponent = 0.0;     // s
};

/// Least squares on (log N, log t). Throws InvalidArgument for fewer than two
/// points or nonpositive values.
PowerLaw fit_power_law(std::span<const std::pair<double, double>> points);

struct MethodFit {
  Method method = Method::Map;
  std::vector<std::pair<double, double>> medians;  // (N, median time) of completed rows
  std::optional<PowerLaw> law;
  std::vector<std::pair<double, double>> extrapolated;  // (N, predicted time) at timed-out levels
};

std::vector<MethodFit> fit_scaling(std::span<const ScalingRow> rows, std::span<const Method> methods);

void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows);
std::vector<ScalingRow> read_scaling_csv(std::istream& in);
nlohmann::json scaling_fit_json(std::span<const MethodFit> fits);

}  // namespace cklemap
