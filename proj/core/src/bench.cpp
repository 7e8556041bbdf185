#include "cklemap/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "cklemap/error.hpp"
#include "cklemap/fvtpfa.hpp"

namespace cklemap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool completed(const ScalingRow& row) { return row.status != "timeout" && row.status != "error"; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<ScalingRow> run_scaling(const ScalingSetup& setup, const std::function<void(const ScalingRow&)>& on_row) {
  const BenchOptions& opts = setup.bench;
  if (opts.levels < 1) throw InvalidArgument("bench: levels must be >= 1");
  if (opts.replicates < 1) throw InvalidArgument("bench: replicates must be >= 1");
  if (opts.methods.empty()) throw InvalidArgument("bench: no methods selected");

  // Mesh ladder and reference fields.
  std::vector<Mesh> meshes;
  std::vector<Reference> refs;
  meshes.push_back(build_mesh(setup.base));
  refs.push_back(generate_reference(meshes.front(), setup.synth));
  for (int l = 1; l < opts.levels; ++l) {
    auto refined = refine_mesh(meshes.back(), refs.back().y);
    Reference ref{std::move(refined.field), Field()};
    ref.u = solve_forward(assemble(refined.mesh, ref.y));
    meshes.push_back(std::move(refined.mesh));
    refs.push_back(std::move(ref));
  }

  InverseConfig config = setup.inverse;
  config.solver.time_budget_s = opts.time_budget_s;

  std::vector<ScalingRow> rows;
  auto emit = [&](ScalingRow row) {
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  };

  for (int r = 0; r < opts.replicates; ++r) {
    const std::uint64_t seed = setup.synth.seed + static_cast<std::uint64_t>(r);
    std::map<Method, bool> timed_out;
    for (int l = 0; l < opts.levels; ++l) {
      const Mesh& mesh = meshes[l];
      const Reference& ref = refs[l];
      const Index n = mesh.num_cells();
      auto fail_all = [&](const std::string& status, double t) {
        for (const Method m : opts.methods) emit({n, m, r, t, 0, kNaN, kNaN, status});
      };

      std::optional<CkleBasis> basis;
      ObservationSet obs_y, obs_u;
      try {
        obs_y = sample_observations(ref.y, setup.synth.n_y_obs, seed, WellPolicy::RandomSubset, Stream::YWells);
        obs_u = sample_observations(ref.u, setup.synth.n_u_obs, seed, setup.synth.well_policy, Stream::UWells);
        KernelParams kernel;
        if (setup.fixed_kernel) {
          kernel = *setup.fixed_kernel;
        } else {
          const auto pts = gather_points(mesh, obs_y.indices());
          kernel = fit_hyperparameters(pts, obs_y.values(), setup.gp).params;
        }
        basis = build_basis(condition(kernel, obs_y, mesh), setup.basis.truncation());
      } catch (const Error&) {
        fail_all("error", kNaN);
        continue;
      }

      for (const Method m : opts.methods) {
        if (timed_out[m]) {
          emit({n, m, r, opts.time_budget_s, 0, kNaN, kNaN, "timeout"});
          continue;
        }
        config.method = m;
        try {
          const auto rep = invert(config, mesh, obs_u, obs_y, &*basis, &basis->mean, &ref.y);
          const std::string status(to_string(rep.lsq.status));
          if (rep.lsq.status == LsqStatus::Timeout) timed_out[m] = true;
          emit({n, m, r, rep.wall_time_s, rep.lsq.iterations, rep.errors->rel_l2, rep.errors->abs_linf, status});
        } catch (const Error&) {
          emit({n, m, r, kNaN, 0, kNaN, kNaN, "error"});
        }
      }
    }
  }
  return rows;
}

PowerLaw fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw InvalidArgument("fit_power_law: at least two points are required");
  double sx = 0, sy = 0;
  for (const auto& [n, t] : points) {
    if (!(n > 0.0) || !(t > 0.0)) throw InvalidArgument("fit_power_law: N and time must be positive");
    sx += std::log(n);
    sy += std::log(t);
  }
  const double k = static_cast<double>(points.size());
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (const auto& [n, t] : points) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(t) - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_power_law: all N are equal");
  const double s = sxy / sxx;
  return {std::exp(my - s * mx), s};
}

std::vector<MethodFit> fit_scaling(std::span<const ScalingRow> rows, std::span<const Method> methods) {
  std::vector<MethodFit> fits;
  for (const Method m : methods) {
    MethodFit fit;
    fit.method = m;
    std::map<Index, std::vector<double>> done;
    std::map<Index, bool> seen;
    for (const auto& row : rows) {
      if (row.method != m) continue;
      seen[row.n] = true;
      if (completed(row) && row.time_s > 0.0) done[row.n].push_back(row.time_s);
    }
    for (const auto& [n, times] : done) fit.medians.emplace_back(static_cast<double>(n), median(times));
    if (fit.medians.size() >= 2) fit.law = fit_power_law(fit.medians);
    if (fit.law) {
      for (const auto& [n, any] : seen) {
        if (done.count(n) == 0) {
          const double dn = static_cast<double>(n);
          fit.extrapolated.emplace_back(dn, fit.law->coefficient * std::pow(dn, fit.law->exponent));
        }
      }
    }
    fits.push_back(std::move(fit));
  }
  return fits;
}

void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows) {
  out << "N,method,replicate,time_s,iterations,rel_l2,abs_linf,status\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%td,%s,%d,%.9g,%d,%.9g,%.9g,%s\n", static_cast<std::ptrdiff_t>(r.n),
                  std::string(to_string(r.method)).c_str(), r.replicate, r.time_s, r.iterations, r.rel_l2,
                  r.abs_linf, r.status.c_str());
    out << buf;
  }
}

std::vector<ScalingRow> read_scaling_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "N,method,replicate,time_s,iterations,rel_l2,abs_linf,status") {
    throw ConfigError("scaling.csv: unexpected header");
  }
  std::vector<ScalingRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw ConfigError("scaling.csv: expected 8 columns in '" + line + "'");
    ScalingRow r;
    r.n = std::stoll(cells[0]);
    r.method = parse_method(cells[1]);
    r.replicate = std::stoi(cells[2]);
    r.time_s = std::strtod(cells[3].c_str(), nullptr);
    r.iterations = std::stoi(cells[4]);
    r.rel_l2 = std::strtod(cells[5].c_str(), nullptr);
    r.abs_linf = std::strtod(cells[6].c_str(), nullptr);
    r.status = cells[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json scaling_fit_json(std::span<const MethodFit> fits) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& f : fits) {
    nlohmann::json entry;
    if (f.law) {
      entry["a"] = f.law->coefficient;
      entry["s"] = f.law->exponent;
    } else {
      entry["a"] = nullptr;
      entry["s"] = nullptr;
    }
    entry["points"] = nlohmann::json::array();
    for (const auto& [n, t] : f.medians) entry["points"].push_back({{"N", n}, {"median_time_s", t}});
    entry["extrapolated"] = nlohmann::json::array();
    for (const auto& [n, t] : f.extrapolated) {
      entry["extrapolated"].push_back({{"N", n}, {"predicted_time_s", t}, {"extrapolated", true}});
    }
    out[std::string(to_string(f.method))] = entry;
  }
  return out;
}

}  // namespace cklemap
