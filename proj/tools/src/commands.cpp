#include "cklemap_cli/commands.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include "cklemap/cklemap.hpp"
#include "cklemap_cli/manifest.hpp"

namespace cklemap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig load_run_config(const CommonOptions& common) {
  if (common.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(common.config);
  if (common.seed) cfg.synth.seed = *common.seed;
  return cfg;
}

fs::path output_dir(const CommonOptions& common) {
  if (common.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(common.out);
  return common.out;
}

fs::path data_dir(const CommonOptions& common) { return common.data.empty() ? common.out : common.data; }

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("missing input file " + path.string());
}

struct LoadedData {
  Mesh mesh;
  ObservationSet obs_y, obs_u;
  std::optional<Field> y_ref;
  json inputs;  // file -> sha256
};

LoadedData load_dataset(const fs::path& dir, bool need_u) {
  const auto mesh_path = dir / "mesh.json";
  require_file(mesh_path);
  LoadedData d{build_mesh(mesh_spec_from_json(parse_json_file(mesh_path))), {}, {}, {}, json::object()};
  d.inputs["mesh.json"] = sha256_file(mesh_path);
  const auto obs_y = dir / "obs_y.txt";
  require_file(obs_y);
  d.obs_y = load_observations(obs_y);
  d.inputs["obs_y.txt"] = sha256_file(obs_y);
  if (need_u) {
    const auto obs_u = dir / "obs_u.txt";
    require_file(obs_u);
    d.obs_u = load_observations(obs_u);
    d.inputs["obs_u.txt"] = sha256_file(obs_u);
  }
  const Index n = d.mesh.num_cells();
  try {
    d.obs_y.check_bounds(n);
    d.obs_u.check_bounds(n);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("dataset does not match mesh.json: ") + e.what());
  }
  const auto ref = dir / "y_ref.txt";
  if (fs::exists(ref)) {
    d.y_ref = load_field(ref);
    if (d.y_ref->size() != n) throw ConfigError("y_ref.txt does not match mesh.json");
    d.inputs["y_ref.txt"] = sha256_file(ref);
  }
  return d;
}

json kernel_json(const KernelParams& k) { return {{"sigma", k.sigma}, {"length", k.length}, {"nugget", k.nugget}}; }

json fit_gp_json(const RunConfig& cfg, const LoadedData& d) {
  if (cfg.gp.fixed) {
    json j = kernel_json(*cfg.gp.fixed);
    j["status"] = "fixed";
    return j;
  }
  if (d.obs_y.size() < 2) throw ConfigError("fitting GP hyperparameters needs at least two y observations");
  const auto pts = gather_points(d.mesh, d.obs_y.indices());
  const FitResult fit = fit_hyperparameters(pts, d.obs_y.values(), cfg.gp.fit);
  json j = kernel_json(fit.params);
  j["nlml"] = fit.nlml;
  j["status"] = fit.status == FitStatus::Ok ? "ok" : "degenerate";
  j["bounds"] = {{"sigma", {fit.sigma_min, fit.sigma_max}}, {"length", {fit.length_min, fit.length_max}}};
  return j;
}

KernelParams kernel_from_json(const json& j) {
  try {
    return {j.at("sigma").get<double>(), j.at("length").get<double>(), j.at("nugget").get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("gp.json: ") + e.what());
  }
}

// Hyperparameters: config override, then <data>/gp.json, then a fresh fit.
KernelParams resolve_kernel(const RunConfig& cfg, const fs::path& dir, LoadedData& d) {
  if (cfg.gp.fixed) return *cfg.gp.fixed;
  const auto gp_path = dir / "gp.json";
  if (fs::exists(gp_path)) {
    d.inputs["gp.json"] = sha256_file(gp_path);
    return kernel_from_json(parse_json_file(gp_path));
  }
  return kernel_from_json(fit_gp_json(cfg, d));
}

BasisOptions basis_options(const RunConfig& cfg, const InvertOptions& o) {
  BasisOptions b = cfg.basis;
  if (o.rtol) {
    if (!(*o.rtol >= 0.0 && *o.rtol < 1.0)) throw ConfigError("--rtol must lie in [0, 1)");
    b.rtol = *o.rtol;
    b.n_terms.reset();
  }
  if (o.ny) {
    if (*o.ny < 1) throw ConfigError("--ny must be >= 1");
    b.n_terms = *o.ny;
  }
  return b;
}

json basis_json(const CkleBasis& basis, const BasisOptions& opts) {
  json j;
  j["N"] = basis.num_cells();
  j["N_y"] = basis.num_terms();
  j["rtol_requested"] = opts.rtol;
  j["max_terms"] = opts.max_terms;
  if (opts.n_terms) j["n_terms"] = *opts.n_terms;
  j["rtol_achieved"] = basis.rtol_achieved;
  j["lambdas_kept"] = std::vector<double>(basis.lambdas_kept.data(), basis.lambdas_kept.data() + basis.lambdas_kept.size());
  return j;
}

CkleBasis make_basis(const KernelParams& kernel, const LoadedData& d, const BasisOptions& opts) {
  if (d.obs_y.empty()) throw ConfigError("building the basis needs at least one y observation");
  return build_basis(condition(kernel, d.obs_y, d.mesh), opts.truncation());
}

void print(const std::string& line) { std::cout << line << '\n'; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

json canonical_report(json report) {
  report.erase("wall_time_s");
  report.erase("solver_time_s");
  return report;
}

int cmd_generate(const CommonOptions& common) {
  const RunConfig cfg = load_run_config(common);
  const fs::path out = output_dir(common);
  const Mesh mesh = build_mesh(cfg.mesh);
  const Dataset d = generate_dataset(mesh, cfg.synth);

  write_text(out / "mesh.json", mesh_spec_to_json(cfg.mesh).dump(2) + "\n");
  save_field(out / "y_ref.txt", d.reference.y);
  save_field(out / "u_ref.txt", d.reference.u);
  save_observations(out / "obs_y.txt", d.obs_y);
  save_observations(out / "obs_u.txt", d.obs_u);

  json outputs = json::object();
  for (const char* f : {"mesh.json", "y_ref.txt", "u_ref.txt", "obs_y.txt", "obs_u.txt"}) outputs[f] = sha256_file(out / f);
  update_manifest(out, "generate",
                  {{"config", config_to_json(cfg)}, {"seed", cfg.synth.seed}, {"outputs", outputs}});
  print("generated " + std::to_string(mesh.num_cells()) + " cells, " + std::to_string(d.obs_y.size()) +
        " y observations, " + std::to_string(d.obs_u.size()) + " u observations in " + out.string());
  return kOk;
}

int cmd_fit_gp(const CommonOptions& common) {
  const RunConfig cfg = load_run_config(common);
  const fs::path out = output_dir(common);
  const LoadedData d = load_dataset(data_dir(common), false);
  const json gp = fit_gp_json(cfg, d);
  write_text(out / "gp.json", gp.dump(2) + "\n");
  update_manifest(out, "fit-gp",
                  {{"config", config_to_json(cfg)},
                   {"seed", cfg.synth.seed},
                   {"inputs", d.inputs},
                   {"outputs", {{"gp.json", sha256_file(out / "gp.json")}}}});
  print("sigma " + fmt(gp["sigma"].get<double>()) + ", length " + fmt(gp["length"].get<double>()) + " (" +
        gp["status"].get<std::string>() + ")");
  return kOk;
}

int cmd_build_basis(const CommonOptions& common, const InvertOptions& overrides) {
  const RunConfig cfg = load_run_config(common);
  const fs::path out = output_dir(common);
  const fs::path dir = data_dir(common);
  LoadedData d = load_dataset(dir, false);
  const KernelParams kernel = resolve_kernel(cfg, dir, d);
  const BasisOptions opts = basis_options(cfg, overrides);
  const CkleBasis basis = make_basis(kernel, d, opts);
  save_basis(out / "basis.txt", basis);
  write_text(out / "basis.json", basis_json(basis, opts).dump(2) + "\n");
  update_manifest(out, "build-basis",
                  {{"config", config_to_json(cfg)},
                   {"seed", cfg.synth.seed},
                   {"inputs", d.inputs},
                   {"outputs",
                    {{"basis.txt", sha256_file(out / "basis.txt")}, {"basis.json", sha256_file(out / "basis.json")}}}});
  print("N_y = " + std::to_string(basis.num_terms()) + ", rtol_achieved = " + fmt(basis.rtol_achieved));
  return kOk;
}

int cmd_invert(const CommonOptions& common, const InvertOptions& opts) {
  RunConfig cfg = load_run_config(common);
  if (opts.method) {
    try {
      cfg.inverse.method = parse_method(*opts.method);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--method: ") + e.what());
    }
  }
  if (opts.gamma) cfg.inverse.gamma = *opts.gamma;
  try {
    cfg.inverse.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const fs::path out = output_dir(common);
  const fs::path dir = data_dir(common);
  LoadedData d = load_dataset(dir, true);

  // Reuse a stored basis unless its size is overridden on the command line.
  std::optional<CkleBasis> basis;
  BasisOptions bopts = basis_options(cfg, opts);
  const bool stored = fs::exists(dir / "basis.txt") && fs::exists(dir / "basis.json") && !opts.ny && !opts.rtol;
  if (stored) {
    basis = load_basis(dir / "basis.txt");
    const json meta = parse_json_file(dir / "basis.json");
    basis->rtol_achieved = meta.value("rtol_achieved", basis->rtol_achieved);
    if (basis->num_cells() != d.mesh.num_cells()) throw ConfigError("basis.txt does not match mesh.json");
    d.inputs["basis.txt"] = sha256_file(dir / "basis.txt");
    d.inputs["basis.json"] = sha256_file(dir / "basis.json");
  } else {
    basis = make_basis(resolve_kernel(cfg, dir, d), d, bopts);
  }

  const Field* ref = d.y_ref ? &*d.y_ref : nullptr;
  const InversionReport rep = invert(cfg.inverse, d.mesh, d.obs_u, d.obs_y, &*basis, &basis->mean, ref);

  save_field(out / "y_hat.txt", rep.y_hat);
  save_field(out / "u_hat.txt", rep.u_hat);
  json report;
  report["method"] = std::string(to_string(rep.method));
  report["gamma"] = rep.gamma;
  report["N"] = d.mesh.num_cells();
  report["N_y"] = rep.method == Method::Map ? d.mesh.num_cells() : basis->num_terms();
  report["rtol_achieved"] = rep.method == Method::Map ? 0.0 : rep.rtol_achieved;
  report["iterations"] = rep.lsq.iterations;
  report["evaluations"] = rep.lsq.evaluations;
  report["status"] = std::string(to_string(rep.lsq.status));
  report["final_cost"] = rep.lsq.cost;
  report["wall_time_s"] = rep.wall_time_s;
  if (rep.errors) {
    report["rel_l2"] = rep.errors->rel_l2;
    report["abs_linf"] = rep.errors->abs_linf;
  }
  write_text(out / "report.json", report.dump(2) + "\n");

  update_manifest(out, "invert",
                  {{"config", config_to_json(cfg)},
                   {"seed", cfg.synth.seed},
                   {"inputs", d.inputs},
                   {"outputs",
                    {{"y_hat.txt", sha256_file(out / "y_hat.txt")},
                     {"u_hat.txt", sha256_file(out / "u_hat.txt")},
                     {"report.json", sha256_hex(canonical_report(report).dump())}}}});

  std::string line = std::string(to_string(rep.method)) + ": " + report["status"].get<std::string>() + " after " +
                     std::to_string(rep.lsq.iterations) + " iterations";
  if (rep.errors) line += ", rel_l2 " + fmt(rep.errors->rel_l2) + ", abs_linf " + fmt(rep.errors->abs_linf);
  print(line);
  return converged(rep.lsq.status) ? kOk : kNotConverged;
}

int cmd_bench(const CommonOptions& common, const BenchCliOptions& opts) {
  const RunConfig cfg = load_run_config(common);
  const fs::path out = output_dir(common);
  ScalingSetup setup;
  setup.base = cfg.mesh;
  setup.synth = cfg.synth;
  setup.gp = cfg.gp.fit;
  setup.fixed_kernel = cfg.gp.fixed;
  setup.basis = cfg.basis;
  setup.inverse = cfg.inverse;
  setup.bench = cfg.bench;
  if (opts.time_budget_s) setup.bench.time_budget_s = *opts.time_budget_s;

  const auto rows = run_scaling(setup, [](const ScalingRow& r) {
    std::cerr << "N=" << r.n << ' ' << to_string(r.method) << " replicate " << r.replicate << ": " << r.status
              << ", " << fmt(r.time_s) << " s\n";
  });
  const auto fits = fit_scaling(rows, setup.bench.methods);

  std::ostringstream csv;
  write_scaling_csv(csv, rows);
  write_text(out / "scaling.csv", csv.str());
  write_text(out / "scaling_fit.json", scaling_fit_json(fits).dump(2) + "\n");
  update_manifest(out, "bench",
                  {{"config", config_to_json(cfg)},
                   {"seed", cfg.synth.seed},
                   {"time_budget_s", setup.bench.time_budget_s},
                   {"outputs",
                    {{"scaling.csv", sha256_file(out / "scaling.csv")},
                     {"scaling_fit.json", sha256_file(out / "scaling_fit.json")}}}});
  for (const auto& f : fits) {
    print(std::string(to_string(f.method)) + ": " +
          (f.law ? "t = " + fmt(f.law->coefficient) + " N^" + fmt(f.law->exponent) : "no fit (fewer than 2 levels)"));
  }
  return kOk;
}

}  // namespace cklemap::cli
