#include "cklemap/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cklemap/error.hpp"

namespace cklemap {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

void write_field(std::ostream& out, const Field& field) {
  out << field.size() << '\n';
  for (Index i = 0; i < field.size(); ++i) out << format_double(field[i]) << '\n';
}

Field read_field(std::istream& in) {
  long long n = -1;
  if (!(in >> n) || n < 0) throw ConfigError("field file: missing or invalid length header");
  Field f(n);
  for (Index i = 0; i < n; ++i) {
    if (!(in >> f[i])) {
      std::ostringstream msg;
      msg << "field file: expected " << n << " values, found " << i;
      throw ConfigError(msg.str());
    }
  }
  std::string extra;
  if (in >> extra) throw ConfigError("field file: trailing data after " + std::to_string(n) + " values");
  return f;
}

void write_observations(std::ostream& out, const ObservationSet& obs) {
  for (Index k = 0; k < obs.size(); ++k) out << obs.indices()[k] << ' ' << format_double(obs.values()[k]) << '\n';
}

ObservationSet read_observations(std::istream& in) {
  std::vector<Index> idx;
  std::vector<double> vals;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long i = 0;
    double v = 0.0;
    std::string extra;
    if (!(ls >> i >> v) || (ls >> extra)) {
      throw ConfigError("observation file line " + std::to_string(line_no) + ": expected `index value`");
    }
    idx.push_back(i);
    vals.push_back(v);
  }
  try {
    return ObservationSet(std::move(idx), Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size())));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("observation file: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

namespace {

template <class Fn>
auto parse_file(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(read_text(path));
  try {
    return fn(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

template <class Fn>
void emit_file(const std::filesystem::path& path, Fn&& fn) {
  std::ostringstream out;
  fn(out);
  write_text(path, out.str());
}

}  // namespace

void save_field(const std::filesystem::path& p, const Field& f) { emit_file(p, [&](auto& o) { write_field(o, f); }); }
Field load_field(const std::filesystem::path& p) { return parse_file(p, [](auto& i) { return read_field(i); }); }
void save_observations(const std::filesystem::path& p, const ObservationSet& o) {
  emit_file(p, [&](auto& out) { write_observations(out, o); });
}
ObservationSet load_observations(const std::filesystem::path& p) {
  return parse_file(p, [](auto& i) { return read_observations(i); });
}
void save_basis(const std::filesystem::path& p, const CkleBasis& b) { emit_file(p, [&](auto& o) { write_basis(o, b); }); }
CkleBasis load_basis(const std::filesystem::path& p) { return parse_file(p, [](auto& i) { return read_basis(i); }); }

namespace {

// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return require<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(key, "is required");
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(key, "must be a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(key, "must be an integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(key, "must be a string");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(key, "must be a boolean");
      }
      return v.get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(key, "is required");
    return j_.at(key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), name(key));
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config: '" + (key.empty() ? path_ : name(key)) + "' " + what);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("config: unknown key '" + name(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class Fn>
void optional_section(Section& parent, const std::string& key, Fn&& fn) {
  if (!parent.has(key)) return;
  Section s = parent.child(key);
  fn(s);
  s.finish();
}

KernelParams parse_kernel(Section& s, KernelParams k) {
  k.sigma = s.get("sigma", k.sigma);
  k.length = s.get("length", k.length);
  k.nugget = s.get("nugget", k.nugget);
  try {
    if (k.sigma != 0.0) k.validate();
  } catch (const InvalidArgument& e) {
    s.fail("", e.what());
  }
  return k;
}

}  // namespace

json mesh_spec_to_json(const MeshSpec& spec) {
  json j;
  j["nx"] = spec.nx;
  j["ny"] = spec.ny;
  j["dx"] = spec.dx;
  j["dy"] = spec.dy;
  if (!spec.active_mask.empty()) {
    json rows = json::array();
    for (int r = 0; r < spec.ny; ++r) {
      std::string row;
      for (int i = 0; i < spec.nx; ++i) row += spec.is_active(i, r) ? '1' : '0';
      rows.push_back(row);
    }
    j["mask"] = rows;
  }
  json b = json::array();
  for (const auto& rule : spec.boundaries) {
    json r;
    r["side"] = std::string(to_string(rule.side));
    r["kind"] = std::string(to_string(rule.bc.kind));
    r["value"] = rule.bc.value;
    if (rule.range) r["range"] = {rule.range->first, rule.range->second};
    b.push_back(r);
  }
  j["boundaries"] = b;
  return j;
}

namespace {

std::vector<std::uint8_t> read_raster(const std::filesystem::path& path, int nx, int ny) {
  std::istringstream in(read_text(path));
  std::vector<std::uint8_t> mask;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int count = 0;
    for (std::string tok; ls >> tok; ++count) {
      if (tok != "0" && tok != "1") {
        throw ConfigError(path.string() + " line " + std::to_string(row + 1) + ": tokens must be 0 or 1");
      }
      mask.push_back(tok == "1");
    }
    if (count != nx) {
      throw ConfigError(path.string() + " line " + std::to_string(row + 1) + ": expected " + std::to_string(nx) +
                        " tokens, found " + std::to_string(count));
    }
    ++row;
  }
  if (row != ny) throw ConfigError(path.string() + ": expected " + std::to_string(ny) + " rows, found " + std::to_string(row));
  return mask;
}

MeshSpec parse_mesh(Section& s, const std::filesystem::path& base_dir) {
  MeshSpec spec;
  spec.nx = s.require<int>("nx");
  spec.ny = s.require<int>("ny");
  if (spec.nx < 1) s.fail("nx", "must be >= 1");
  if (spec.ny < 1) s.fail("ny", "must be >= 1");
  spec.dx = s.get("dx", 1.0 / spec.nx);
  spec.dy = s.get("dy", 1.0 / spec.ny);
  if (!(spec.dx > 0.0)) s.fail("dx", "must be positive");
  if (!(spec.dy > 0.0)) s.fail("dy", "must be positive");
  if (s.has("mask")) {
    const json& rows = s.raw("mask");
    if (!rows.is_array() || static_cast<int>(rows.size()) != spec.ny) {
      s.fail("mask", "must be an array of ny strings");
    }
    spec.active_mask.assign(static_cast<std::size_t>(spec.nx) * spec.ny, 0);
    for (int r = 0; r < spec.ny; ++r) {
      if (!rows[r].is_string()) s.fail("mask", "rows must be strings");
      const std::string row = rows[r].get<std::string>();
      if (static_cast<int>(row.size()) != spec.nx) s.fail("mask", "row " + std::to_string(r) + " must have nx characters");
      for (int i = 0; i < spec.nx; ++i) {
        if (row[i] != '0' && row[i] != '1') s.fail("mask", "rows may contain only '0' and '1'");
        spec.active_mask[static_cast<std::size_t>(r) * spec.nx + i] = row[i] == '1';
      }
    }
  }
  if (s.has("active_mask")) {
    if (s.has("mask")) s.fail("active_mask", "cannot be combined with 'mask'");
    const auto rel = s.require<std::string>("active_mask");
    const std::filesystem::path path = base_dir / rel;  // an absolute rel wins
    spec.active_mask = read_raster(path, spec.nx, spec.ny);
  }
  const json& b = s.raw("boundaries");
  if (!b.is_array()) s.fail("boundaries", "must be an array");
  for (std::size_t k = 0; k < b.size(); ++k) {
    Section r(b[k], s.name("boundaries") + "[" + std::to_string(k) + "]");
    BoundaryRule rule;
    try {
      rule.side = parse_side(r.require<std::string>("side"));
      rule.bc.kind = parse_bc_kind(r.require<std::string>("kind"));
    } catch (const InvalidArgument& e) {
      r.fail("", e.what());
    }
    rule.bc.value = r.require<double>("value");
    if (r.has("range")) {
      const json& range = r.raw("range");
      if (!range.is_array() || range.size() != 2 || !range[0].is_number_integer() || !range[1].is_number_integer()) {
        r.fail("range", "must be [first, last] lattice indices");
      }
      rule.range = std::pair{range[0].get<int>(), range[1].get<int>()};
    }
    r.finish();
    spec.boundaries.push_back(rule);
  }
  return spec;
}

}  // namespace

MeshSpec mesh_spec_from_json(const json& j, const std::string& where) {
  Section s(j, where);
  MeshSpec spec = parse_mesh(s, {});
  s.finish();
  return spec;
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  Section root(j, "");
  RunConfig c;
  if (!root.has("mesh")) root.fail("mesh", "is required");
  {
    Section s = root.child("mesh");
    c.mesh = parse_mesh(s, base_dir);
    s.finish();
  }
  optional_section(root, "synth", [&](Section& s) {
    c.synth.kernel = parse_kernel(s, c.synth.kernel);
    c.synth.seed = s.get<std::uint64_t>("seed", c.synth.seed);
    c.synth.n_y_obs = s.get<Index>("n_y_obs", c.synth.n_y_obs);
    c.synth.n_u_obs = s.get<Index>("n_u_obs", c.synth.n_u_obs);
    if (c.synth.n_y_obs < 0) s.fail("n_y_obs", "must be >= 0");
    if (c.synth.n_u_obs < 0) s.fail("n_u_obs", "must be >= 0");
    try {
      c.synth.well_policy = parse_well_policy(s.get<std::string>("well_policy", "random-subset"));
    } catch (const InvalidArgument& e) {
      s.fail("well_policy", e.what());
    }
    optional_section(s, "trend", [&](Section& t) {
      c.synth.trend.c0 = t.get("c0", 0.0);
      c.synth.trend.cx = t.get("cx", 0.0);
      c.synth.trend.cy = t.get("cy", 0.0);
    });
  });
  optional_section(root, "gp", [&](Section& s) {
    auto& f = c.gp.fit;
    f.nugget_relative = s.get("nugget_relative", f.nugget_relative);
    f.nugget_absolute = s.get("nugget_absolute", f.nugget_absolute);
    f.grid_size = s.get("grid_size", f.grid_size);
    f.max_evaluations = s.get("max_evaluations", f.max_evaluations);
    f.tolerance = s.get("tolerance", f.tolerance);
    if (f.grid_size < 1) s.fail("grid_size", "must be >= 1");
    optional_section(s, "fixed", [&](Section& k) { c.gp.fixed = parse_kernel(k, KernelParams{}); });
  });
  optional_section(root, "basis", [&](Section& s) {
    c.basis.rtol = s.get("rtol", c.basis.rtol);
    c.basis.max_terms = s.get<Index>("max_terms", c.basis.max_terms);
    if (s.has("n_terms")) c.basis.n_terms = s.require<Index>("n_terms");
    if (!(c.basis.rtol >= 0.0 && c.basis.rtol < 1.0)) s.fail("rtol", "must lie in [0, 1)");
    if (c.basis.max_terms < 1) s.fail("max_terms", "must be >= 1");
    if (c.basis.n_terms && *c.basis.n_terms < 1) s.fail("n_terms", "must be >= 1");
  });
  optional_section(root, "inverse", [&](Section& s) {
    auto& inv = c.inverse;
    try {
      inv.method = parse_method(s.get<std::string>("method", std::string(to_string(inv.method))));
    } catch (const InvalidArgument& e) {
      s.fail("method", e.what());
    }
    inv.gamma = s.get("gamma", inv.gamma);
    inv.solver.ftol = s.get("ftol", inv.solver.ftol);
    inv.solver.gtol = s.get("gtol", inv.solver.gtol);
    inv.solver.xtol = s.get("xtol", inv.solver.xtol);
    inv.solver.max_iterations = s.get("max_iterations", inv.solver.max_iterations);
    inv.solver.time_budget_s = s.get("time_budget_s", inv.solver.time_budget_s);
    if (s.get("estimate_fluxes", false)) s.fail("estimate_fluxes", "is reserved; flux estimation is not implemented");
    try {
      inv.validate();
    } catch (const InvalidArgument& e) {
      s.fail("", e.what());
    }
  });
  optional_section(root, "bench", [&](Section& s) {
    auto& b = c.bench;
    b.levels = s.get("levels", b.levels);
    b.replicates = s.get("replicates", b.replicates);
    b.time_budget_s = s.get("time_budget_s", b.time_budget_s);
    if (s.has("methods")) {
      const json& m = s.raw("methods");
      if (!m.is_array() || m.empty()) s.fail("methods", "must be a non-empty array");
      b.methods.clear();
      for (const auto& e : m) {
        if (!e.is_string()) s.fail("methods", "entries must be strings");
        try {
          b.methods.push_back(parse_method(e.get<std::string>()));
        } catch (const InvalidArgument& err) {
          s.fail("methods", err.what());
        }
      }
    }
    if (b.levels < 1) s.fail("levels", "must be >= 1");
    if (b.replicates < 1) s.fail("replicates", "must be >= 1");
  });
  root.finish();
  return c;
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j, base_dir);
}

RunConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config_text(read_text(path), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json j;
  j["mesh"] = mesh_spec_to_json(c.mesh);
  j["synth"] = {{"sigma", c.synth.kernel.sigma},
                {"length", c.synth.kernel.length},
                {"nugget", c.synth.kernel.nugget},
                {"seed", c.synth.seed},
                {"n_y_obs", c.synth.n_y_obs},
                {"n_u_obs", c.synth.n_u_obs},
                {"well_policy", std::string(to_string(c.synth.well_policy))},
                {"trend", {{"c0", c.synth.trend.c0}, {"cx", c.synth.trend.cx}, {"cy", c.synth.trend.cy}}}};
  j["gp"] = {{"nugget_relative", c.gp.fit.nugget_relative},
             {"nugget_absolute", c.gp.fit.nugget_absolute},
             {"grid_size", c.gp.fit.grid_size},
             {"max_evaluations", c.gp.fit.max_evaluations},
             {"tolerance", c.gp.fit.tolerance}};
  if (c.gp.fixed) {
    j["gp"]["fixed"] = {{"sigma", c.gp.fixed->sigma}, {"length", c.gp.fixed->length}, {"nugget", c.gp.fixed->nugget}};
  }
  j["basis"] = {{"rtol", c.basis.rtol}, {"max_terms", c.basis.max_terms}};
  if (c.basis.n_terms) j["basis"]["n_terms"] = *c.basis.n_terms;
  j["inverse"] = {{"method", std::string(to_string(c.inverse.method))},
                  {"gamma", c.inverse.gamma},
                  {"ftol", c.inverse.solver.ftol},
                  {"gtol", c.inverse.solver.gtol},
                  {"xtol", c.inverse.solver.xtol},
                  {"max_iterations", c.inverse.solver.max_iterations},
                  {"time_budget_s", c.inverse.solver.time_budget_s}};
  json methods = json::array();
  for (const Method m : c.bench.methods) methods.push_back(std::string(to_string(m)));
  j["bench"] = {{"levels", c.bench.levels},
                {"replicates", c.bench.replicates},
                {"methods", methods},
                {"time_budget_s", c.bench.time_budget_s}};
  return j;
}

}  // namespace cklemap
