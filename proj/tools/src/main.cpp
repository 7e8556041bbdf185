#include <CLI11.hpp>

#include "cklemap_cli/commands.hpp"

namespace {

void add_common(CLI::App* sub, cklemap::cli::CommonOptions& o) {
  sub->add_option("--config", o.config, "JSON run configuration")->required();
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--seed", o.seed, "Override synth.seed");
}

void add_data(CLI::App* sub, cklemap::cli::CommonOptions& o) {
  sub->add_option("--data", o.data, "Dataset directory (default: --out)");
}

void add_basis_size(CLI::App* sub, cklemap::cli::InvertOptions& o) {
  sub->add_option("--ny", o.ny, "Number of expansion terms");
  sub->add_option("--rtol", o.rtol, "Truncation tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cklemap::cli;
  CLI::App app{"Transmissivity estimation from head and transmissivity measurements"};
  app.require_subcommand(1);

  CommonOptions common;
  InvertOptions invert_opts;
  BenchCliOptions bench_opts;

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  add_common(generate, common);

  auto* fit = app.add_subcommand("fit-gp", "Fit Matern 5/2 hyperparameters to the y observations");
  add_common(fit, common);
  add_data(fit, common);

  auto* basis = app.add_subcommand("build-basis", "Build the conditional expansion basis");
  add_common(basis, common);
  add_data(basis, common);
  add_basis_size(basis, invert_opts);

  auto* invert = app.add_subcommand("invert", "Estimate the log-transmissivity field");
  add_common(invert, common);
  add_data(invert, common);
  add_basis_size(invert, invert_opts);
  invert->add_option("--method", invert_opts.method, "map | cklemap | cklemap-accel");
  invert->add_option("--gamma", invert_opts.gamma, "Gradient penalty weight");

  auto* bench = app.add_subcommand("bench", "Scaling study over refined meshes");
  add_common(bench, common);
  bench->add_option("--time-budget-s", bench_opts.time_budget_s, "Per-inversion time budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  return run_guarded([&] {
    if (*generate) return cmd_generate(common);
    if (*fit) return cmd_fit_gp(common);
    if (*basis) return cmd_build_basis(common, invert_opts);
    if (*invert) return cmd_invert(common, invert_opts);
    return cmd_bench(common, bench_opts);
  });
}
