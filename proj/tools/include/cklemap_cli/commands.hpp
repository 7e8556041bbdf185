#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace cklemap::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

struct CommonOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::filesystem::path data;  // dataset directory; defaults to `out`
};

struct InvertOptions {
  std::optional<std::string> method;
  std::optional<double> gamma;
  std::optional<long long> ny;
  std::optional<double> rtol;
};

struct BenchCliOptions {
  std::optional<double> time_budget_s;
};

// Each command throws cklemap::Error subclasses on bad input; run_guarded
// maps them to exit codes and prints the message.
int cmd_generate(const CommonOptions& common);
int cmd_fit_gp(const CommonOptions& common);
int cmd_build_basis(const CommonOptions& common, const InvertOptions& basis_overrides);
int cmd_invert(const CommonOptions& common, const InvertOptions& opts);
int cmd_bench(const CommonOptions& common, const BenchCliOptions& opts);

template <class Fn>
int run_guarded(Fn&& fn);

/// report.json without the keys that vary from run to run (wall times).
nlohmann::json canonical_report(nlohmann::json report);

}  // namespace cklemap::cli

#include "cklemap_cli/detail/run_guarded.hpp"
