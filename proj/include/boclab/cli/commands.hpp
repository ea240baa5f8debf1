#pragma once

#include "boclab/cli/manifest.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace boclab::cli {

struct RunSettings {
  std::vector<std::string> overrides;  // "key.path=value"
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_root;  // empty: $BOCLAB_OUT_ROOT or ./runs
  int threads = 1;
};

std::vector<std::string> subcommand_names();
bool is_subcommand(const std::string& name);
std::string subcommand_help(const std::string& name);

// Resolves the config, runs the subcommand into a fresh run directory and
// writes its manifest. Returns the run directory.
std::filesystem::path run_subcommand(const std::string& name, const Json& file_config, const RunSettings& settings);

// Re-runs the config snapshot stored in an earlier run directory.
std::filesystem::path rerun(const std::filesystem::path& run_dir, const RunSettings& settings);

}  // namespace boclab::cli
