#pragma once

#include "boclab/cli/config.hpp"
#include "boclab/matrix_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace boclab::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr const char* kVersion = "0.1.0";

// Output root: `explicit_root` if non-empty, else $BOCLAB_OUT_ROOT, else "runs".
std::filesystem::path output_root(const std::filesystem::path& explicit_root);

// One run directory runs/<timestamp>-<confighash>/ holding config.json, the
// artifacts and, once finish() is called, manifest.json. Artifacts are
// written atomically and their checksums recorded.
class RunContext {
 public:
  RunContext(std::string subcommand, Json config, const std::filesystem::path& root, int threads);

  const std::string& subcommand() const { return subcommand_; }
  const Json& config() const { return config_; }
  const std::filesystem::path& dir() const { return dir_; }
  int threads() const { return threads_; }
  std::uint64_t seed() const { return seed_; }

  // Records a named derived seed in the manifest's seed chain.
  std::uint64_t note_seed(const std::string& name, std::uint64_t value);

  std::filesystem::path write_text(const std::string& name, const std::string& contents);
  std::filesystem::path write_table(const std::string& name, const io::Table& table);
  std::filesystem::path write_json(const std::string& name, const Json& value);
  std::filesystem::path write_matrix(const std::string& name, const Matrix& m);
  // Registers a file already written into dir() by library code.
  void adopt(const std::string& name);

  // Writes manifest.json. Must be the last call.
  void finish();

 private:
  std::string subcommand_;
  Json config_;
  std::filesystem::path dir_;
  int threads_ = 1;
  std::uint64_t seed_ = 0;
  Json seeds_ = Json::object();
  std::vector<std::pair<std::string, std::string>> files_;
};

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> problems;
};

// Recomputes every checksum listed in dir/manifest.json.
VerifyReport verify_manifest(const std::filesystem::path& dir);

}  // namespace boclab::cli
