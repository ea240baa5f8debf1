#include "boclab/cli/manifest.hpp"

#include "boclab/error.hpp"
#include "boclab/rng.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace boclab::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw InvariantError("sha256: digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(io::read_file(path)); }

std::filesystem::path output_root(const std::filesystem::path& explicit_root) {
  if (!explicit_root.empty()) return explicit_root;
  if (const char* env = std::getenv("BOCLAB_OUT_ROOT"); env && *env) return env;
  return "runs";
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return out.str();
}

}  // namespace

RunContext::RunContext(std::string subcommand, Json config, const std::filesystem::path& root, int threads)
    : subcommand_(std::move(subcommand)), config_(std::move(config)), threads_(std::max(threads, 1)) {
  seed_ = get_seed(config_);
  const std::string base = utc_timestamp() + "-" + config_hash(config_);
  std::filesystem::create_directories(root);
  dir_ = root / base;
  for (int k = 1; std::filesystem::exists(dir_); ++k) dir_ = root / (base + "-" + std::to_string(k));
  std::filesystem::create_directories(dir_);
  Json snapshot = config_;
  snapshot["subcommand"] = subcommand_;
  write_json("config.json", snapshot);
}

std::uint64_t RunContext::note_seed(const std::string& name, std::uint64_t value) {
  seeds_[name] = value;
  return value;
}

std::filesystem::path RunContext::write_text(const std::string& name, const std::string& contents) {
  const auto path = dir_ / name;
  std::filesystem::create_directories(path.parent_path());
  io::write_file_atomic(path, contents);
  files_.emplace_back(name, sha256_hex(contents));
  return path;
}

std::filesystem::path RunContext::write_table(const std::string& name, const io::Table& table) {
  const auto path = dir_ / name;
  io::write_table(path, table);
  adopt(name);
  return path;
}

std::filesystem::path RunContext::write_json(const std::string& name, const Json& value) {
  return write_text(name, value.dump(2) + "\n");
}

std::filesystem::path RunContext::write_matrix(const std::string& name, const Matrix& m) {
  const auto path = dir_ / name;
  io::write_matrix(path, m);
  adopt(name);
  return path;
}

void RunContext::adopt(const std::string& name) { files_.emplace_back(name, sha256_file(dir_ / name)); }

void RunContext::finish() {
  Json files = Json::array();
  for (const auto& [name, sum] : files_) files.push_back({{"path", name}, {"sha256", sum}});
  Json manifest{
      {"subcommand", subcommand_},
      {"config_hash", config_hash(config_)},
      {"versions",
       {{"boclab", kVersion},
        {"normal_variates", std::string(kNormalMethod)},
        {"gchi2", "imhof characteristic-function inversion, monte-carlo fallback"}}},
      {"seed_chain", {{"master", seed_}, {"derived", seeds_}}},
      {"threads", threads_},
      {"files", files},
  };
  io::write_file_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
}

VerifyReport verify_manifest(const std::filesystem::path& dir) {
  VerifyReport report;
  Json manifest;
  try {
    manifest = Json::parse(io::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("verify: unreadable manifest in " + dir.string() + ": " + e.what());
  }
  for (const auto& entry : manifest.at("files")) {
    const std::string name = entry.at("path").get<std::string>();
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      report.ok = false;
      report.problems.push_back("missing: " + name);
    } else if (sha256_file(path) != entry.at("sha256").get<std::string>()) {
      report.ok = false;
      report.problems.push_back("checksum mismatch: " + name);
    }
  }
  return report;
}

}  // namespace boclab::cli
