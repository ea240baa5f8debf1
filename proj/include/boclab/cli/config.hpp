#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace boclab::cli {

using Json = nlohmann::json;

// Built-in defaults for a subcommand; every accepted key appears here.
Json default_config(const std::string& subcommand);

// defaults <- file (merge patch) <- "key.path=value" overrides <- seed.
// Unknown top-level keys are rejected so typos do not pass silently.
Json resolve_config(const std::string& subcommand, const Json& file_config,
                    const std::vector<std::string>& overrides, const std::uint64_t* seed);

Json load_config_file(const std::filesystem::path& path);

// Applies one "a.b.c=value" override; value is parsed as JSON, falling back
// to a plain string.
void apply_override(Json& config, const std::string& assignment);

// First 12 hex digits of SHA-256 over the canonical dump of the config.
std::string config_hash(const Json& config);

// Typed access with a path in the error message.
double get_double(const Json& config, const std::string& key);
int get_int(const Json& config, const std::string& key);
std::uint64_t get_seed(const Json& config, const std::string& key = "seed");
bool get_bool(const Json& config, const std::string& key);
std::string get_string(const Json& config, const std::string& key);
std::vector<double> get_doubles(const Json& config, const std::string& key);

}  // namespace boclab::cli
