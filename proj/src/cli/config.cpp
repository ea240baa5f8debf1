#include "boclab/cli/config.hpp"

#include "boclab/cli/manifest.hpp"
#include "boclab/error.hpp"
#include "boclab/matrix_io.hpp"

#include <cmath>
#include <sstream>

namespace boclab::cli {
namespace {

Json train_defaults(double lr, int steps, bool bias, const char* optimizer) {
  return {{"learning_rate", lr}, {"steps", steps},         {"init_scale", 1.0},
          {"use_bias", bias},    {"optimizer", optimizer}, {"log_every", 10}};
}

const Json& lookup(const Json& config, const std::string& key) {
  const Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw InputError("config: missing key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) return *node;
    start = dot + 1;
  }
}

template <class T>
T typed(const Json& config, const std::string& key, const char* type) {
  try {
    return lookup(config, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("config: key '" + key + "' must be " + type);
  }
}

}  // namespace

Json default_config(const std::string& subcommand) {
  Json c;
  if (subcommand == "beta-hist") {
    c = {{"d", 100},
         {"alpha_a", 0.5},
         {"delta_alpha", -0.3},
         {"n_per_class", 10000},
         {"bins", 80},
         {"grid_points", 200},
         {"scenarios", {"shared-basis", "rotated", "both"}}};
  } else if (subcommand == "train-quadnet") {
    c = {{"d", 20},
         {"alpha_a", 0.2},
         {"alpha_b", 0.3},
         {"basis", "shared"},
         {"n_per_class", 10000},
         {"n_test_per_class", 50000},
         {"d_h", 0},
         {"bins", 60},
         {"train", train_defaults(1e-2, 1000, true, "adam")}};
  } else if (subcommand == "kkt") {
    c = {{"d", 20},
         {"alpha", 0.2},
         {"n_per_class", 100},
         {"n_test_per_class", 2000},
         {"d_h", 0},
         {"lambda_scale", 0.0},
         {"train", train_defaults(5e-2, 20000, false, "gd")},
         {"fixed_point", {{"damping", 0.5}, {"max_iterations", 200000}, {"update_tol", 1e-8}}}};
  } else if (subcommand == "alpha-grid") {
    c = {{"d", 20},
         {"alpha", 0.2},
         {"delta_alpha", {0.0, 0.05, 0.1, 0.2, 0.4}},
         {"runs", 5},
         {"n_train_per_class", 500},
         {"n_test_per_class", 5000},
         {"d_h", 0},
         {"random_basis", true},
         {"train", train_defaults(1e-2, 500, true, "adam")}};
  } else if (subcommand == "flip-sweep") {
    c = {{"d", 128},
         {"alpha_1", 0.5},
         {"alpha_2", 0.3},
         {"cov_1", ""},
         {"cov_2", ""},
         {"axes", {"eigenvector", "eigenvalue"}},
         {"classifiers", {"boc", "quadnet"}},
         {"hold_at", "c1"},
         {"n_eval", 1000},
         {"thresholds", Json::array()},
         {"reorthogonalize", false},
         {"n_train_per_class", 4000},
         {"d_h", 0},
         {"train", train_defaults(1e-2, 300, true, "adam")},
         {"checkpoint", ""},
         {"verdicts", ""},
         {"export_samples", false}};
  } else if (subcommand == "empirical-scaling") {
    c = {{"d", 50},
         {"alpha_a", 0.5},
         {"alpha_b", 0.6},
         {"gammas", {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}},
         {"repeats", 3},
         {"n_eval", 5000}};
  } else if (subcommand == "gen-cov") {
    c = {{"d", 20}, {"alpha", 0.5}, {"basis", "haar"}, {"format", "bocm"}};
  } else if (subcommand == "sample") {
    c = {{"cov", ""}, {"d", 20}, {"alpha", 0.5}, {"basis", "haar"}, {"n", 1000}, {"format", "bocm"}};
  } else if (subcommand == "recolor") {
    c = {{"input", ""},
         {"source", ""},
         {"target", ""},
         {"centering", "model"},
         {"relative_floor", 1e-12},
         {"format", "bocm"}};
  } else if (subcommand == "render") {
    c = {{"input", ""},
         {"kind", "histogram"},
         {"x", "t"},
         {"bin_lo", "bin_lo"},
         {"bin_hi", "bin_hi"},
         {"y", Json::array()},
         {"overlay", ""},
         {"overlay_x", "t"},
         {"overlay_y", Json::array()},
         {"markers", Json::array()},
         {"title", ""},
         {"x_label", ""},
         {"y_label", ""}};
  } else {
    throw InputError("unknown subcommand '" + subcommand + "'");
  }
  c["seed"] = 0;
  return c;
}

Json load_config_file(const std::filesystem::path& path) {
  try {
    return Json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("override '" + assignment + "' must be key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

Json resolve_config(const std::string& subcommand, const Json& file_config,
                    const std::vector<std::string>& overrides, const std::uint64_t* seed) {
  Json config = default_config(subcommand);
  if (!file_config.is_null()) {
    if (!file_config.is_object()) throw InputError("config: top level must be an object");
    Json patch = file_config;
    // A snapshot carries its subcommand; it is not a config key.
    patch.erase("subcommand");
    for (const auto& [key, value] : patch.items()) {
      if (!config.contains(key)) throw InputError("config: unknown key '" + key + "' for " + subcommand);
    }
    config.merge_patch(patch);
  }
  for (const auto& o : overrides) {
    apply_override(config, o);
    const std::string top = o.substr(0, o.find_first_of(".="));
    if (!default_config(subcommand).contains(top)) {
      throw InputError("config: unknown key '" + top + "' for " + subcommand);
    }
  }
  if (seed) config["seed"] = *seed;
  get_seed(config);
  return config;
}

std::string config_hash(const Json& config) { return sha256_hex(config.dump()).substr(0, 12); }

double get_double(const Json& config, const std::string& key) { return typed<double>(config, key, "a number"); }

int get_int(const Json& config, const std::string& key) {
  const Json& v = lookup(config, key);
  if (!v.is_number_integer() && !(v.is_number_float() && v.get<double>() == std::floor(v.get<double>()))) {
    throw InputError("config: key '" + key + "' must be an integer");
  }
  return v.get<int>();
}

std::uint64_t get_seed(const Json& config, const std::string& key) {
  const Json& v = lookup(config, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw InputError("config: '" + key + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const Json& config, const std::string& key) { return typed<bool>(config, key, "a boolean"); }

std::string get_string(const Json& config, const std::string& key) {
  return typed<std::string>(config, key, "a string");
}

std::vector<double> get_doubles(const Json& config, const std::string& key) {
  return typed<std::vector<double>>(config, key, "a list of numbers");
}

}  // namespace boclab::cli
