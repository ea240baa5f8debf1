#include "boclab/cli/app.hpp"

#include "boclab/cli/commands.hpp"
#include "boclab/error.hpp"
#include "boclab/log.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

namespace boclab::cli {
namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
  std::vector<std::string> overrides;
};

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--config,-c", f.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed,-s", f.seed, "master seed (overrides the config)");
  app->add_option("--out,-o", f.out, "output root (default $BOCLAB_OUT_ROOT or ./runs)");
  app->add_option("--threads,-j", f.threads, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--set", f.overrides, "config override key.path=value (repeatable)");
}

RunSettings settings_from(const Flags& f, const CLI::App* app) {
  RunSettings s;
  s.overrides = f.overrides;
  if (app->count("--seed") > 0) s.seed = f.seed;
  s.out_root = f.out;
  s.threads = f.threads;
  return s;
}

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"boclab: Bayes-optimal classification of overlapping Gaussian mixtures", "boclab"};
  app.require_subcommand(1);

  const std::vector<std::string> names = subcommand_names();
  std::vector<Flags> flags(names.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], subcommand_help(names[i]));
    add_run_flags(sub, flags[i]);
    subs.push_back(sub);
  }

  std::string verify_dir;
  CLI::App* verify = app.add_subcommand("verify", "recompute the checksums in a run's manifest");
  verify->add_option("dir", verify_dir, "run directory")->required();

  std::string rerun_dir;
  Flags rerun_flags;
  CLI::App* rerun_cmd = app.add_subcommand("rerun", "run the config snapshot of an earlier run again");
  rerun_cmd->add_option("dir", rerun_dir, "run directory")->required();
  rerun_cmd->add_option("--out,-o", rerun_flags.out, "output root");
  rerun_cmd->add_option("--threads,-j", rerun_flags.threads, "worker threads")->check(CLI::PositiveNumber);

  // CLI11 parses in reverse order when given a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInput);
  }

  set_note_sink([&err](const std::string& m) { err << "note: " << m << "\n"; });
  struct SinkReset {
    ~SinkReset() {
      set_note_sink([](const std::string& m) { std::cerr << "note: " << m << "\n"; });
    }
  } reset;
  try {
    if (verify->parsed()) {
      const VerifyReport report = verify_manifest(verify_dir);
      for (const auto& p : report.problems) err << "mismatch: " << p << "\n";
      out << (report.ok ? "ok" : "FAILED") << "\n";
      return report.ok ? 0 : static_cast<int>(ExitCode::kInvariant);
    }
    if (rerun_cmd->parsed()) {
      RunSettings s;
      s.out_root = rerun_flags.out;
      s.threads = rerun_flags.threads;
      out << rerun(rerun_dir, s).string() << "\n";
      return 0;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const Json file = flags[i].config.empty() ? Json::object() : load_config_file(flags[i].config);
      out << run_subcommand(names[i], file, settings_from(flags[i], subs[i])).string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInput);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInvariant);
  }
  return static_cast<int>(ExitCode::kInput);
}

}  // namespace boclab::cli
