#include "boclab/cli/app.hpp"
#include "boclab/cli/commands.hpp"
#include "boclab/cli/config.hpp"
#include "boclab/cli/manifest.hpp"
#include "boclab/cli/render.hpp"
#include "boclab/error.hpp"
#include "boclab/matrix_io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

using namespace boclab;
using namespace boclab::cli;

namespace {

struct AppRun {
  int code;
  std::string out, err;
  std::filesystem::path dir() const { return out.substr(0, out.find('\n')); }
};

AppRun app(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_app(args, out, err);
  return {code, out.str(), err.str()};
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::map<std::string, std::string> csv_checksums(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".csv" || e.path().extension() == ".bocm") {
      out[std::filesystem::relative(e.path(), dir).string()] = sha256_file(e.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("config resolution") {
  const Json file = {{"d", 30}, {"train", {{"steps", 5}}}};
  const std::uint64_t seed = 17;
  const Json c = resolve_config("train-quadnet", file, {"train.learning_rate=0.5", "basis=rotated"}, &seed);
  CHECK(c["d"] == 30);
  CHECK(c["train"]["steps"] == 5);
  CHECK(c["train"]["optimizer"] == "adam");
  CHECK(c["train"]["learning_rate"] == 0.5);
  CHECK(c["basis"] == "rotated");
  CHECK(c["seed"] == 17);
  CHECK_THROWS_AS(resolve_config("train-quadnet", {{"dd", 3}}, {}, nullptr), InputError);
  CHECK_THROWS_AS(resolve_config("train-quadnet", Json::object(), {"nope=1"}, nullptr), InputError);
  CHECK_THROWS_AS(resolve_config("no-such", Json::object(), {}, nullptr), InputError);
  CHECK_THROWS_AS(get_int(c, "basis"), InputError);
  CHECK(config_hash(c) == config_hash(c));
  CHECK(config_hash(c).size() == 12);
  for (const auto& name : subcommand_names()) CHECK(default_config(name).contains("seed"));
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("svg rendering") {
  PlotSpec spec;
  spec.title = "one bin";
  spec.x_label = "t";
  spec.y_label = "count";
  spec.bars = {{"h", {0.0}, {1.0}, {3.0}, ""}};
  const std::string svg = render_svg(spec);
  CHECK(count(svg, "<rect class=\"bar\"") == 1);
  CHECK(svg.find("class=\"axes\"") != std::string::npos);
  CHECK(svg.find(">t</text>") != std::string::npos);
  CHECK(svg.find(">count</text>") != std::string::npos);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(render_svg(spec) == svg);

  spec.curves = {{"c", {0.0, 0.5, 1.0}, {0.0, 2.0, NAN}, ""}};
  spec.markers = {{0.25, "m", ""}};
  const std::string full = render_svg(spec);
  CHECK(count(full, "<polyline class=\"curve\"") == 1);
  CHECK(count(full, "<line class=\"marker\"") == 1);
}

TEST_CASE("render subcommand") {
  TempDir tmp;
  std::ofstream(tmp / "h.csv") << "bin_lo,bin_hi,y\n0,1,2\n";
  std::ofstream(tmp / "o.csv") << "t,pdf\n0,0.1\n1,0.2\n";
  const AppRun ok = app({"render", "--out", tmp.path.string(), "--set", "input=" + (tmp / "h.csv").string(), "--set",
                         "overlay=" + (tmp / "o.csv").string(), "--set", "overlay_y=[\"pdf\"]", "--set", "markers=[0.5]"});
  REQUIRE(ok.code == 0);
  const std::string svg = io::read_file(ok.dir() / "plot.svg");
  CHECK(count(svg, "<rect class=\"bar\"") == 1);
  CHECK(count(svg, "<polyline") == 1);

  std::ofstream(tmp / "empty.csv") << "bin_lo,bin_hi,y\n";
  const AppRun empty = app({"render", "--out", tmp.path.string(), "--set", "input=" + (tmp / "empty.csv").string()});
  CHECK(empty.code == 2);
  CHECK(empty.err.find("error:") != std::string::npos);

  const AppRun missing = app({"render", "--out", tmp.path.string(), "--set", "input=" + (tmp / "h.csv").string(),
                              "--set", "bin_lo=start"});
  CHECK(missing.code == 2);
}

TEST_CASE("exit codes") {
  CHECK(app({}).code == 2);
  CHECK(app({"no-such-command"}).code == 2);
  CHECK(app({"gen-cov", "--threads", "0"}).code == 2);
  TempDir tmp;
  CHECK(app({"gen-cov", "--out", tmp.path.string(), "--set", "d=0"}).code == 2);
  CHECK(app({"gen-cov", "--out", tmp.path.string(), "--set", "basis=random"}).code == 2);
  CHECK(app({"--help"}).code == 0);
}

TEST_CASE("run directory and manifest") {
  TempDir tmp;
  const AppRun r = app({"gen-cov", "--out", tmp.path.string(), "--seed", "5", "--set", "d=6"});
  REQUIRE(r.code == 0);
  const auto dir = r.dir();
  CHECK(std::regex_match(dir.filename().string(), std::regex(R"(\d{8}T\d{6}Z-[0-9a-f]{12}(-\d+)?)")));
  const Json manifest = Json::parse(io::read_file(dir / "manifest.json"));
  CHECK(manifest["subcommand"] == "gen-cov");
  CHECK(manifest["seed_chain"]["master"] == 5);
  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) listed.insert(f["path"].get<std::string>());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().filename() != "manifest.json") CHECK(listed.count(e.path().filename().string()) == 1);
  }
  const Json config = Json::parse(io::read_file(dir / "config.json"));
  CHECK(config["d"] == 6);
  CHECK(config["subcommand"] == "gen-cov");

  CHECK(verify_manifest(dir).ok);
  CHECK(app({"verify", dir.string()}).code == 0);
  {
    std::ofstream(dir / "spectrum.csv", std::ios::app) << "99,0\n";
  }
  const VerifyReport bad = verify_manifest(dir);
  CHECK_FALSE(bad.ok);
  CHECK(bad.problems.size() == 1);
  CHECK(app({"verify", dir.string()}).code == 3);

  // A second run of the same config gets its own directory.
  const AppRun again = app({"gen-cov", "--out", tmp.path.string(), "--seed", "5", "--set", "d=6"});
  CHECK(again.dir() != dir);
}

TEST_CASE("data utilities") {
  TempDir tmp;
  const std::string root = tmp.path.string();
  const AppRun a = app({"gen-cov", "--out", root, "--seed", "1", "--set", "d=5", "--set", "alpha=0.5"});
  const AppRun b = app({"gen-cov", "--out", root, "--seed", "2", "--set", "d=5", "--set", "alpha=0.1"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const Matrix ca = io::read_matrix(a.dir() / "covariance.bocm");
  CHECK((ca - ca.transpose()).norm() == 0.0);

  const AppRun s = app({"sample", "--out", root, "--set", "cov=" + (a.dir() / "covariance.bocm").string(), "--set",
                        "n=20000", "--set", "format=csv"});
  REQUIRE(s.code == 0);
  const Matrix x = io::read_matrix(s.dir() / "samples.csv");
  CHECK(x.rows() == 20000);
  CHECK(((x.transpose() * x / 20000.0) - ca).norm() / ca.norm() < 0.05);

  const AppRun rc = app({"recolor", "--out", root, "--set", "input=" + (s.dir() / "samples.csv").string(), "--set",
                         "source=" + (a.dir() / "covariance.bocm").string(), "--set",
                         "target=" + (b.dir() / "covariance.bocm").string()});
  REQUIRE(rc.code == 0);
  const Matrix y = io::read_matrix(rc.dir() / "recolored.bocm");
  const Matrix cb = io::read_matrix(b.dir() / "covariance.bocm");
  CHECK(((y.transpose() * y / 20000.0) - cb).norm() / cb.norm() < 0.05);

  CHECK(app({"recolor", "--out", root}).code == 2);
}

TEST_CASE("beta-hist overlay carries the histogram mass") {
  TempDir tmp;
  const AppRun r = app({"beta-hist", "--out", tmp.path.string(), "--set", "d=20", "--set", "n_per_class=5000", "--set",
                        "grid_points=400", "--set", "scenarios=[\"shared-basis\"]"});
  REQUIRE(r.code == 0);
  const io::Table hist = io::read_table(r.dir() / "hist_shared-basis.csv");
  const io::Table overlay = io::read_table(r.dir() / "overlay_shared-basis.csv");
  for (const char* cls : {"a", "b"}) {
    const std::size_t dc = hist.column(std::string("density_") + cls);
    double hist_mass = 0.0;
    for (const auto& row : hist.rows) hist_mass += row[dc] * (row[1] - row[0]);
    const std::size_t pc = overlay.column(std::string("pdf_") + cls);
    double curve_mass = 0.0;
    for (std::size_t i = 1; i < overlay.rows.size(); ++i) {
      curve_mass += 0.5 * (overlay.rows[i][pc] + overlay.rows[i - 1][pc]) * (overlay.rows[i][0] - overlay.rows[i - 1][0]);
    }
    CHECK(curve_mass == doctest::Approx(hist_mass).epsilon(0.02));
  }
  const io::Table markers = io::read_table(r.dir() / "markers.csv");
  CHECK(markers.rows.size() == 2);
  for (const auto& row : markers.rows) {
    CHECK(std::abs(row[markers.column("empirical_mean")] - row[markers.column("analytic")]) <=
          4.0 * row[markers.column("standard_error")]);
  }
}

TEST_CASE("reruns are byte-identical across thread counts") {
  TempDir tmp;
  const std::string root = tmp.path.string();
  const AppRun first = app({"empirical-scaling", "--out", root, "--seed", "3", "--threads", "1", "--set", "d=10",
                            "--set", "gammas=[0.05,0.1]", "--set", "n_eval=500", "--set", "repeats=2"});
  REQUIRE(first.code == 0);
  const AppRun second = app({"rerun", first.dir().string(), "--out", root, "--threads", "3"});
  REQUIRE(second.code == 0);
  CHECK(first.dir() != second.dir());
  const auto a = csv_checksums(first.dir());
  CHECK_FALSE(a.empty());
  CHECK(a == csv_checksums(second.dir()));
  CHECK(io::read_file(first.dir() / "config.json") == io::read_file(second.dir() / "config.json"));
}

TEST_CASE("output root from the environment") {
  TempDir tmp;
  ::setenv("BOCLAB_OUT_ROOT", tmp.path.string().c_str(), 1);
  CHECK(output_root("") == tmp.path);
  CHECK(output_root("elsewhere") == "elsewhere");
  ::unsetenv("BOCLAB_OUT_ROOT");
  CHECK(output_root("") == "runs");
}
