#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qclab/experiment.hpp"

using namespace qclab;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text, const std::string& base = ".") {
  std::istringstream is(text);
  return parse_config(is, "inline", base);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NotApplicable;  // sentinel: nothing thrown
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qclab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Config gauge_config(const fs::path& out) {
  Config c = parse("kind = gauge-table\nseed = 1\ngauge.rho = 1,2\ngauge.C = 1\ngauge.K = 2\n");
  c.values["out"] = out.string();
  return c;
}

}  // namespace

TEST_SUITE("experiment_cli") {

TEST_CASE("config parsing") {
  const Config c = parse("# comment\nkind = gauge-table   # trailing\n\n  h=0.0625\nradii = 0.5, 0.25,0.125\npole = 0.25,0.15\n");
  CHECK(c.str("kind") == "gauge-table");
  CHECK(c.num("h", 0.0) == 0.0625);
  CHECK(c.list("radii", {}) == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(c.point("pole", 0.0) == Point(0.25, 0.15));
  CHECK(c.num("tolerance", 0.02) == 0.02);
  CHECK(c.echo() == "h = 0.0625\nkind = gauge-table\npole = 0.25,0.15\nradii = 0.5, 0.25,0.125\n");
  CHECK(c.hash().size() == 64);

  CHECK(code_of([] { parse("kind = a\nkind = b\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse("colour = red\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse("just words\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse("h = 0.1x\n").num("h", 0); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse("seed = 1.5\n").integer("seed", 0); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse("pole = 1\n").point("pole", 0.0); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse("").str("kind"); }) == ErrorCode::ConfigError);
}

TEST_CASE("hash ignores formatting and follows content") {
  CHECK(parse("kind = x\nseed = 1\n").hash() == parse("seed=1   # same\nkind   =   x\n").hash());
  CHECK(parse("kind = x\nseed = 1\n").hash() != parse("kind = x\nseed = 2\n").hash());
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("include: one level, local keys override") {
  const fs::path dir = scratch("include");
  std::ofstream(dir / "base.cfg") << "seed = 5\nh = 0.0625\n";
  std::ofstream(dir / "nested.cfg") << "include base.cfg\n";
  const Config c = parse("include base.cfg\nseed = 9\n", dir.string());
  CHECK(c.str("seed") == "9");
  CHECK(c.str("h") == "0.0625");
  CHECK(code_of([&] { parse("include nested.cfg\n", dir.string()); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { parse("include base.cfg\ninclude base.cfg\n", dir.string()); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { parse("include missing.cfg\n", dir.string()); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config("/nonexistent/qclab.cfg"); }) == ErrorCode::ConfigError);
}

TEST_CASE("run validation happens before any output") {
  const fs::path dir = scratch("validation");
  Config bad_kind = parse("kind = nothing\n");
  bad_kind.values["out"] = (dir / "a").string();
  CHECK(code_of([&] { run_experiment(bad_kind); }) == ErrorCode::ConfigError);
  Config bad_h = gauge_config(dir / "b");
  bad_h.values["h"] = "0.5";
  CHECK(code_of([&] { run_experiment(bad_h); }) == ErrorCode::ConfigError);
  Config bad_seed = gauge_config(dir / "c");
  bad_seed.values["seed"] = "-3";
  CHECK(code_of([&] { run_experiment(bad_seed); }) == ErrorCode::ConfigError);
  CHECK_FALSE(fs::exists(dir / "a"));
  CHECK_FALSE(fs::exists(dir / "b"));
  CHECK_FALSE(fs::exists(dir / "c"));
  CHECK(code_of([] { run_experiment(parse("kind = gauge-table\n")); }) == ErrorCode::ConfigError);  // no out
}

TEST_CASE("gauge table bundle is deterministic and verifiable") {
  const fs::path dir = scratch("gauge");
  const RunResult r1 = run_experiment(gauge_config(dir / "one"));
  CHECK(r1.all_pass());
  CHECK_FALSE(r1.checks.empty());
  CHECK_FALSE(fs::exists(dir / "one" / ".lock"));
  const char* names[] = {"MANIFEST.sha256", "report.txt", "config.txt", "gauge.csv", "q_t.csv"};
  std::vector<std::string> first;
  for (const char* f : names) {
    CHECK(fs::exists(dir / "one" / f));
    first.push_back(slurp(dir / "one" / f));
  }
  run_experiment(gauge_config(dir / "one"));
  for (std::size_t k = 0; k < first.size(); ++k) CHECK(slurp(dir / "one" / names[k]) == first[k]);
  const std::string head = "# config_sha256=" + gauge_config(dir / "one").hash() + " seed=1\n";
  CHECK(slurp(dir / "one" / "gauge.csv").rfind(head, 0) == 0);

  const BundleReport rep = report_bundle((dir / "one").string());
  CHECK(rep.exit_code == 0);
  CHECK(rep.checks.size() == r1.checks.size());
  CHECK(rep.plot_files.size() == 2);
  CHECK(rep.text.find("PASS") != std::string::npos);
}

TEST_CASE("report exit codes") {
  const fs::path dir = scratch("report");

  // a negative gap makes phi / r^alpha increase, so the step check fails
  Config failing = gauge_config(dir / "fail");
  failing.values["gauge.alpha_gap"] = "-0.5";
  const RunResult rf = run_experiment(failing);
  CHECK_FALSE(rf.all_pass());
  CHECK(report_bundle((dir / "fail").string()).exit_code == 1);

  auto incomplete = [&](const std::string& name, const std::function<void(const fs::path&)>& damage) {
    const fs::path b = dir / name;
    run_experiment(gauge_config(b));
    REQUIRE(report_bundle(b.string()).exit_code == 0);
    damage(b);
    return code_of([&] { report_bundle(b.string()); });
  };
  CHECK(incomplete("missing", [](const fs::path& b) { fs::remove(b / "q_t.csv"); }) == ErrorCode::IncompleteBundle);
  CHECK(incomplete("tampered", [](const fs::path& b) { std::ofstream(b / "gauge.csv", std::ios::app) << "1,1,1,1,1,1,1\n"; }) ==
        ErrorCode::IncompleteBundle);
  CHECK(incomplete("locked", [](const fs::path& b) { std::ofstream(b / ".lock"); }) == ErrorCode::IncompleteBundle);
  CHECK(incomplete("nomanifest", [](const fs::path& b) { fs::remove(b / "MANIFEST.sha256"); }) ==
        ErrorCode::IncompleteBundle);

  // a second run into a locked directory refuses to start
  std::ofstream(dir / "locked" / ".lock");
  CHECK(code_of([&] { run_experiment(gauge_config(dir / "locked")); }) == ErrorCode::IOError);
}

TEST_CASE("shipped configs parse") {
  for (const auto& e : fs::directory_iterator(QCLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".cfg" || e.path().filename() == "common.cfg") continue;
    CAPTURE(e.path().string());
    const Config c = load_config(e.path().string());
    const auto& kinds = experiment_kinds();
    CHECK(std::find(kinds.begin(), kinds.end(), c.str("kind")) != kinds.end());
    CHECK(c.has("out"));
  }
}

}  // TEST_SUITE
