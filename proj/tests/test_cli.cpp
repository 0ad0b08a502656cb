#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "runner.hpp"

using namespace cusplab::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool names(const std::vector<ConfigIssue>& issues, const std::string& needle) {
  for (const ConfigIssue& i : issues)
    if (i.key.find(needle) != std::string::npos || i.message.find(needle) != std::string::npos) return true;
  return false;
}

RunConfig lattice_config(const fs::path& out) {
  RunConfig cfg;
  REQUIRE(parse_config_text("[preset]\nname = two_parabolic_lattice\n[coding]\ncutoff = 1e-3\n[delta]\ndegree = 16\n"
                            "[run]\nselect = coding,delta\nout = " + out.string() + "\n",
                            cfg)
              .empty());
  return cfg;
}

}  // namespace

TEST_CASE("schema errors") {
  RunConfig cfg;
  auto empty = parse_config_text("", cfg);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].message == "empty configuration");
  CHECK(names(parse_config_text("[preset]\nfoo = 1\n", cfg), "foo"));
  CHECK(names(parse_config_text("[nowhere]\nseed = 1\n", cfg), "nowhere"));
  CHECK_FALSE(parse_config_text("[run]\nseed = 1\n[run]\nseed = 2\n", cfg).empty());
  CHECK(names(parse_config_text("[coding]\ncutoff = 0.5\n", cfg), "coding.cutoff"));
  CHECK(names(parse_config_text("[delta]\ndegree = many\n", cfg), "delta.degree"));
  CHECK(names(parse_config_file("/nonexistent/cusplab.ini", cfg), "cannot open"));

  RunConfig bad;
  bad.select = {"coding", "bogus"};
  bad.ncpEpsLo = 0.5;
  bad.ncpEpsHi = 0.1;
  auto issues = check_config(bad);
  CHECK(names(issues, "bogus"));
  CHECK(names(issues, "eps_lo"));
}

TEST_CASE("knob overrides and echo") {
  RunConfig cfg;
  REQUIRE(parse_config_text("[run]\nseed = 5\nselect = coding, delta\n[ldp]\nt = 2, 4\n", cfg).empty());
  CHECK(cfg.seed == 5);
  CHECK(cfg.select == std::vector<std::string>{"coding", "delta"});
  CHECK(cfg.ldpT == std::vector<double>{2, 4});
  CHECK(cfg.selected("delta"));
  CHECK_FALSE(cfg.selected("mixing"));
  CHECK(set_knob(cfg, "run", "seed", "11").empty());
  CHECK(cfg.seed == 11);
  CHECK_FALSE(set_knob(cfg, "run", "workers", "0").empty());
  CHECK(cfg.workers == 1);  // rejected values leave the knob unchanged
  CHECK(names(set_knob(cfg, "run", "colour", "red"), "colour"));

  std::string echo = echo_config(cfg);
  CHECK(echo.find("run.seed=11\n") != std::string::npos);
  // The echo parses back to the same configuration.
  std::ostringstream ini;
  std::string section;
  std::istringstream lines(echo);
  for (std::string line; std::getline(lines, line);) {
    auto dot = line.find('.');
    std::string s = line.substr(0, dot);
    if (s != section) ini << "[" << s << "]\n", section = s;
    ini << line.substr(dot + 1) << "\n";
  }
  RunConfig back;
  REQUIRE(parse_config_text(ini.str(), back).empty());
  CHECK(echo_config(back) == echo);
  CHECK(knob_catalog().size() >= 40);
  RunConfig all;
  CHECK(all.selected("mixing"));
}

TEST_CASE("manifest") {
  Manifest m;
  m.set("b", 2.5);
  m.set("a", (long long)3);
  m.set("b", std::string("x"));
  m.merge("c=1\n# comment\nd=two\n");
  CHECK(*m.find("b") == "x");
  CHECK(*m.find("d") == "two");
  CHECK(m.find("zz") == nullptr);
  std::string t = m.text();
  CHECK(t.rfind("# schema=1\n", 0) == 0);
  CHECK(t.find("b=x") < t.find("a=3"));  // insertion order is kept
}

TEST_CASE("lattice run is deterministic") {
  const fs::path root = fs::temp_directory_path() / "cusplab_test_cli";
  fs::remove_all(root);
  std::ostringstream log;
  RunResult r1 = run(lattice_config(root / "one"), log);
  CHECK(r1.status == 0);
  CHECK(r1.errors.empty());
  REQUIRE(r1.manifest.find("spectral.delta") != nullptr);
  CHECK(std::stod(*r1.manifest.find("spectral.delta")) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(*r1.manifest.find("status.coding") == "ok");
  CHECK(*r1.manifest.find("status.delta") == "ok");
  CHECK(r1.manifest.find("status.mixing") == nullptr);
  RunResult r2 = run(lattice_config(root / "two"), log);
  REQUIRE(r1.files == r2.files);
  // Outputs match byte for byte apart from the echoed output directory.
  auto without_out = [](const std::string& text) {
    std::istringstream in(text);
    std::string kept;
    for (std::string line; std::getline(in, line);)
      if (line.find("run.out=") == std::string::npos) kept += line + "\n";
    return kept;
  };
  for (const std::string& f : r1.files) {
    std::string a = slurp(root / "one" / f);
    if (f.ends_with(".csv")) CHECK(a.rfind("# schema=1", 0) == 0);
    CHECK(without_out(a) == without_out(slurp(root / "two" / f)));
  }
  CHECK(derived_constants(lattice_config(root / "three")).find("coding.") != std::string::npos);
  fs::remove_all(root);
}
