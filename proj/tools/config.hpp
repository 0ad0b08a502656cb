#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cusplab::cli {

// Experiments in dependency order.
inline const std::vector<std::string> kExperiments = {"coding", "delta",   "lnic",       "ncp",
                                                      "ldp",    "renewal", "dolgopyat", "mixing"};

struct RunConfig {
  // [preset]
  std::string preset = "two_parabolic_real";
  std::vector<double> params;
  // [coding]
  double cutoff = 1e-4;
  double gapFraction = 1e-3;
  int tailNodes = 8;
  // [delta]
  int degree = 32;
  int aPoints = 5;
  // [run]
  std::uint64_t seed = 1;
  int workers = 1;
  std::vector<std::string> select = {"all"};
  std::string out = "cusplab-out";
  // [lnic]
  int lnicM = 2;
  int lnicGrid = 20;
  int lnicLetters = 6;
  // [ncp]
  int ncpRows = 100;
  double ncpEpsLo = 0.02, ncpEpsHi = 0.2;
  double ncpWindow = 3.0;
  std::vector<double> ncpProfileEps = {0.04, 0.02, 0.01, 0.005};
  // [ldp]
  std::vector<double> ldpT = {5, 10, 20};
  std::vector<int> ldpM = {1, 2};
  std::vector<int> ldpN = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  double ldpR0 = 3.0;
  int ldpSamples = 5000;
  // [renewal]
  std::vector<double> renewalT = {5, 8, 11, 15};
  double bumpWidth = 1.0;
  int depthBudget = 64;
  double residualT = 10.0;
  std::vector<double> residualR = {2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8};
  int residualSamples = 100000;
  std::vector<double> identityR = {2, 5};
  int identitySamples = 100000;
  // [dolgopyat]
  std::vector<double> twistB = {5, 10, 20};
  std::vector<int> twistN = {0};
  int kMax = 40;
  double dolgopyatR0 = 3.0;
  int recurrenceSamples = 5000;
  // [mixing]
  std::vector<double> mixingT = {0, 1.5, 3, 4.5, 6, 7.5, 9, 10.5, 12, 13.5, 15};
  int mixingSamples = 20000;
  int fiberMode = 1;

  bool selected(const std::string& experiment) const;
};

struct ConfigIssue {
  std::string key;  // section.key, or the offending name
  std::string message;
};

// Parses INI text into cfg; all schema violations are collected.
std::vector<ConfigIssue> parse_config_text(const std::string& text, RunConfig& cfg);
std::vector<ConfigIssue> parse_config_file(const std::string& path, RunConfig& cfg);
// Range and cross-field checks after overrides are applied.
std::vector<ConfigIssue> check_config(const RunConfig& cfg);

// Sets a single knob from its textual form, e.g. ("run", "seed", "7").
std::vector<ConfigIssue> set_knob(RunConfig& cfg, const std::string& section, const std::string& key,
                                  const std::string& value);

// Resolved knobs as section.key=value lines in table order.
std::string echo_config(const RunConfig& cfg);

struct KnobInfo {
  std::string section, key, range, doc;
};
const std::vector<KnobInfo>& knob_catalog();

}  // namespace cusplab::cli
