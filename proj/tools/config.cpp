#include "config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "cusplab/moebius.hpp"

namespace cusplab::cli {

namespace {

using Member = std::variant<int RunConfig::*, std::uint64_t RunConfig::*, double RunConfig::*,
                            std::string RunConfig::*, std::vector<double> RunConfig::*,
                            std::vector<int> RunConfig::*, std::vector<std::string> RunConfig::*>;

struct Knob {
  const char* section;
  const char* key;
  Member member;
  double lo, hi;  // per element for lists
  bool allowEmpty;
  const char* doc;
};

constexpr double kInf = 1e300;

const std::vector<Knob>& knobs() {
  static const std::vector<Knob> table = {
      {"preset", "name", &RunConfig::preset, 0, 0, false, "two_parabolic_real | two_parabolic_lattice | two_parabolic_complex"},
      {"preset", "params", &RunConfig::params, -1e6, 1e6, true, "preset parameters; empty selects the defaults"},
      {"coding", "cutoff", &RunConfig::cutoff, 1e-8, 0.1, false, "derivative-norm cutoff of the explicit alphabet"},
      {"coding", "gap_fraction", &RunConfig::gapFraction, 0, 0.1, false, "domain gap as a fraction of the translation length"},
      {"coding", "tail_nodes", &RunConfig::tailNodes, 2, 32, false, "nodes per tail quadrature rule"},
      {"delta", "degree", &RunConfig::degree, 8, 96, false, "Chebyshev degree per axis"},
      {"delta", "a_points", &RunConfig::aPoints, 1, 21, false, "real twist grid size"},
      {"run", "seed", &RunConfig::seed, 0, 1.8e19, false, "base seed"},
      {"run", "workers", &RunConfig::workers, 1, 256, false, "worker threads"},
      {"run", "select", &RunConfig::select, 0, 0, false, "experiments or all"},
      {"run", "out", &RunConfig::out, 0, 0, false, "output directory"},
      {"lnic", "m", &RunConfig::lnicM, 1, 4, false, "word length"},
      {"lnic", "grid", &RunConfig::lnicGrid, 2, 200, false, "scan grid size"},
      {"lnic", "letters", &RunConfig::lnicLetters, 2, 40, false, "heaviest branches used for candidate words"},
      {"ncp", "rows", &RunConfig::ncpRows, 1, 100000, false, "window-constrained scan rows"},
      {"ncp", "eps_lo", &RunConfig::ncpEpsLo, 1e-6, 0.99, false, "smallest scan scale"},
      {"ncp", "eps_hi", &RunConfig::ncpEpsHi, 1e-6, 0.99, false, "largest scan scale"},
      {"ncp", "window", &RunConfig::ncpWindow, 0, 50, false, "window parameter R"},
      {"ncp", "profile_eps", &RunConfig::ncpProfileEps, 1e-6, 0.99, false, "scales of the rank-one failure profile"},
      {"ldp", "t", &RunConfig::ldpT, 0.1, 200, false, "times"},
      {"ldp", "m", &RunConfig::ldpM, 1, 8, false, "block lengths"},
      {"ldp", "n", &RunConfig::ldpN, 1, 10000, false, "block counts"},
      {"ldp", "r0", &RunConfig::ldpR0, 0, 50, false, "window parameter"},
      {"ldp", "samples", &RunConfig::ldpSamples, 10, 1e8, false, "Monte Carlo samples"},
      {"renewal", "t", &RunConfig::renewalT, 0, 40, false, "renewal times"},
      {"renewal", "bump_width", &RunConfig::bumpWidth, 0.05, 10, false, "half width of the standard bump"},
      {"renewal", "depth_budget", &RunConfig::depthBudget, 1, 400, false, "maximal word length"},
      {"renewal", "residual_t", &RunConfig::residualT, 0.1, 200, false, "time of the residual experiments"},
      {"renewal", "residual_r", &RunConfig::residualR, 0, 100, false, "residual thresholds"},
      {"renewal", "residual_samples", &RunConfig::residualSamples, 10, 1e8, false, "samples for the tail fit"},
      {"renewal", "identity_r", &RunConfig::identityR, 0, 100, true, "thresholds for the two-estimator identity"},
      {"renewal", "identity_samples", &RunConfig::identitySamples, 10, 1e8, false, "samples per identity estimator"},
      {"dolgopyat", "b", &RunConfig::twistB, -1e4, 1e4, false, "twist frequencies"},
      {"dolgopyat", "n", &RunConfig::twistN, -8, 8, false, "holonomy characters (d = 2)"},
      {"dolgopyat", "k_max", &RunConfig::kMax, 4, 400, false, "operator powers"},
      {"dolgopyat", "r0", &RunConfig::dolgopyatR0, 0.1, 50, false, "partition scale parameter"},
      {"dolgopyat", "recurrence_samples", &RunConfig::recurrenceSamples, 0, 1e7, false, "recurrence samples, 0 skips"},
      {"mixing", "t", &RunConfig::mixingT, 0, 200, false, "correlation times"},
      {"mixing", "samples", &RunConfig::mixingSamples, 2, 1e8, false, "flow samples"},
      {"mixing", "fiber_mode", &RunConfig::fiberMode, 0, 8, false, "fiber Fourier mode, 0 uses a base observable"},
  };
  return table;
}

const Knob* find_knob(const std::string& section, const std::string& key) {
  for (const Knob& k : knobs())
    if (section == k.section && key == k.key) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n"), b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& v) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

std::string name_of(const Knob& k) { return std::string(k.section) + "." + k.key; }

std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
  return s;
}

std::string show_value(const RunConfig& cfg, const Knob& k) {
  return std::visit(
      [&](auto m) -> std::string {
        const auto& v = cfg.*m;
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<V, double>) {
          return format_double(v, 12);
        } else if constexpr (std::is_arithmetic_v<V>) {
          return std::to_string(v);
        } else {
          std::vector<std::string> parts;
          for (const auto& x : v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>)
              parts.push_back(format_double(x, 12));
            else if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::string>)
              parts.push_back(x);
            else
              parts.push_back(std::to_string(x));
          }
          return join(parts);
        }
      },
      k.member);
}

std::vector<ConfigIssue> assign(RunConfig& cfg, const Knob& k, const std::string& raw) {
  const std::string text = trim(raw), name = name_of(k);
  std::vector<ConfigIssue> issues;
  auto bad = [&](const std::string& what) { issues.push_back({name, what}); };
  auto inRange = [&](double x) {
    if (k.lo < k.hi && (x < k.lo || x > k.hi))
      bad("value " + format_double(x, 8) + " outside [" + format_double(k.lo, 6) + ", " + format_double(k.hi, 6) + "]");
  };
  std::visit(
      [&](auto m) {
        auto& v = cfg.*m;
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>) {
          if (text.empty()) return bad("empty value");
          v = text;
        } else if constexpr (std::is_arithmetic_v<V>) {
          V x{};
          if (!parse_number(text, x)) return bad("cannot parse '" + text + "'");
          inRange((double)x);
          if (issues.empty()) v = x;
        } else {
          using E = typename V::value_type;
          V xs;
          for (const std::string& item : split(text)) {
            if constexpr (std::is_same_v<E, std::string>) {
              xs.push_back(item);
            } else {
              E x{};
              if (!parse_number(item, x)) return bad("cannot parse list item '" + item + "'");
              inRange((double)x);
              xs.push_back(x);
            }
          }
          if (xs.empty() && !k.allowEmpty) return bad("empty list");
          if (issues.empty()) v = xs;
        }
      },
      k.member);
  return issues;
}

}  // namespace

bool RunConfig::selected(const std::string& experiment) const {
  for (const std::string& s : select)
    if (s == "all" || s == experiment) return true;
  return false;
}

std::vector<ConfigIssue> set_knob(RunConfig& cfg, const std::string& section, const std::string& key,
                                  const std::string& value) {
  const Knob* k = find_knob(section, key);
  if (!k) {
    bool knownSection = std::any_of(knobs().begin(), knobs().end(), [&](const Knob& x) { return section == x.section; });
    if (!knownSection) return {{section, "unknown section '" + section + "'"}};
    return {{key, "unknown key '" + key + "' in section [" + section + "]"}};
  }
  return assign(cfg, *k, value);
}

std::vector<ConfigIssue> parse_config_text(const std::string& text, RunConfig& cfg) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    return {{"syntax", "line " + std::to_string(e.line()) + ": " + e.message()}};
  }
  if (tree.empty()) return {{"config", "empty configuration"}};
  std::vector<ConfigIssue> issues;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      issues.push_back({section, "key '" + section + "' outside any section"});
      continue;
    }
    for (const auto& [key, leaf] : body) {
      auto more = set_knob(cfg, section, key, leaf.get_value<std::string>());
      issues.insert(issues.end(), more.begin(), more.end());
    }
  }
  return issues;
}

std::vector<ConfigIssue> parse_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream f(path);
  if (!f) return {{"config", "cannot open '" + path + "'"}};
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), cfg);
}

std::vector<ConfigIssue> check_config(const RunConfig& cfg) {
  std::vector<ConfigIssue> issues;
  RunConfig probe = cfg;
  // Re-validate every knob through its textual form so overrides get the same range checks.
  for (const Knob& k : knobs()) {
    auto more = assign(probe, k, show_value(cfg, k));
    issues.insert(issues.end(), more.begin(), more.end());
  }
  static const std::vector<std::string> presets = {"two_parabolic_real", "two_parabolic_lattice",
                                                   "two_parabolic_complex"};
  if (std::find(presets.begin(), presets.end(), cfg.preset) == presets.end())
    issues.push_back({"preset.name", "unknown preset '" + cfg.preset + "'"});
  for (const std::string& s : cfg.select)
    if (s != "all" && std::find(kExperiments.begin(), kExperiments.end(), s) == kExperiments.end())
      issues.push_back({"run.select", "unknown experiment '" + s + "'"});
  if (cfg.ncpEpsLo > cfg.ncpEpsHi) issues.push_back({"ncp.eps_lo", "eps_lo exceeds eps_hi"});
  if (cfg.residualR.size() < 3) issues.push_back({"renewal.residual_r", "the tail fit needs at least 3 thresholds"});
  if (cfg.ldpN.size() < 3) issues.push_back({"ldp.n", "the decay fit needs at least 3 block counts"});
  if (cfg.mixingT.size() < 2) issues.push_back({"mixing.t", "the decay fit needs at least 2 times"});
  return issues;
}

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const Knob& k : knobs()) os << name_of(k) << "=" << show_value(cfg, k) << "\n";
  return os.str();
}

const std::vector<KnobInfo>& knob_catalog() {
  static const std::vector<KnobInfo> info = [] {
    std::vector<KnobInfo> v;
    for (const Knob& k : knobs()) {
      std::string range = k.lo < k.hi ? "[" + format_double(k.lo, 6) + ", " + format_double(k.hi, 6) + "]" : "text";
      v.push_back({k.section, k.key, range, k.doc});
    }
    return v;
  }();
  return info;
}

}  // namespace cusplab::cli
