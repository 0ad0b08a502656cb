#include "runner.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "cusplab/dolgopyat.hpp"
#include "cusplab/errors.hpp"
#include "cusplab/excursions.hpp"
#include "cusplab/flow.hpp"
#include "cusplab/holonomy.hpp"
#include "cusplab/sampler.hpp"
#include "cusplab/stats.hpp"

namespace cusplab::cli {

namespace fs = std::filesystem;

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = value;
      return;
    }
  entries_.push_back({key, value});
}
void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

void Manifest::merge(const std::string& lines) {
  std::istringstream in(lines);
  std::string line;
  while (std::getline(in, line)) {
    size_t eq = line.find('=');
    if (eq != std::string::npos) set(line.substr(0, eq), line.substr(eq + 1));
  }
}

const std::string* Manifest::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return &e.second;
  return nullptr;
}

std::string Manifest::text() const {
  std::string s = "# schema=" + std::to_string(kCsvSchema) + "\n";
  for (const auto& [k, v] : entries_) s += k + "=" + v + "\n";
  return s;
}

namespace {

std::string num(double v) { return format_double(v, 12); }

std::string word_text(const std::vector<int>& w) {
  std::string s;
  for (size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + std::to_string(w[i]);
  return s;
}

class Csv {
 public:
  Csv(const fs::path& dir, const std::string& name, const std::string& header, RunResult& res) : name_(name) {
    out_.open(dir / name);
    if (!out_) throw ConfigError("cannot write " + (dir / name).string());
    out_ << "# schema=" << kCsvSchema << "\n" << header << "\n";
    res.files.push_back(name);
  }
  template <class... T>
  void row(const T&... cells) {
    size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << "\n";
  }
  void raw(const std::string& text) { out_ << text; }

 private:
  std::string name_;
  std::ofstream out_;
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
};

struct Context {
  const RunConfig& cfg;
  fs::path dir;
  RunResult& res;
  std::ostream& log;
  std::shared_ptr<const Coding> coding;
  std::unique_ptr<SpectralData> sd;

  std::uint64_t seed_for(const std::string& experiment) const {
    for (size_t i = 0; i < kExperiments.size(); ++i)
      if (kExperiments[i] == experiment) return stream_seed(cfg.seed, 100 + i, 0);
    return cfg.seed;
  }
  Manifest& m() { return res.manifest; }
};

GroupPreset preset_of(const RunConfig& cfg) { return load_preset(cfg.preset, cfg.params); }

CodingOptions coding_options(const RunConfig& cfg) {
  CodingOptions o;
  o.gapFraction = cfg.gapFraction;
  o.tailNodes = cfg.tailNodes;
  return o;
}

void certificate_entries(Manifest& m, const Coding& c) {
  const CodingCertificate& k = c.certificate;
  m.set("coding.cutoff", k.cutoff);
  m.set("coding.alphabet_size", (long long)k.alphabetSize);
  m.set("coding.lambda_hat", k.lambdaHat);
  m.set("coding.C1", k.C1);
  m.set("coding.C2", k.C2);
  m.set("coding.C_cyl", k.Ccyl);
  m.set("coding.max_log_distortion", k.maxLogDistortion);
  m.set("coding.min_gap", k.minGap);
  m.set("coding.eps0", k.eps0);
  m.set("coding.eps0_r2", k.eps0R2);
  m.set("coding.tail_exponent", k.tailExponent);
  m.set("coding.coverage_deficit", k.coverageDeficit);
  m.set("coding.containment_margin", k.containmentMargin);
  m.set("coding.domain.dim", (long long)c.domain.dim);
  m.set("coding.domain.diameter", c.domain.diameter);
  m.set("coding.domain.gap", c.domain.gap);
  m.set("coding.domain.anchor", format_double(c.domain.anchor.real()) + "," + format_double(c.domain.anchor.imag()));
}

void run_coding(Context& ctx) {
  ctx.m().merge(preset_of(ctx.cfg).catalog_text());
  ctx.coding = std::make_shared<Coding>(build_alphabet(preset_of(ctx.cfg), ctx.cfg.cutoff, coding_options(ctx.cfg)));
  certificate_entries(ctx.m(), *ctx.coding);
  if (!ctx.cfg.selected("coding")) return;
  Csv a(ctx.dir, "alphabet.csv", "index,word,k,m,n,side,norm_low,norm_high,image_lo_re,image_lo_im,image_hi_re,image_hi_im",
        ctx.res);
  for (size_t i = 0; i < ctx.coding->branches.size(); ++i) {
    const Branch& b = ctx.coding->branches[i];
    a.row(i, b.word, b.letter.k, b.letter.m, b.letter.n, b.letter.side, b.normLow, b.normHigh, b.boxLo.real(),
          b.boxLo.imag(), b.boxHi.real(), b.boxHi.imag());
  }
  Csv t(ctx.dir, "tail.csv", "theta,sum", ctx.res);
  for (const TailPoint& p : ctx.coding->certificate.tailTable) t.row(p.theta, p.sum);
}

void run_delta(Context& ctx) {
  FindDeltaOptions o;
  o.degree = ctx.cfg.degree;
  o.aPoints = ctx.cfg.aPoints;
  o.workers = ctx.cfg.workers;
  ctx.sd = std::make_unique<SpectralData>(find_delta(ctx.coding, o));
  ctx.m().merge(ctx.sd->report());
  if (!ctx.cfg.selected("delta")) return;
  Csv s(ctx.dir, "spectral.csv", "a,lambda", ctx.res);
  for (size_t i = 0; i < ctx.sd->aGrid.size(); ++i) s.row(ctx.sd->aGrid[i], ctx.sd->lambdaA[i]);
  Csv a(ctx.dir, "atoms.csv", "word,point_re,point_im,nu_mass,mu_mass,pooled", ctx.res);
  for (const CylinderAtom& at : ctx.sd->atoms)
    a.row(word_text(at.word), at.point.real(), at.point.imag(), at.nuMass, at.muEMass, at.pooled);
}

void run_lnic(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  LNICCertificate l = lnic_scan(*ctx.coding, c.lnicM, c.lnicGrid, 0, c.lnicLetters, c.workers);
  ctx.m().set("lnic.m", (long long)l.m);
  ctx.m().set("lnic.grid", (long long)l.gridSize);
  ctx.m().set("lnic.j0", (long long)l.j0);
  ctx.m().set("lnic.eps2", l.eps2);
  ctx.m().set("lnic.C_BP", l.C_BP);
  ctx.m().set("lnic.scanned_points", (long long)l.scannedPoints);
  ctx.m().set("lnic.degenerate", std::string(l.degenerate ? "1" : "0"));
  if (l.degenerate) ctx.log << "warning: lnic-degenerate, eps2 is not positive\n";
  Csv w(ctx.dir, "lnic.csv", "role,word", ctx.res);
  w.row(std::string("alpha0"), word_text(l.alpha0));
  for (size_t j = 0; j < l.alphas.size(); ++j) w.row("alpha" + std::to_string(j + 1), word_text(l.alphas[j]));
}

void run_ncp(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  InvariantSampler sampler(*ctx.sd);
  std::mt19937_64 rng(ctx.seed_for("ncp"));
  std::vector<cplx> xs;
  for (int i = 0; i < 4 * c.ncpRows; ++i) xs.push_back(sampler.orbit(rng, 20, 0).terminal());
  NCPScan scan = ncp_window_scan(*ctx.coding, xs, c.ncpRows, c.ncpEpsLo, c.ncpEpsHi, c.ncpWindow, ctx.seed_for("ncp") + 1);
  ctx.m().set("ncp.rows", (long long)scan.rows.size());
  ctx.m().set("ncp.eta0", scan.eta0);
  ctx.m().set("ncp.outside_window", (long long)scan.outsideWindow);
  ctx.m().set("ncp.exhausted", (long long)scan.exhausted);
  Csv s(ctx.dir, "ncp_scan.csv", "x_re,x_im,w_re,w_im,eps,score,in_ball", ctx.res);
  for (const NCPScanRow& r : scan.rows) s.row(r.x.real(), r.x.imag(), r.w.real(), r.w.imag(), r.eps, r.score, r.inBall);
  const GroupPreset& p = ctx.coding->preset;
  if (p.dim == 2 && p.cuspRank == 1) {
    auto prof = ncp_failure_profile(*ctx.coding, c.ncpProfileEps);
    Csv f(ctx.dir, "ncp_profile.csv", "eps,score,in_ball", ctx.res);
    for (const NCPProfileRow& r : prof) f.row(r.eps, r.score, r.inBall);
    if (prof.size() >= 2 && prof.back().score > 0)
      ctx.m().set("ncp.profile_ratio", prof.front().score / prof.back().score);
  }
}

void run_ldp(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  Csv p(ctx.dir, "ldp.csv", "m,t,kappa,n,prob,low,high", ctx.res);
  Csv f(ctx.dir, "ldp_fit.csv", "m,t,kappa,decay,r2,points", ctx.res);
  double common = 1e300;
  for (int m : c.ldpM) {
    LDPReport r = ldp_monte_carlo(*ctx.sd, c.ldpT, m, c.ldpN, c.ldpR0, c.ldpSamples, ctx.seed_for("ldp") + m, c.workers);
    for (size_t ti = 0; ti < r.tList.size(); ++ti)
      for (size_t ki = 0; ki < r.kappaGrid.size(); ++ki) {
        for (size_t ni = 0; ni < r.nList.size(); ++ni)
          p.row(m, r.tList[ti], r.kappaGrid[ki], r.nList[ni], r.prob[ti][ki][ni], r.low[ti][ki][ni], r.high[ti][ki][ni]);
        f.row(m, r.tList[ti], r.kappaGrid[ki], r.decay[ti][ki], r.r2[ti][ki], r.fitPoints[ti][ki]);
      }
    const std::string k = "ldp.m" + std::to_string(m);
    ctx.m().set(k + ".kappa_hat", r.kappaHat);
    ctx.m().set(k + ".escapes", (long long)r.escapes);
    ctx.m().set(k + ".flagged", std::string(r.flagged ? "1" : "0"));
    common = std::min(common, r.kappaHat);
  }
  ctx.m().set("ldp.r0", c.ldpR0);
  ctx.m().set("ldp.samples", (long long)c.ldpSamples);
  ctx.m().set("ldp.kappa_hat", common);
}

void run_renewal(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const SpectralData& sd = *ctx.sd;
  const cplx x = ctx.coding->domain.anchor;
  RenewalCheck chk = renewal_limit_check(sd, standard_bump(0.0, c.bumpWidth), x, c.renewalT, c.depthBudget);
  Csv r(ctx.dir, "renewal.csv", "t,value,limit,rel_error", ctx.res);
  for (size_t i = 0; i < chk.t.size(); ++i) r.row(chk.t[i], chk.value[i], chk.limit[i], chk.relError[i]);
  ctx.m().set("renewal.bump_width", c.bumpWidth);
  ctx.m().set("renewal.kendall", chk.kendall);
  ctx.m().set("renewal.final_rel_error", chk.relError.back());

  const std::uint64_t seed = ctx.seed_for("renewal");
  ResidualReport tail = residual_tail(sd, c.residualT, c.residualR, c.residualSamples, seed, c.workers);
  Csv t(ctx.dir, "residual.csv", "R,prob,stderr,used", ctx.res);
  for (size_t i = 0; i < tail.R.size(); ++i) t.row(tail.R[i], tail.prob[i], tail.stderr_[i], tail.used[i] != 0);
  ctx.m().set("residual.t", c.residualT);
  ctx.m().set("residual.eps", tail.eps);
  ctx.m().set("residual.r2", tail.r2);
  ctx.m().set("residual.flagged", std::string(tail.flagged ? "1" : "0"));
  if (c.identityR.empty()) return;
  Csv id(ctx.dir, "residual_identity.csv", "R,direct,direct_err,renewal,renewal_err,zscore", ctx.res);
  double worst = 0.0;
  for (size_t i = 0; i < c.identityR.size(); ++i) {
    ResidualIdentity ri = residual_identity(sd, c.residualT, c.identityR[i], c.identitySamples, seed + 1 + i, c.workers);
    id.row(ri.R, ri.direct, ri.directErr, ri.renewal, ri.renewalErr, ri.zscore);
    worst = std::max(worst, std::abs(ri.zscore));
  }
  ctx.m().set("residual.identity_max_abs_z", worst);
}

Eigen::VectorXcd smooth_start(const NodeGrid& grid) {
  Eigen::VectorXcd H(grid.size());
  for (int i = 0; i < H.size(); ++i) H[i] = std::exp(cplx(0.0, grid.node(i).real()));
  return H;
}

void run_dolgopyat(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const SpectralData& sd = *ctx.sd;
  Csv d(ctx.dir, "decay.csv", "b,n,k,raw_norm,majorant_norm", ctx.res);
  Csv f(ctx.dir, "decay_fit.csv", "b,n,eta,r2,domination_violations,cones_pass,weak_cylinders,flagged_cylinders", ctx.res);
  auto emit = [&](const DecayReport& rep, bool cones) {
    for (const DecayRow& r : rep.rows)
      d.row(rep.b, rep.n, r.k, r.rawNorm, r.majorantNorm >= 0 ? num(r.majorantNorm) : std::string());
    f.row(rep.b, rep.n, rep.eta, rep.r2, rep.dominationViolations, cones, rep.weakCylinders, rep.flaggedCylinders);
  };
  const Eigen::VectorXcd H0 = smooth_start(sd.grid);
  if (ctx.coding->domain.dim == 1) {
    DolgopyatOptions o;
    o.R0 = c.dolgopyatR0;
    o.kMax = c.kMax;
    o.seed = ctx.seed_for("dolgopyat");
    o.workers = c.workers;
    DolgopyatEngine eng(sd, o);
    ctx.m().merge(eng.constants().report());
    std::unique_ptr<Csv> rec;
    if (c.recurrenceSamples > 0) rec = std::make_unique<Csv>(ctx.dir, "recurrence.csv", "b,n,frequency,low,high,coin_bound", ctx.res);
    for (double b : c.twistB) {
      DecayReport rep = eng.spectral_decay({0.0, b, 0}, H0, c.kMax);
      bool cones = !rep.cones.empty();
      for (const ConeReport& cr : rep.cones) cones &= cr.pass();
      emit(rep, cones);
      if (rec)
        for (const RecurrenceRow& r : eng.recurrence_frequency(rep, c.recurrenceSamples, o.seed + 1, 0.0))
          rec->row(b, r.n, r.frequency, r.low, r.high, r.coinBound);
    }
  } else {
    for (int n : c.twistN)
      for (double b : c.twistB) emit(twisted_decay(sd, {0.0, b, n}, H0, c.kMax, c.workers), false);
  }
  ctx.m().set("dolgopyat.k_max", (long long)c.kMax);
}

void run_mixing(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const SpectralData& sd = *ctx.sd;
  ObservableTable phi;
  if (c.fiberMode > 0) {
    if (ctx.coding->domain.dim != 2) throw ConfigError("fiber modes need a d = 2 preset");
    phi = ObservableTable::fiber_cosine(c.fiberMode);
  } else {
    phi.grid = sd.grid;
    phi.base.resize(sd.grid.size());
    const double w = ctx.coding->domain.halfWidth;
    for (int i = 0; i < sd.grid.size(); ++i) phi.base[i] = std::cos(M_PI * sd.grid.node(i).real() / w);
  }
  CorrelationReport rep = correlation_estimate(sd, phi, phi, c.mixingT, c.mixingSamples, ctx.seed_for("mixing"), c.workers);
  Csv out(ctx.dir, "correlation.csv", "t,estimate,stderr,flagged", ctx.res);
  for (const CorrelationRow& r : rep.rows) out.row(r.t, r.estimate, r.stderr_, r.flagged);
  ctx.m().set("mixing.fiber_mode", (long long)c.fiberMode);
  ctx.m().set("mixing.samples", (long long)rep.samples);
  ctx.m().set("mixing.eta", rep.eta);
  ctx.m().set("mixing.r2", rep.r2);
  ctx.m().set("mixing.fit_points", (long long)rep.fitPoints);
  ctx.m().set("mixing.oscillatory", std::string(rep.oscillatory ? "1" : "0"));
  if (rep.oscillatory) {
    ctx.m().set("mixing.osc_eta", rep.oscEta);
    ctx.m().set("mixing.omega", rep.omega);
  }
}

void header_entries(Manifest& m, const RunConfig& cfg) {
  m.set("version.cusplab", std::string("0.1.0"));
  m.set("version.eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION));
  m.set("version.boost", std::string(BOOST_LIB_VERSION));
  m.set("version.compiler", std::string(__VERSION__));
  m.set("version.csv_schema", (long long)kCsvSchema);
  m.merge([&] {
    std::string s, echo = echo_config(cfg);
    std::istringstream in(echo);
    for (std::string line; std::getline(in, line);) s += "config." + line + "\n";
    return s;
  }());
  for (size_t i = 0; i < kExperiments.size(); ++i)
    m.set("seed." + kExperiments[i], std::to_string(stream_seed(cfg.seed, 100 + i, 0)));
}

}  // namespace

RunResult run(const RunConfig& cfg, std::ostream& log) {
  RunResult res;
  Context ctx{cfg, fs::path(cfg.out), res, log, nullptr, nullptr};
  header_entries(res.manifest, cfg);
  std::error_code ec;
  fs::create_directories(ctx.dir, ec);
  if (ec) {
    res.status = 2;
    res.errors.push_back("cannot create " + cfg.out + ": " + ec.message());
    return res;
  }
  using Step = void (*)(Context&);
  const std::pair<const char*, Step> steps[] = {{"coding", run_coding}, {"delta", run_delta},
                                                {"lnic", run_lnic},     {"ncp", run_ncp},
                                                {"ldp", run_ldp},       {"renewal", run_renewal},
                                                {"dolgopyat", run_dolgopyat}, {"mixing", run_mixing}};
  bool needDelta = false;
  for (const char* e : {"delta", "ncp", "ldp", "renewal", "dolgopyat", "mixing"}) needDelta |= cfg.selected(e);
  for (const auto& [name, step] : steps) {
    const std::string n = name;
    bool wanted = cfg.selected(n) || n == "coding" || (n == "delta" && needDelta);
    if (!wanted) continue;
    bool blocked = (n != "coding" && !ctx.coding) || (n != "coding" && n != "delta" && n != "lnic" && !ctx.sd);
    if (blocked) {
      res.manifest.set("skipped." + n, std::string("upstream failure"));
      continue;
    }
    log << "running " << n << "\n" << std::flush;
    try {
      step(ctx);
      res.manifest.set("status." + n, std::string("ok"));
    } catch (const std::exception& e) {
      res.status = 1;
      res.errors.push_back(n + ": " + e.what());
      res.manifest.set("status." + n, std::string("error"));
      res.manifest.set("error." + n, std::string(e.what()));
      log << "error in " << n << ": " << e.what() << "\n";
    }
  }
  res.manifest.set("status", std::string(res.status == 0 ? "ok" : "error"));
  std::ofstream(ctx.dir / "manifest.txt") << res.manifest.text();
  res.files.push_back("manifest.txt");
  return res;
}

std::string derived_constants(const RunConfig& cfg) {
  Manifest m;
  GroupPreset p = preset_of(cfg);
  m.merge(p.catalog_text());
  m.set("preset.ping_pong_margin", p.certificate.margin);
  Coding c = build_alphabet(p, cfg.cutoff, coding_options(cfg));
  certificate_entries(m, c);
  std::string s = m.text();
  return s.substr(s.find('\n') + 1);
}

}  // namespace cusplab::cli
