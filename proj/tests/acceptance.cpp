// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cusplab/dolgopyat.hpp"
#include "cusplab/errors.hpp"
#include "cusplab/excursions.hpp"
#include "cusplab/flow.hpp"
#include "cusplab/holonomy.hpp"
#include "cusplab/sampler.hpp"
#include "cusplab/stats.hpp"
#include "cusplab/transfer.hpp"

using namespace cusplab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Shared fixtures, built lazily.
struct Fixtures {
  std::shared_ptr<Coding> real4;
  std::unique_ptr<SpectralData> real32, real48;
  std::shared_ptr<Coding> complex3;
  std::unique_ptr<SpectralData> complex12;

  const Coding& coding() {
    if (!real4) real4 = std::make_shared<Coding>(build_alphabet(load_preset("two_parabolic_real"), 1e-4));
    return *real4;
  }
  const SpectralData& sd32() {
    if (!real32) {
      coding();
      FindDeltaOptions o;
      o.degree = 32;
      real32 = std::make_unique<SpectralData>(find_delta(real4, o));
    }
    return *real32;
  }
  const SpectralData& sd48() {
    if (!real48) {
      coding();
      FindDeltaOptions o;
      o.degree = 48;
      real48 = std::make_unique<SpectralData>(find_delta(real4, o));
    }
    return *real48;
  }
  const SpectralData& sdComplex() {
    if (!complex12) {
      complex3 = std::make_shared<Coding>(build_alphabet(load_preset("two_parabolic_complex"), 1e-3));
      FindDeltaOptions o;
      o.degree = 12;
      complex12 = std::make_unique<SpectralData>(find_delta(complex3, o));
    }
    return *complex12;
  }
};

Fixtures fx;

Outcome coding_axioms() {
  const Coding& c = fx.coding();
  const CodingCertificate& cert = c.certificate;
  std::vector<std::pair<double, double>> images;
  for (const Branch& b : c.branches) images.push_back({b.boxLo.real(), b.boxHi.real()});
  std::sort(images.begin(), images.end());
  bool disjoint = true;
  for (size_t i = 1; i < images.size(); ++i) disjoint &= images[i - 1].second < images[i].first;
  const double distortionCap = cert.C2 * c.domain.diameter;
  Coding finer = build_alphabet(c.preset, 1e-5);
  bool ok = disjoint && cert.minGap > 0 && cert.lambdaHat <= 0.9 && cert.maxLogDistortion <= distortionCap &&
            cert.eps0 > 0 && finer.certificate.coverageDeficit < cert.coverageDeficit;
  return {ok, fmt("alphabet=%zu disjoint=%d lambda=%.4f logdist=%.3f<=%.3f eps0=%.3f deficit %.3g->%.3g",
                  c.branches.size(), disjoint, cert.lambdaHat, cert.maxLogDistortion, distortionCap, cert.eps0,
                  cert.coverageDeficit, finer.certificate.coverageDeficit)};
}

Outcome critical_exponent() {
  auto lat = std::make_shared<Coding>(build_alphabet(load_preset("two_parabolic_lattice"), 1e-4));
  FindDeltaOptions o;
  o.degree = 32;
  SpectralData sl = find_delta(lat, o);
  const double d32 = fx.sd32().delta, d48 = fx.sd48().delta;
  auto fine = std::make_shared<Coding>(build_alphabet(load_preset("two_parabolic_real"), 1e-5));
  SpectralData sf = find_delta(fine, o);
  double gridShift = std::abs(d48 - d32), cutShift = std::abs(sf.delta - d32);
  bool ok = std::abs(sl.delta - 1.0) <= 1e-3 && sl.residual < 1e-8 && gridShift < 1e-4 && cutShift < 1e-4;
  return {ok, fmt("lattice delta=%.6f residual=%.1e; (3,3) delta=%.10f grid shift=%.1e cutoff shift=%.1e", sl.delta,
                  sl.residual, d32, gridShift, cutShift)};
}

// Spherical conformal measure as a functional on smooth node data.
double sph_mass(const SpectralData& sd, const std::function<double(cplx)>& f) { return sd.integrate(f); }

Outcome conformality() {
  const SpectralData& sd = fx.sd32();
  const Coding& c = *sd.coding;
  const double d = sd.delta;
  auto sph = [&](cplx y) { return std::pow(1.0 + std::norm(y), -d); };
  // mu(g Delta_0) through the pullback of the density.
  auto cyl = [&](const GroupElement& g) {
    return sph_mass(sd, [&](cplx x) { return std::pow(g.derivative(x), d) * sph(g.apply(x)); });
  };
  std::vector<int> heavy(c.branches.size());
  for (size_t i = 0; i < heavy.size(); ++i) heavy[i] = (int)i;
  std::sort(heavy.begin(), heavy.end(),
            [&](int a, int b) { return c.branches[a].normHigh > c.branches[b].normHigh; });
  heavy.resize(30);
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick(0, 29);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GroupElement& gam = c.branches[heavy[pick(rng)]].g;
    const GroupElement& gE = c.branches[heavy[pick(rng)]].g;
    double lhs = cyl(gam * gE);
    auto sphDer = [&](cplx y) {
      return std::pow(gam.derivative(y) * (1.0 + std::norm(y)) / (1.0 + std::norm(gam.apply(y))), d);
    };
    // Riemann sum of the spherical derivative over depth-two sub-cylinders of E; uncovered mass at E's anchor.
    double rhs = 0.0, covered1 = 0.0;
    for (const Branch& b1 : c.branches) {
      GroupElement g1 = gE * b1.g;
      double m1 = cyl(g1);
      if (m1 < 1e-7 * lhs) {
        rhs += m1 * sphDer(g1.apply(c.domain.anchor));
        covered1 += m1;
        continue;
      }
      double covered2 = 0.0;
      for (const Branch& b2 : c.branches) {
        GroupElement g2 = g1 * b2.g;
        double m2 = cyl(g2);
        rhs += m2 * sphDer(g2.apply(c.domain.anchor));
        covered2 += m2;
      }
      rhs += (m1 - covered2) * sphDer(g1.apply(c.domain.anchor));
      covered1 += m1;
    }
    rhs += (cyl(gE) - covered1) * sphDer(gE.apply(c.domain.anchor));
    worst = std::max(worst, std::abs(lhs - rhs) / lhs);
  }
  return {worst <= 0.01, fmt("20 pairs, worst relative error %.2e", worst)};
}

Outcome normalization() {
  const SpectralData& sd = fx.sd32();
  Eigen::MatrixXd P = sd.normalized_operator({0, 0, 0}).matrix.real();
  double fixOne = (P * Eigen::VectorXd::Ones(P.rows()) - Eigen::VectorXd::Ones(P.rows())).cwiseAbs().maxCoeff();
  Eigen::RowVectorXd nu = sd.nu.transpose();
  double adj = (nu * P - nu).cwiseAbs().maxCoeff();
  return {fixOne <= 1e-8 && adj <= 1e-8, fmt("|L1-1|=%.1e |L*nu-nu|=%.1e", fixOne, adj)};
}

Outcome analyticity() {
  const SpectralData& sd = fx.sd32();
  const Coding& c = *sd.coding;
  AnalyticityReport rep = analyticity_check(c, sd.grid, sd.delta, sd.h0.cast<cplx>(), 1e-2);
  bool halves = true;
  for (double r : rep.halvingRatios) halves &= r >= 1.6 && r <= 2.4;
  const double h = 1e-5;
  double slope = (leading_lambda(c, sd.grid, sd.delta + h) - leading_lambda(c, sd.grid, sd.delta - h)) / (2 * h);
  double rel = std::abs(slope + sd.sigma0) / sd.sigma0;
  return {halves && rel <= 1e-3, fmt("halving ratios %.3f %.3f; dlambda/ds=%.6f sigma0=%.6f rel=%.1e",
                                     rep.halvingRatios[0], rep.halvingRatios[1], slope, sd.sigma0, rel)};
}

Outcome renewal() {
  const SpectralData& sd = fx.sd32();
  RenewalCheck chk = renewal_limit_check(sd, standard_bump(), sd.coding->domain.anchor, {5, 8, 11, 15});
  double e15 = chk.relError.back();
  return {e15 < 0.02 && chk.kendall < 0, fmt("rel errors %.3e %.3e %.3e %.3e; kendall=%.2f", chk.relError[0],
                                             chk.relError[1], chk.relError[2], chk.relError[3], chk.kendall)};
}

Outcome residual() {
  const SpectralData& sd = fx.sd32();
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(2.0 + 0.5 * i);
  ResidualReport tail = residual_tail(sd, 10.0, grid, 100000, 11);
  double worstZ = 0.0;
  for (double R : {2.0, 5.0}) worstZ = std::max(worstZ, std::abs(residual_identity(sd, 10.0, R, 100000, 12).zscore));
  bool ok = tail.eps > 0 && tail.r2 >= 0.95 && worstZ <= 3.0;
  return {ok, fmt("eps=%.4f r2=%.4f identity |z|max=%.2f", tail.eps, tail.r2, worstZ)};
}

Outcome ldp() {
  const SpectralData& sd = fx.sd32();
  std::vector<int> ns;
  for (int n = 10; n <= 100; n += 10) ns.push_back(n);
  double common = 1.0;
  std::string parts;
  bool clean = true;
  for (int m : {1, 2}) {
    LDPReport rep = ldp_monte_carlo(sd, {5, 10, 20}, m, ns, 3.0, 5000, 21 + m);
    common = std::min(common, rep.kappaHat);
    clean &= !rep.flagged;
    parts += fmt(" m=%d kappa=%.3f", m, rep.kappaHat);
  }
  return {common > 0 && clean, fmt("common kappa=%.3f;%s", common, parts.c_str())};
}

Outcome lnic() {
  const Coding& c = fx.coding();
  LNICCertificate a = lnic_scan(c, 2, 20), b = lnic_scan(c, 2, 40);
  double drift = std::abs(a.eps2 - b.eps2) / a.eps2;
  return {a.eps2 > 0 && drift < 0.25, fmt("eps2(20)=%.4f eps2(40)=%.4f drift=%.3f", a.eps2, b.eps2, drift)};
}

Outcome ncp() {
  const SpectralData& sd = fx.sd32();
  InvariantSampler sampler(sd);
  std::mt19937_64 rng(31);
  std::vector<cplx> xs;
  for (int i = 0; i < 400; ++i) xs.push_back(sampler.orbit(rng, 20, 0).terminal());
  NCPScan scan = ncp_window_scan(*sd.coding, xs, 100, 0.02, 0.2, 3.0, 32);
  const Coding& cc = *fx.sdComplex().coding;
  const double e0 = 0.04;
  auto prof = ncp_failure_profile(cc, {e0, e0 / 8});
  double ratio = prof[0].score / prof[1].score;
  bool ok = scan.rows.size() == 100 && scan.eta0 > 0 && ratio >= 5.0;
  return {ok, fmt("window scan rows=%zu eta0=%.3f; rank-one eta(%.3f)/eta(%.3f)=%.2f", scan.rows.size(), scan.eta0, e0,
                  e0 / 8, ratio)};
}

Eigen::VectorXcd smooth_start(const NodeGrid& grid) {
  Eigen::VectorXcd H(grid.size());
  for (int i = 0; i < H.size(); ++i) H[i] = std::exp(cplx(0.0, grid.node(i).real()));
  return H;
}

// Decay rate of explicit dense powers M^k H0 in the node nu-weighted norm, fitted over [kMax/4, kMax].
double dense_power_rate(const SpectralData& sd, const TwistParameter& tw, int kMax) {
  Eigen::MatrixXcd M = sd.normalized_operator(tw).matrix;
  Eigen::VectorXcd H = smooth_start(sd.grid);
  std::vector<double> ks, logs;
  for (int k = 1; k <= kMax; ++k) {
    H = M * H;
    double n2 = 0.0;
    for (int i = 0; i < H.size(); ++i) n2 += sd.nu[i] * std::norm(H[i]);
    if (k >= kMax / 4) ks.push_back(k), logs.push_back(0.5 * std::log(std::abs(n2)));
  }
  return -fit_line(ks, logs).slope;
}

bool decays(const std::vector<RecurrenceRow>& rows) {
  std::vector<double> xs, ys;
  for (const RecurrenceRow& r : rows)
    if (r.frequency > 0) xs.push_back(r.n), ys.push_back(std::log(r.frequency));
  if (xs.size() < 3) return false;
  return fit_line(xs, ys).slope < 0 && rows.back().high < rows.front().low;
}

Outcome dolgopyat() {
  const SpectralData& sd = fx.sd48();
  const SpectralData& oracleSd = fx.sd32();
  DolgopyatEngine eng(sd);
  bool ok = true;
  std::string parts;
  for (double b : {5.0, 10.0, 20.0}) {
    TwistParameter tw{0.0, b, 0};
    DecayReport rep = eng.spectral_decay(tw, smooth_start(sd.grid), 40);
    bool cones = !rep.cones.empty();
    for (const ConeReport& c : rep.cones) cones &= c.pass();
    bool rec = decays(eng.recurrence_frequency(rep, 8000, 41, 0.0));
    double oracle = dense_power_rate(oracleSd, tw, 40);
    double dev = std::abs(rep.eta - oracle) / oracle;
    bool row = rep.eta > 0 && rep.r2 >= 0.9 && rep.dominationViolations == 0 && cones && rec && dev <= 0.05;
    ok &= row;
    parts += fmt(" b=%g eta=%.3f r2=%.3f oracle=%.3f dom=%zu cones=%d rec=%d;", b, rep.eta, rep.r2, oracle,
                 rep.dominationViolations, cones, rec);
  }
  return {ok, parts};
}

Outcome mixing() {
  const SpectralData& sd = fx.sdComplex();
  double reference = 1e300;
  for (int n : {1, -1})
    for (double b : {5.0, 10.0, 20.0}) {
      DecayReport rep = twisted_decay(sd, {0.0, b, n}, smooth_start(sd.grid), 40);
      reference = std::min(reference, rep.eta / sd.sigma0);
    }
  std::vector<double> ts;
  for (int i = 0; i <= 20; ++i) ts.push_back(1.5 * i);
  auto phi = ObservableTable::fiber_cosine(1);
  CorrelationReport rep = correlation_estimate(sd, phi, phi, ts, 100000, 51);
  double eta = rep.oscillatory ? rep.oscEta : rep.eta;
  double ratio = eta / reference;
  bool ok = eta > 0 && ratio >= 0.5 && ratio <= 2.0;
  return {ok, fmt("correlation eta=%.4f (omega=%.3f) twisted n=+-1 rate per unit time=%.4f ratio=%.2f", eta, rep.omega,
                  reference, ratio)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"coding axioms", coding_axioms}, {"critical exponent", critical_exponent},
      {"conformality", conformality},   {"normalization and duality", normalization},
      {"analyticity", analyticity},     {"renewal theorem", renewal},
      {"residual tail", residual},      {"LDP uniformity", ldp},
      {"LNIC", lnic},                   {"NCP and rank-one failure", ncp},
      {"Dolgopyat decay", dolgopyat},   {"semiflow mixing", mixing},
  };
  int failures = 0, index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %-26s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", index, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !out.pass;
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
