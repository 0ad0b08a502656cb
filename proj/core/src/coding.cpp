#include "cusplab/coding.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cusplab/errors.hpp"
#include "cusplab/series.hpp"
#include "cusplab/stats.hpp"

namespace cusplab {

namespace {

constexpr double kMemberTol = 1e-12;

double clampd(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

bool Domain::contains(cplx x, double tol) const {
  if (std::abs(x.real()) > halfWidth + tol) return false;
  if (dim == 1) return std::abs(x.imag()) <= tol;
  return std::abs(x.imag()) <= halfHeight + tol;
}

bool Domain::in_hull(cplx x, double tol) const {
  if (x.real() < hullReLo - tol || x.real() > hullReHi + tol) return false;
  if (dim == 2 && (x.imag() < hullImLo - tol || x.imag() > hullImHi + tol)) return false;
  return true;
}

std::vector<cplx> Domain::boundary(int perSide) const {
  if (dim == 1) return {cplx(-halfWidth, 0.0), cplx(halfWidth, 0.0)};
  std::vector<cplx> pts;
  pts.reserve(4 * perSide);
  for (int i = 0; i < perSide; ++i) {
    double s = double(i) / perSide;
    double x = -halfWidth + 2 * halfWidth * s, y = -halfHeight + 2 * halfHeight * s;
    pts.emplace_back(x, -halfHeight);
    pts.emplace_back(halfWidth, y);
    pts.emplace_back(-x, halfHeight);
    pts.emplace_back(-halfWidth, -y);
  }
  return pts;
}

GroupElement Coding::letter_element(double k, double m) const {
  const cplx kc = k * preset.c;
  const double mm = m * preset.mu;
  return GroupElement(1.0, mm, kc, kc * mm + 1.0, preset.field());
}

GroupElement Coding::prefix_element(double n, int side) const {
  const double t = n;
  if (side > 0) return GroupElement(1 - 2 * t, 2 * t, -2 * t, 1 + 2 * t, Field::Real);
  return GroupElement(1 - 2 * t, -2 * t, 2 * t, 1 + 2 * t, Field::Real);
}

GroupElement Coding::element(const Letter& l) const {
  GroupElement g = letter_element(l.k, l.m);
  if (l.n > 0) return prefix_element(l.n, l.side) * g;
  return g;
}

std::string Coding::word_of(const Letter& l) const {
  std::ostringstream os;
  for (int i = 0; i < l.n; ++i) os << (l.side > 0 ? "T1.S-1." : "T-1.S1.");
  os << "T" << l.k << ".S" << l.m;
  return os.str();
}

double Coding::norm_high(const GroupElement& g) const {
  if (g.c == 0.0) return 1.0 / std::norm(g.d);
  if (domain.dim == 1) {
    double lo = (g.c * -domain.halfWidth + g.d).real();
    double hi = (g.c * domain.halfWidth + g.d).real();
    if (lo * hi <= 0) return std::numeric_limits<double>::infinity();
    double m = std::min(std::abs(lo), std::abs(hi));
    return 1.0 / (m * m);
  }
  cplx pole = -g.d / g.c;
  cplx q(clampd(pole.real(), -domain.halfWidth, domain.halfWidth),
         clampd(pole.imag(), -domain.halfHeight, domain.halfHeight));
  double dist = std::abs(q - pole);
  if (dist == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::norm(g.c * dist);
}

double Coding::norm_low(const GroupElement& g) const {
  if (g.c == 0.0) return 1.0 / std::norm(g.d);
  if (domain.dim == 1) {
    double lo = std::abs((g.c * -domain.halfWidth + g.d).real());
    double hi = std::abs((g.c * domain.halfWidth + g.d).real());
    double m = std::max(lo, hi);
    return 1.0 / (m * m);
  }
  cplx pole = -g.d / g.c;
  double far = 0.0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      far = std::max(far, std::abs(cplx(sx * domain.halfWidth, sy * domain.halfHeight) - pole));
  return 1.0 / std::norm(g.c * far);
}

std::pair<cplx, cplx> Coding::image_box(const GroupElement& g) const {
  double rlo = 1e300, rhi = -1e300, ilo = 1e300, ihi = -1e300;
  for (cplx p : domain.boundary(32)) {
    cplx q = g.apply(p);
    rlo = std::min(rlo, q.real());
    rhi = std::max(rhi, q.real());
    ilo = std::min(ilo, q.imag());
    ihi = std::max(ihi, q.imag());
  }
  if (domain.dim == 1) ilo = ihi = 0.0;
  return {cplx(rlo, ilo), cplx(rhi, ihi)};
}

double Coding::image_diameter(const GroupElement& g) const {
  // |g u - g v| = |u - v| / |(cu + d)(cv + d)| avoids cancellation on tiny images.
  auto gap = [&](cplx u, cplx v) { return std::abs(u - v) / std::abs(g.denominator(u) * g.denominator(v)); };
  if (domain.dim == 1) return gap(-domain.halfWidth, domain.halfWidth);
  std::vector<cplx> pts = domain.boundary(24);
  double best = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, gap(pts[i], pts[j]));
  return best;
}

double Coding::image_measure(const GroupElement& g) const {
  if (domain.dim == 1) return image_diameter(g);
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const double hw = domain.halfWidth, hh = domain.halfHeight;
  auto inner = [&](double x) {
    return Rule::integrate([&](double y) { return std::pow(g.derivative(cplx(x, y)), 2); }, -hh, hh);
  };
  return Rule::integrate(inner, -hw, hw);
}

bool Coding::image_contained(const GroupElement& g, double* margin) const {
  double worst = std::numeric_limits<double>::infinity();
  for (cplx p : domain.boundary(32)) {
    cplx q = g.apply(p);
    double mx = domain.halfWidth - std::abs(q.real());
    double my = domain.dim == 2 ? domain.halfHeight - std::abs(q.imag()) : mx;
    worst = std::min({worst, mx, my});
  }
  if (margin) *margin = worst;
  return worst >= -kMemberTol;
}

int Coding::find(const Letter& l) const {
  auto it = index.find(l);
  return it == index.end() ? -1 : it->second;
}

StepResult Coding::decode(cplx x) const {
  const cplx c = preset.c;
  auto base = [&](cplx z, int& k, int& m, cplx& y) {
    if (std::abs(z) < 1e-300) throw OrbitEscape("point at the parabolic fixed point");
    cplx inv = 1.0 / z;
    k = static_cast<int>(std::lround((std::conj(c) * inv).real() / std::norm(c)));
    if (k == 0) throw OrbitEscape("point outside every branch image");
    cplx w = z / (-double(k) * c * z + 1.0);
    m = static_cast<int>(std::lround(w.real() / preset.mu));
    if (m == 0) throw OrbitEscape("point outside every branch image");
    y = w - double(m) * preset.mu;
  };
  StepResult r;
  int k, m;
  cplx y;
  base(x, k, m, y);
  Letter l{k, m, 0, 0};
  if (preset.is_lattice() && ((k == 1 && m == -1) || (k == -1 && m == 1))) {
    int side = (k == 1) ? 1 : -1;
    GroupElement inv = prefix_element(1, side).inverse();
    cplx z = x;
    int n = 0;
    while (true) {
      z = inv.apply(z);
      ++n;
      if (n > 1000000) throw OrbitEscape("orbit trapped at a parabolic point");
      base(z, k, m, y);
      bool again = (side > 0) ? (k == 1 && m == -1) : (k == -1 && m == 1);
      if (!again) break;
    }
    l = Letter{k, m, n, side};
  }
  if (!domain.contains(y, kMemberTol)) throw OrbitEscape("point lies in a gap between branch images");
  r.letter = l;
  r.g = element(l);
  r.image = y;
  r.ret = -std::log(r.g.derivative(y));
  r.branch = find(l);
  return r;
}

namespace {

struct TailCache {
  std::map<int, TailRule> rules;
  cplx sigma;
  int Q;
  const TailRule& get(int K) {
    auto it = rules.find(K);
    if (it != rules.end()) return it->second;
    return rules.emplace(K, make_tail_rule(K, sigma, Q)).first->second;
  }
};

bool excluded(const Coding::Plan& plan, int k, int m) {
  for (auto& e : plan.excluded)
    if (e.first == k && e.second == m) return true;
  return false;
}

void emit_plan(const Coding& coding, const Coding::Plan& plan, const GroupElement& prefix, bool prefixInteger,
               int n, int side, cplx c0, cplx dc0, TailCache& tails, bool compensate, Quadrature& out,
               int& groups, int forced) {
  int group = forced;
  auto next = [&] { if (forced < 0) group = groups++; };
  auto push = [&](const GroupElement& g, cplx coef, cplx dcoef, bool virt, int k, int m) {
    QuadEntry e;
    e.group = virt ? group : -1;
    e.g = prefix * g;
    e.coef = coef;
    e.dcoef = dcoef;
    e.isVirtual = virt;
    if (!virt) e.branch = coding.find(Letter{k, m, n, side});
    out.push_back(e);
  };
  for (const auto& row : plan.rows) {
    for (int kk = 1; kk <= row.K; ++kk) {
      int k = row.sk * kk;
      if (excluded(plan, k, row.m)) continue;
      push(coding.letter_element(k, row.m), c0, dc0, !prefixInteger, k, row.m);
    }
    if (!compensate) continue;
    const TailRule& rule = tails.get(row.K);
    next();
    for (size_t j = 0; j < rule.nodes.size(); ++j) {
      push(coding.letter_element(row.sk * rule.nodes[j], row.m), c0 * rule.coef[j],
           dc0 * rule.coef[j] + c0 * rule.dcoef[j], true, 0, 0);
    }
  }
  if (!compensate) return;
  const TailRule& mrule = tails.get(plan.M);
  const int Kin = coding.options.minExplicit;
  const TailRule& krule = tails.get(Kin);
  for (int sm : {1, -1}) {
    for (size_t i = 0; i < mrule.nodes.size(); ++i) {
      double m = sm * mrule.nodes[i];
      cplx cm = c0 * mrule.coef[i];
      cplx dcm = dc0 * mrule.coef[i] + c0 * mrule.dcoef[i];
      for (int sk : {1, -1}) {
        next();
        for (int kk = 1; kk <= Kin; ++kk) push(coding.letter_element(sk * kk, m), cm, dcm, true, 0, 0);
        for (size_t j = 0; j < krule.nodes.size(); ++j)
          push(coding.letter_element(sk * krule.nodes[j], m), cm * krule.coef[j],
               dcm * krule.coef[j] + cm * krule.dcoef[j], true, 0, 0);
      }
    }
  }
}

}  // namespace

Quadrature Coding::quadrature(cplx sigma) const { return quadrature(sigma, options.tailNodes); }

Quadrature Coding::quadrature(cplx sigma, int nQ) const {
  Quadrature out;
  TailCache tails{{}, sigma, nQ};
  const bool comp = options.compensate;
  int groups = 0;
  const GroupElement id = GroupElement::identity(preset.field());
  for (const auto& plan : plans) {
    GroupElement prefix = plan.n > 0 ? prefix_element(plan.n, plan.side) : id;
    emit_plan(*this, plan, prefix, true, plan.n, plan.side, 1.0, 0.0, tails, comp, out, groups, -1);
  }
  if (preset.is_lattice() && comp) {
    const TailRule& nrule = tails.get(prefixExplicit);
    for (int side : {1, -1}) {
      const Plan& inner = side > 0 ? tailPlanPlus : tailPlanMinus;
      const int sideGroup = groups++;
      for (size_t j = 0; j < nrule.nodes.size(); ++j) {
        emit_plan(*this, inner, prefix_element(nrule.nodes[j], side), false, 0, side, nrule.coef[j],
                  nrule.dcoef[j], tails, comp, out, groups, sideGroup);
      }
    }
  }
  return out;
}

namespace {

// Explicit rows for a prefix: every (k, m) with normHigh >= cutoff, at least minExplicit in each direction.
Coding::Plan make_plan(const Coding& coding, const GroupElement& prefix, int n, int side,
                       std::vector<std::pair<int, int>> excl, double cutoff, bool* anyMember) {
  Coding::Plan plan;
  plan.n = n;
  plan.side = side;
  plan.excluded = std::move(excl);
  const int minE = coding.options.minExplicit;
  auto passes = [&](int k, int m) {
    if (excluded(plan, k, m)) return false;
    return coding.norm_high(prefix * coding.letter_element(k, m)) >= cutoff;
  };
  bool any = false;
  int M = 0, misses = 0;
  for (int mm = 1; misses < 3; ++mm) {
    bool hit = false;
    for (int sm : {1, -1})
      for (int sk : {1, -1})
        for (int kk = 1; kk <= 3; ++kk) hit = hit || passes(sk * kk, sm * mm);
    if (hit) {
      M = mm;
      misses = 0;
    } else {
      ++misses;
    }
  }
  plan.M = std::max(M, minE);
  for (int sm : {1, -1})
    for (int mm = 1; mm <= plan.M; ++mm)
      for (int sk : {1, -1}) {
        int m = sm * mm, K = 0, fails = 0;
        for (int kk = 1; fails < 3; ++kk) {
          if (passes(sk * kk, m)) {
            K = kk;
            fails = 0;
          } else if (kk > 2) {
            ++fails;
          }
        }
        any = any || K > 0;
        plan.rows.push_back({m, sk, std::max(K, minE)});
      }
  if (anyMember) *anyMember = any;
  return plan;
}

}  // namespace

Coding build_alphabet(const GroupPreset& preset, double cutoff, const CodingOptions& options) {
  if (!(cutoff > 0.0)) throw EmptyCoding("cutoff must be positive");
  Coding cd;
  cd.preset = preset;
  cd.options = options;
  Domain& dom = cd.domain;
  dom.dim = preset.dim;
  dom.gap = preset.is_lattice() ? 0.0 : options.gapFraction * preset.mu;
  dom.halfWidth = preset.mu / 2.0 - dom.gap;
  if (preset.dim == 2) {
    double reach = 0.0;
    for (const auto& ci : preset.certificate.circles) reach = std::max(reach, std::abs(ci.center.imag()) + ci.radius);
    dom.halfHeight = 1.125 * reach;
    dom.diameter = 2.0 * std::hypot(dom.halfWidth, dom.halfHeight);
  } else {
    dom.diameter = 2.0 * dom.halfWidth;
  }

  // Explicit structure.
  const GroupElement id = GroupElement::identity(preset.field());
  if (preset.is_lattice()) {
    cd.plans.push_back(make_plan(cd, id, 0, 0, {{1, -1}, {-1, 1}}, cutoff, nullptr));
    int lastHit = 0;
    std::vector<Coding::Plan> prefixed;
    for (int n = 1;; ++n) {
      bool anyHit = false;
      for (int side : {1, -1}) {
        bool hit = false;
        auto excl = side > 0 ? std::vector<std::pair<int, int>>{{1, -1}} : std::vector<std::pair<int, int>>{{-1, 1}};
        prefixed.push_back(make_plan(cd, cd.prefix_element(n, side), n, side, excl, cutoff, &hit));
        anyHit = anyHit || hit;
      }
      if (anyHit) lastHit = n;
      if (n >= std::max(lastHit + 2, options.minExplicit)) break;
    }
    cd.prefixExplicit = std::max(lastHit, options.minExplicit);
    for (auto& p : prefixed)
      if (p.n <= cd.prefixExplicit) cd.plans.push_back(p);
    auto minimal = [&](int side) {
      Coding::Plan p;
      p.n = 0;
      p.side = side;
      p.M = options.minExplicit;
      p.excluded = side > 0 ? std::vector<std::pair<int, int>>{{1, -1}} : std::vector<std::pair<int, int>>{{-1, 1}};
      for (int sm : {1, -1})
        for (int mm = 1; mm <= p.M; ++mm)
          for (int sk : {1, -1}) p.rows.push_back({sm * mm, sk, options.minExplicit});
      return p;
    };
    cd.tailPlanPlus = minimal(1);
    cd.tailPlanMinus = minimal(-1);
  } else {
    cd.plans.push_back(make_plan(cd, id, 0, 0, {}, cutoff, nullptr));
  }

  // Alphabet: explicit integer entries passing the validity filters.
  double worstMargin = std::numeric_limits<double>::infinity();
  for (const auto& plan : cd.plans) {
    for (const auto& row : plan.rows)
      for (int kk = 1; kk <= row.K; ++kk) {
        Letter l{row.sk * kk, row.m, plan.n, plan.side};
        if (excluded(plan, l.k, l.m)) continue;
        GroupElement g = cd.element(l);
        double nh = cd.norm_high(g);
        if (!(nh >= cutoff) || !(nh < 1.0)) continue;
        double margin;
        if (!cd.image_contained(g, &margin)) continue;
        worstMargin = std::min(worstMargin, margin);
        Branch b;
        b.letter = l;
        b.g = g;
        b.word = cd.word_of(l);
        b.normHigh = nh;
        b.normLow = cd.norm_low(g);
        cd.branches.push_back(b);
      }
  }
  if (cd.branches.empty()) throw EmptyCoding("no branch reaches the cutoff " + format_double(cutoff, 6));
  std::sort(cd.branches.begin(), cd.branches.end(), [](const Branch& a, const Branch& b) {
    auto key = [](const Letter& l) { return std::array<int, 6>{l.n, -l.side, std::abs(l.m), -l.m, std::abs(l.k), -l.k}; };
    return key(a.letter) < key(b.letter);
  });
  for (size_t i = 0; i < cd.branches.size(); ++i) {
    auto& b = cd.branches[i];
    auto box = cd.image_box(b.g);
    b.boxLo = box.first;
    b.boxHi = box.second;
    b.imageDiameter = cd.image_diameter(b.g);
    cd.index[b.letter] = static_cast<int>(i);
  }

  // Disjointness.
  CodingCertificate& cert = cd.certificate;
  cert.cutoff = cutoff;
  cert.alphabetSize = cd.branches.size();
  cert.containmentMargin = worstMargin;
  {
    std::vector<int> order(cd.branches.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return cd.branches[a].boxLo.real() < cd.branches[b].boxLo.real(); });
    double minGap = std::numeric_limits<double>::infinity();
    if (dom.dim == 1) {
      for (size_t i = 0; i + 1 < order.size(); ++i) {
        const auto& A = cd.branches[order[i]];
        const auto& B = cd.branches[order[i + 1]];
        double gap = B.boxLo.real() - A.boxHi.real();
        minGap = std::min(minGap, gap);
        if (gap < -kMemberTol) throw CodingDefect("branch images overlap", A.word, B.word);
      }
    } else {
      auto inside = [&](const Branch& b, cplx p) { return cd.domain.contains(b.g.inverse().apply(p), -1e-12); };
      for (size_t i = 0; i < order.size(); ++i) {
        const auto& A = cd.branches[order[i]];
        for (size_t j = i + 1; j < order.size(); ++j) {
          const auto& B = cd.branches[order[j]];
          if (B.boxLo.real() > A.boxHi.real()) break;
          if (B.boxLo.imag() > A.boxHi.imag() || A.boxLo.imag() > B.boxHi.imag()) continue;
          for (cplx p : cd.domain.boundary(16)) {
            if (inside(B, A.g.apply(p)) || inside(A, B.g.apply(p)))
              throw CodingDefect("branch images overlap", A.word, B.word);
          }
          if (inside(B, A.g.apply(0.0)) || inside(A, B.g.apply(0.0)))
            throw CodingDefect("branch images nested", A.word, B.word);
        }
      }
      minGap = 0.0;
    }
    cert.minGap = minGap;
  }

  // Hull of the images.
  {
    double rlo = 1e300, rhi = -1e300, ilo = 1e300, ihi = -1e300;
    for (const auto& b : cd.branches) {
      rlo = std::min(rlo, b.boxLo.real());
      rhi = std::max(rhi, b.boxHi.real());
      ilo = std::min(ilo, b.boxLo.imag());
      ihi = std::max(ihi, b.boxHi.imag());
    }
    double padR = options.hullPad * (rhi - rlo);
    dom.hullReLo = std::max(-dom.halfWidth, rlo - padR);
    dom.hullReHi = std::min(dom.halfWidth, rhi + padR);
    if (dom.dim == 2) {
      double padI = options.hullPad * (ihi - ilo);
      dom.hullImLo = std::max(-dom.halfHeight, ilo - padI);
      dom.hullImHi = std::min(dom.halfHeight, ihi + padI);
    }
  }

  // Contraction and distortion constants.
  cert.lambdaHat = 0.0;
  cert.C1 = 0.0;
  for (const auto& b : cd.branches) {
    cert.lambdaHat = std::max(cert.lambdaHat, b.normHigh);
    cert.maxLogDistortion = std::max(cert.maxLogDistortion, std::log(b.normHigh / b.normLow));
    // 2|c|/|cx+d| is maximal where |cx+d| is minimal.
    cert.C1 = std::max(cert.C1, 2.0 * std::abs(b.g.c) * std::sqrt(b.normHigh));
  }
  cert.C1 = std::max(cert.C1, 2.0 / (preset.mu / 2.0 + dom.gap));
  cert.C2 = cert.C1 / (1.0 - cert.lambdaHat);
  cert.Ccyl = std::exp(cert.C2 * dom.diameter);
  dom.C_Delta0 = cert.Ccyl * std::max(dom.diameter, 1.0 / dom.diameter);

  // Anchor: attracting fixed point of the strongest branch.
  {
    const Branch* best = &cd.branches.front();
    for (const auto& b : cd.branches)
      if (b.normHigh > best->normHigh) best = &b;
    cplx x = 0.0;
    for (int i = 0; i < 400; ++i) x = best->g.apply(x);
    dom.anchor = x;
  }

  // Coverage deficit: share of the full image measure missed by the alphabet.
  {
    Quadrature q = cd.quadrature(1.0);
    double total = 0.0, explicitPart = 0.0;
    for (const auto& e : q) total += (e.coef * cd.image_measure(e.g)).real();
    for (const auto& b : cd.branches) explicitPart += cd.image_measure(b.g);
    cert.coverageDeficit = std::max(0.0, (total - explicitPart) / total);
  }

  refit_tail(cd, options.tailExponent);
  return cd;
}

void refit_tail(Coding& cd, double exponent) {
  CodingCertificate& cert = cd.certificate;
  cert.tailExponent = exponent;
  Quadrature q = cd.quadrature(exponent);
  double total = 0.0;
  for (const auto& e : q) total += (e.coef * std::pow(cd.norm_high(e.g), exponent)).real();
  std::vector<double> lt, ls;
  cert.tailTable.clear();
  const double lo = std::log(10.0 * cert.cutoff), hi = std::log(0.5 * cert.lambdaHat);
  const int pts = 10;
  for (int i = 0; i < pts && hi > lo; ++i) {
    double theta = std::exp(lo + (hi - lo) * i / (pts - 1));
    double above = 0.0;
    for (const auto& b : cd.branches)
      if (b.normHigh >= theta) above += std::pow(b.normHigh, exponent);
    double s = total - above;
    cert.tailTable.push_back({theta, s});
    if (s > 0) {
      lt.push_back(std::log(theta));
      ls.push_back(std::log(s));
    }
  }
  LinearFit fit = fit_line(lt, ls);
  cert.eps0 = fit.slope;
  cert.eps0R2 = fit.r2;
}

StepResult expanding_step(const Coding& coding, cplx x) {
  StepResult r = coding.decode(x);
  if (r.branch < 0) throw OrbitEscape("point lies in a branch image below the cutoff");
  return r;
}

double birkhoff_return(const Coding& coding, cplx x, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    StepResult r = expanding_step(coding, x);
    total += r.ret;
    x = r.image;
  }
  return total;
}

std::vector<StepResult> itinerary(const Coding& coding, cplx x, int depth, bool restrict) {
  std::vector<StepResult> out;
  for (int i = 0; i < depth; ++i) {
    StepResult r = restrict ? expanding_step(coding, x) : coding.decode(x);
    out.push_back(r);
    x = r.image;
  }
  return out;
}

double cylinder_metric_D(const Coding& coding, cplx x, cplx y, int maxDepth) {
  if (x == y) return 0.0;
  GroupElement g = GroupElement::identity(coding.preset.field());
  double diam = coding.domain.diameter;
  cplx a = x, b = y;
  for (int depth = 0; depth < maxDepth; ++depth) {
    StepResult ra, rb;
    try {
      ra = coding.decode(a);
      rb = coding.decode(b);
    } catch (const OrbitEscape&) {
      break;
    }
    if (!(ra.letter == rb.letter)) break;
    g = g * ra.g;
    diam = coding.image_diameter(g);
    a = ra.image;
    b = rb.image;
  }
  return diam;
}

bool window_membership_letters(const Coding& coding, const Letter* letters, int count, double t, double R) {
  const double upper = std::exp(R - t), lower = std::exp(-R - t);
  GroupElement g = GroupElement::identity(coding.preset.field());
  double diam = coding.domain.diameter;
  int depth = 0;
  while (diam > upper) {
    if (depth >= count) throw OrbitEscape("itinerary too short for the window scale");
    g = g * coding.element(letters[depth++]);
    diam = coding.image_diameter(g);
  }
  return diam >= lower;
}

bool window_membership(const Coding& coding, cplx x, double t, double R, int maxDepth) {
  std::vector<Letter> letters;
  const double upper = std::exp(R - t);
  GroupElement g = GroupElement::identity(coding.preset.field());
  double diam = coding.domain.diameter;
  cplx z = x;
  while (diam > upper) {
    if ((int)letters.size() >= maxDepth) throw OrbitEscape("itinerary too short for the window scale");
    StepResult r = coding.decode(z);
    letters.push_back(r.letter);
    g = g * r.g;
    diam = coding.image_diameter(g);
    z = r.image;
  }
  return diam >= std::exp(-R - t);
}

Cylinder make_cylinder(const Coding& coding, const std::vector<int>& word) {
  Cylinder c;
  c.word = word;
  c.g = GroupElement::identity(coding.preset.field());
  for (int i : word) c.g = c.g * coding.branches.at(i).g;
  c.diameter = word.empty() ? coding.domain.diameter : coding.image_diameter(c.g);
  return c;
}

std::string alphabet_dump(const Coding& coding) {
  std::ostringstream os;
  const bool complexField = coding.preset.dim == 2;
  os << "# word";
  if (complexField) {
    os << " a.re a.im b.re b.im c.re c.im d.re d.im";
  } else {
    os << " a b c d";
  }
  os << " normLow normHigh\n";
  for (const auto& b : coding.branches) {
    os << b.word;
    for (cplx v : {b.g.a, b.g.b, b.g.c, b.g.d}) {
      os << " " << format_double(v.real());
      if (complexField) os << " " << format_double(v.imag());
    }
    os << " " << format_double(b.normLow) << " " << format_double(b.normHigh) << "\n";
  }
  return os.str();
}

}  // namespace cusplab
