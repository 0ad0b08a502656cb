#include "cusplab/holonomy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cusplab/errors.hpp"
#include "cusplab/stats.hpp"

namespace cusplab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double signed_angle(double th) {
  double a = std::remainder(th, kTwoPi);
  return a <= -std::numbers::pi ? a + kTwoPi : a;
}
}  // namespace

double wrap_angle(double theta) {
  double a = std::fmod(theta, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

AMElement AMElement::operator*(const AMElement& o) const { return {t + o.t, wrap_angle(theta + o.theta)}; }
AMElement AMElement::inverse() const { return {-t, wrap_angle(-theta)}; }
double AMElement::signed_theta() const { return signed_angle(theta); }

double am_distance(const AMElement& g, const AMElement& h) {
  double dt = g.t - h.t, dth = signed_angle(g.theta - h.theta);
  return std::sqrt(dt * dt + dth * dth);
}

AMElement generalized_holonomy(const Coding& coding, const std::vector<Letter>& forward, cplx y) {
  AMElement acc;
  const bool fiber = coding.domain.dim == 2;
  for (size_t i = 0; i < forward.size(); ++i) {
    GroupElement g = coding.element(forward[i]);
    cplx x = g.inverse().apply(y);
    if (!coding.domain.contains(x, 1e-9))
      throw ItineraryError("letter " + coding.word_of(forward[i]) + " is not admissible at step " + std::to_string(i));
    cplx den = g.c * x + g.d;
    acc = acc * AMElement{std::log(std::norm(den)), fiber ? wrap_angle(2.0 * std::arg(den)) : 0.0};
    y = x;
  }
  return acc;
}

GroupElement word_element(const Coding& coding, const std::vector<int>& word) {
  GroupElement g = GroupElement::identity(coding.preset.field());
  for (int b : word) {
    if (b < 0 || b >= (int)coding.branches.size()) throw ItineraryError("branch index out of range");
    g = g * coding.branches[b].g;
  }
  return g;
}

AMElement holonomy_of_word(const Coding& coding, const std::vector<int>& word, cplx x) {
  if (!coding.domain.contains(x, 1e-9)) throw ItineraryError("base point outside the fundamental domain");
  GroupElement g = word_element(coding, word);
  cplx den = g.c * x + g.d;
  return {std::log(std::norm(den)), coding.domain.dim == 2 ? wrap_angle(2.0 * std::arg(den)) : 0.0};
}

AMElement bp_map(const Coding& coding, const std::vector<int>& alpha, const std::vector<int>& beta, cplx x, cplx y) {
  AMElement ax = holonomy_of_word(coding, alpha, x), ay = holonomy_of_word(coding, alpha, y);
  AMElement bx = holonomy_of_word(coding, beta, x), by = holonomy_of_word(coding, beta, y);
  return ax.inverse() * ay * by.inverse() * bx;
}

namespace {
cplx am_as_complex(const AMElement& g) { return {g.t, signed_angle(g.theta)}; }
}  // namespace

BPDerivative bp_derivative(const Coding& coding, const std::vector<int>& alpha, const std::vector<int>& beta,
                           cplx x, cplx z, double step) {
  auto diff = [&](double h) {
    cplx p = am_as_complex(bp_map(coding, alpha, beta, x, x + h * z));
    cplx m = am_as_complex(bp_map(coding, alpha, beta, x, x - h * z));
    return (p - m) / (2.0 * h);
  };
  BPDerivative d;
  d.step = step;
  d.value = diff(step);
  cplx half = diff(step / 2.0);
  d.richardson = (4.0 * half - d.value) / 3.0;
  return d;
}

cplx bp_derivative_exact(const Coding& coding, const std::vector<int>& alpha, const std::vector<int>& beta, cplx x,
                         cplx z) {
  GroupElement a = word_element(coding, alpha), b = word_element(coding, beta);
  cplx v = 2.0 * (a.c / (a.c * x + a.d) - b.c / (b.c * x + b.d)) * z;
  if (coding.domain.dim == 1) v = v.real();
  return v;
}

// ---------------------------------------------------------------- LNIC

std::vector<cplx> lnic_grid(const Coding& coding, int n) {
  const Domain& D = coding.domain;
  std::vector<cplx> pts;
  if (D.dim == 1) {
    int N = n * n;
    for (int i = 0; i <= N; ++i) pts.emplace_back(D.hullReLo + (D.hullReHi - D.hullReLo) * i / N, 0.0);
  } else {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        pts.emplace_back(D.hullReLo + (D.hullReHi - D.hullReLo) * i / n, D.hullImLo + (D.hullImHi - D.hullImLo) * j / n);
  }
  return pts;
}

std::vector<std::vector<int>> lnic_candidates(const Coding& coding, int m, int letters) {
  std::vector<int> order(coding.branches.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return coding.branches[a].normHigh > coding.branches[b].normHigh; });
  order.resize(std::min<size_t>(order.size(), letters));
  std::vector<std::vector<int>> words{{}};
  for (int step = 0; step < m; ++step) {
    std::vector<std::vector<int>> next;
    for (auto& w : words)
      for (int b : order) {
        auto v = w;
        v.push_back(b);
        next.push_back(v);
      }
    words.swap(next);
  }
  return words;
}

namespace {

// Real 2x2 Jacobian of y -> G^m(word y) at x by central differences (1x1 block in d = 1).
struct Jac {
  double a = 0, b = 0, c = 0, d = 0;  // rows: (t, theta); columns: (Re, Im)
};

Jac word_jacobian(const Coding& coding, const std::vector<int>& word, cplx x, double h) {
  auto F = [&](cplx y) { return holonomy_of_word(coding, word, y); };
  auto col = [&](cplx dir) {
    AMElement p = F(x + h * dir), m = F(x - h * dir);
    return cplx((p.t - m.t) / (2 * h), signed_angle(p.theta - m.theta) / (2 * h));
  };
  Jac J;
  cplx c1 = col(1.0);
  J.a = c1.real();
  J.c = c1.imag();
  if (coding.domain.dim == 2) {
    cplx c2 = col(cplx(0, 1));
    J.b = c2.real();
    J.d = c2.imag();
  }
  return J;
}

// min over omega of max_j |J_j^T omega|; exact in d = 1, angle scan otherwise.
double pairing_value(const std::vector<Jac>& js, int dim, int angles) {
  if (dim == 1) {
    double best = 0.0;
    for (auto& j : js) best = std::max(best, std::abs(j.a));
    return best;
  }
  double worst = 1e300;
  for (int k = 0; k < angles; ++k) {
    double ph = std::numbers::pi * k / angles;
    double w1 = std::cos(ph), w2 = std::sin(ph);
    double best = 0.0;
    for (auto& j : js) {
      double u = j.a * w1 + j.c * w2, v = j.b * w1 + j.d * w2;
      best = std::max(best, std::hypot(u, v));
    }
    worst = std::min(worst, best);
  }
  return worst;
}

double op_norm(const Jac& j) {
  double s = j.a * j.a + j.b * j.b + j.c * j.c + j.d * j.d;
  double det = j.a * j.d - j.b * j.c;
  return std::sqrt(0.5 * (s + std::sqrt(std::max(s * s - 4 * det * det, 0.0))));
}

Jac minus(const Jac& p, const Jac& q) { return {p.a - q.a, p.b - q.b, p.c - q.c, p.d - q.d}; }

}  // namespace

double lnic_value(const Coding& coding, const std::vector<int>& alpha0, const std::vector<std::vector<int>>& alphas,
                  const std::vector<cplx>& grid, cplx* worst) {
  double h = 1e-5 * coding.domain.diameter, best = 1e300;
  int angles = std::max<int>(std::sqrt((double)grid.size()), 8);
  for (cplx x : grid) {
    Jac j0 = word_jacobian(coding, alpha0, x, h);
    std::vector<Jac> js;
    for (auto& a : alphas) js.push_back(minus(j0, word_jacobian(coding, a, x, h)));
    double v = pairing_value(js, coding.domain.dim, angles);
    if (v < best) {
      best = v;
      if (worst) *worst = x;
    }
  }
  return best;
}

LNICCertificate lnic_scan(const Coding& coding, int m, int gridSize, int j0, int letters, int workers) {
  if (m < 1) throw ConfigError("lnic block length must be >= 1");
  if (j0 <= 0) j0 = coding.domain.dim == 1 ? 2 : 3;
  auto cands = lnic_candidates(coding, m, letters);
  if ((int)cands.size() < j0 + 1) throw ConfigError("not enough candidate words for the LNIC scan");
  auto grid = lnic_grid(coding, gridSize);
  const int dim = coding.domain.dim;
  const int angles = std::max(gridSize, 8);
  const double h = 1e-5 * coding.domain.diameter;
  const size_t C = cands.size(), G = grid.size();

  std::vector<Jac> jac(C * G);
  parallel_chunks(C, workers, [&](int c) {
    for (size_t g = 0; g < G; ++g) jac[c * G + g] = word_jacobian(coding, cands[c], grid[g], h);
  });

  // Greedy selection per alpha0; the value of a selection is min_x of the pairing.
  std::vector<double> bestVal(C, -1.0);
  std::vector<std::vector<int>> bestSel(C);
  parallel_chunks(C, workers, [&](int a0) {
    std::vector<int> sel;
    double val = 0.0;
    for (int step = 0; step < j0; ++step) {
      int pick = -1;
      double pickVal = -1.0;
      for (size_t c = 0; c < C; ++c) {
        if ((int)c == a0 || std::find(sel.begin(), sel.end(), (int)c) != sel.end()) continue;
        double v = 1e300;
        for (size_t g = 0; g < G && v > pickVal; ++g) {
          std::vector<Jac> js;
          for (int s : sel) js.push_back(minus(jac[a0 * G + g], jac[s * G + g]));
          js.push_back(minus(jac[a0 * G + g], jac[c * G + g]));
          v = std::min(v, pairing_value(js, dim, angles));
        }
        if (v > pickVal) pickVal = v, pick = c;
      }
      sel.push_back(pick);
      val = pickVal;
    }
    bestVal[a0] = val;
    bestSel[a0] = sel;
  });
  size_t a0 = std::max_element(bestVal.begin(), bestVal.end()) - bestVal.begin();

  LNICCertificate cert;
  cert.m = m;
  cert.gridSize = gridSize;
  cert.j0 = j0;
  cert.alpha0 = cands[a0];
  for (int s : bestSel[a0]) cert.alphas.push_back(cands[s]);
  cert.eps2 = bestVal[a0];
  cert.scannedPoints = G;
  double worstV = 1e300;
  for (size_t g = 0; g < G; ++g) {
    std::vector<Jac> js;
    for (int s : bestSel[a0]) {
      js.push_back(minus(jac[a0 * G + g], jac[s * G + g]));
      cert.C_BP = std::max(cert.C_BP, op_norm(js.back()));
    }
    double v = pairing_value(js, dim, angles);
    if (v < worstV) worstV = v, cert.worstPoint = grid[g];
  }
  cert.degenerate = !(cert.eps2 > 1e-8 * std::max(cert.C_BP, 1.0));
  return cert;
}

// ---------------------------------------------------------------- NCP

NCPWitness ncp_witness(const std::vector<cplx>& samples, cplx x, cplx w, double eps) {
  if (!(eps > 0 && eps < 1)) throw ConfigError("ncp scale must lie in (0, 1)");
  cplx u = w / std::abs(w);
  NCPWitness best;
  bool found = false;
  for (cplx y : samples) {
    cplx d = y - x;
    double r = std::abs(d);
    if (r >= eps || r == 0.0) continue;
    ++best.inBall;
    double s = std::abs((std::conj(u) * d).real()) / eps;
    if (!found || s > best.score) best.score = s, best.y = y, found = true;
  }
  if (!found) throw ResolutionExhausted("no limit point in the ball at the current cutoff");
  return best;
}

namespace {

// Disk containing g(Delta_0) (interval in d = 1 as a degenerate disk).
bool cover(const Coding& coding, const GroupElement& g, cplx& center, double& radius) {
  const Domain& D = coding.domain;
  if (D.dim == 1) {
    double p = g.apply(-D.halfWidth).real(), q = g.apply(D.halfWidth).real();
    center = 0.5 * (p + q);
    radius = 0.5 * std::abs(q - p);
    return true;
  }
  double R = std::hypot(D.halfWidth, D.halfHeight);
  if (std::abs(g.c) == 0.0) {
    center = g.b / g.d;
    radius = std::abs(g.a / g.d) * R;
    return true;
  }
  double den = std::norm(g.d) - std::norm(g.c) * R * R;
  if (den <= 0) {
    auto box = coding.image_box(g);
    center = 0.5 * (box.first + box.second);
    radius = 0.5 * std::abs(box.second - box.first);
    return true;
  }
  center = g.a / g.c - std::conj(g.d) / (g.c * den);
  radius = R / den;
  return true;
}

void dfs_samples(const Coding& coding, const GroupElement& g, int depth, cplx center, double radius, double minDiam,
                 int maxDepth, std::vector<cplx>& out) {
  for (const Branch& b : coding.branches) {
    GroupElement h = g * b.g;
    cplx cc;
    double rr;
    cover(coding, h, cc, rr);
    if (std::abs(cc - center) > rr + radius) continue;
    cplx pt = h.apply(coding.domain.anchor);
    if (std::abs(pt - center) < radius) out.push_back(pt);
    if (2.0 * rr >= minDiam && depth + 1 < maxDepth) dfs_samples(coding, h, depth + 1, center, radius, minDiam, maxDepth, out);
  }
}

}  // namespace

std::vector<cplx> limit_samples(const Coding& coding, cplx center, double radius, double minDiameter, int maxDepth) {
  std::vector<cplx> out;
  if (std::abs(coding.domain.anchor - center) < radius) out.push_back(coding.domain.anchor);
  dfs_samples(coding, GroupElement::identity(coding.preset.field()), 0, center, radius, minDiameter, maxDepth, out);
  return out;
}

std::vector<cplx> parabolic_samples(const Coding& coding, int kMax, int mMax, double radius) {
  std::vector<cplx> seeds{coding.domain.anchor};
  for (const Branch& b : coding.branches) seeds.push_back(b.g.apply(coding.domain.anchor));
  std::vector<cplx> out;
  for (int k = -kMax; k <= kMax; ++k) {
    if (k == 0) continue;
    for (int m = -mMax; m <= mMax; ++m) {
      if (m == 0) continue;
      GroupElement g = coding.letter_element(k, m);
      for (cplx s : seeds) {
        cplx y = g.apply(s);
        if (std::abs(y) < radius) out.push_back(y);
      }
    }
  }
  return out;
}

cplx ncp_failure_direction(const Coding& coding) {
  cplx c = coding.preset.c;
  return cplx(0, 1) * std::conj(c) / std::abs(c);
}

std::vector<NCPProfileRow> ncp_failure_profile(const Coding& coding, const std::vector<double>& epsGrid, int kMax,
                                               int mMax) {
  if (coding.domain.dim != 2 || coding.preset.cuspRank != 1)
    throw ConfigError("the failure profile needs a d = 2 preset with a rank-one cusp");
  double rmax = *std::max_element(epsGrid.begin(), epsGrid.end());
  auto samples = parabolic_samples(coding, kMax, mMax, rmax);
  cplx w = ncp_failure_direction(coding);
  std::vector<NCPProfileRow> rows;
  for (double e : epsGrid) {
    NCPWitness wt = ncp_witness(samples, 0.0, w, e);
    rows.push_back({e, wt.score, wt.inBall});
  }
  return rows;
}

NCPScan ncp_window_scan(const Coding& coding, const std::vector<cplx>& candidates, int count, double epsLo,
                        double epsHi, double R, std::uint64_t seed) {
  if (!(epsLo > 0 && epsLo <= epsHi && epsHi < 1)) throw ConfigError("ncp scan needs 0 < epsLo <= epsHi < 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  NCPScan scan;
  for (cplx x : candidates) {
    if ((int)scan.rows.size() >= count) break;
    double eps = epsLo * std::pow(epsHi / epsLo, U(rng));
    cplx w = coding.domain.dim == 2 ? std::polar(1.0, 2.0 * std::numbers::pi * U(rng)) : cplx(1.0);
    if (!window_membership(coding, x, -std::log(eps), R)) {
      ++scan.outsideWindow;
      continue;
    }
    try {
      NCPWitness wt = ncp_witness(limit_samples(coding, x, eps, 0.05 * eps), x, w, eps);
      scan.rows.push_back({x, w, eps, wt.score, wt.inBall});
    } catch (const ResolutionExhausted&) {
      ++scan.exhausted;
    }
  }
  if (!scan.rows.empty()) {
    scan.eta0 = scan.rows.front().score;
    for (const NCPScanRow& r : scan.rows) scan.eta0 = std::min(scan.eta0, r.score);
  }
  return scan;
}

}  // namespace cusplab
