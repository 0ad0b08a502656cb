#include "cusplab/dolgopyat.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "cusplab/errors.hpp"
#include "cusplab/sampler.hpp"
#include "cusplab/stats.hpp"

namespace cusplab {

namespace {

constexpr int kSymbolicPad = 10;

// Conformal-measure mass of g(Delta_0) against the normalized Gibbs density.
double nu_of(const SpectralData& sd, const GroupElement& g, int depth) {
  const int N = sd.grid.size();
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    cplx x = sd.grid.node(i);
    s += sd.left[i] * std::pow(g.derivative(x), sd.delta) * sd.grid.interpolate(sd.h0, g.apply(x));
  }
  return s / std::pow(sd.lambda0, depth);
}

GroupElement sub_element(const Coding& coding, const std::vector<int>& w, size_t from, size_t to) {
  GroupElement g = GroupElement::identity(coding.preset.field());
  for (size_t i = from; i < to; ++i) g = g * coding.branches[w[i]].g;
  return g;
}

// Image of Delta_0 under g inside the closed ball B(x, r).
bool image_in_ball(const Coding& coding, const GroupElement& g, cplx x, double r) {
  for (cplx p : coding.domain.boundary(coding.domain.dim == 1 ? 1 : 8))
    if (std::abs(g.apply(p) - x) > r) return false;
  return true;
}

// Distance from x to the boundary of g(Delta_0).
double inscribed(const Coding& coding, const GroupElement& g, cplx x) {
  double best = 1e300;
  for (cplx p : coding.domain.boundary(coding.domain.dim == 1 ? 1 : 32)) best = std::min(best, std::abs(g.apply(p) - x));
  return best;
}

// Point of p after stripping the prefix u, or false when u is not a prefix of p.
bool strip_prefix(const Coding& coding, const SymbolicPoint& p, const std::vector<int>& u, const GroupElement& gu,
                  cplx& y) {
  const size_t L = u.size();
  bool known = true;
  for (size_t i = 0; i < L; ++i) {
    int letter = i < p.word.size() ? p.word[i] : -1;
    if (letter < 0) {
      known = false;
      break;
    }
    if (letter != u[i]) return false;
  }
  if (!known) {
    y = gu.inverse().apply(p.z);
    return coding.domain.contains(y, 1e-12);
  }
  if ((int)L <= p.depth) {
    y = sub_element(coding, p.word, L, p.depth).apply(p.base);
  } else {
    y = sub_element(coding, p.word, p.depth, L).inverse().apply(p.base);
  }
  return true;
}

double lip_log_h(const SpectralData& sd) {
  const Domain& D = sd.coding->domain;
  const int n = 200;
  double best = 0.0;
  auto lh = [&](cplx x) { return std::log(sd.h_at(x)); };
  if (D.dim == 1) {
    double lo = sd.grid.gx().lo(), hi = sd.grid.gx().hi(), step = (hi - lo) / n;
    double prev = lh(lo);
    for (int i = 1; i <= n; ++i) {
      double cur = lh(lo + i * step);
      best = std::max(best, std::abs(cur - prev) / step);
      prev = cur;
    }
    return best;
  }
  const int m = 40;
  double rl = sd.grid.gx().lo(), rh = sd.grid.gx().hi(), il = sd.grid.gy().lo(), ih = sd.grid.gy().hi();
  double sx = (rh - rl) / m, sy = (ih - il) / m;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) {
      cplx x(rl + i * sx, il + j * sy);
      double v = lh(x);
      if (i < m) best = std::max(best, std::abs(lh(x + cplx(sx, 0)) - v) / sx);
      if (j < m) best = std::max(best, std::abs(lh(x + cplx(0, sy)) - v) / sy);
    }
  return best;
}

std::vector<cplx> test_points(const SpectralData& sd) {
  std::vector<cplx> pts = sd.coding->domain.boundary(sd.grid.dim() == 1 ? 1 : 16);
  for (int i = 0; i < sd.grid.size(); ++i) pts.push_back(sd.grid.node(i));
  return pts;
}

}  // namespace

bool word_has_prefix(const std::vector<int>& word, const std::vector<int>& prefix) {
  if (prefix.size() > word.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), word.begin());
}

// ---------------------------------------------------------------- partition

int FrequencyPartition::locate(const std::vector<int>& word) const {
  for (size_t i = 0; i < cylinders.size(); ++i)
    if (word_has_prefix(word, cylinders[i].word)) return (int)i;
  return -1;
}

size_t FrequencyPartition::flagged_count() const {
  return std::count_if(cylinders.begin(), cylinders.end(), [](const PartitionCylinder& c) { return c.flagged; });
}

FrequencyPartition build_partition(const SpectralData& sd, const TwistParameter& tw, double R0, int maxDepth) {
  const Coding& cd = *sd.coding;
  FrequencyPartition P;
  P.rhoNorm = tw.normOfRho_b();
  P.R0 = R0;
  if (!(P.rhoNorm >= 1.0)) throw InvalidTwist("partition requires ||rho_b|| >= 1");
  const double hi = std::exp(R0) / P.rhoNorm, lo = std::exp(-R0) / P.rhoNorm;
  if (lo < cd.certificate.cutoff * cd.domain.diameter)
    throw ResolutionExhausted("scale " + format_double(lo, 6) + " is below the cutoff resolution");
  const GroupElement id = GroupElement::identity(cd.preset.field());
  if (cd.domain.diameter <= hi) {
    P.cylinders.push_back({{}, id, cd.domain.diameter, 1.0, cd.domain.diameter >= lo});
    P.coveredNu = 1.0;
    return P;
  }
  const int B = (int)cd.branches.size();
  std::vector<std::vector<PartitionCylinder>> parts(B);
  bool exhausted = false;
  parallel_chunks(B, 1, [&](int b) {
    std::vector<std::pair<std::vector<int>, GroupElement>> stack{{{b}, cd.branches[b].g}};
    while (!stack.empty()) {
      auto [w, g] = stack.back();
      stack.pop_back();
      double diam = cd.image_diameter(g);
      if (diam <= hi) {
        parts[b].push_back({w, g, diam, nu_of(sd, g, (int)w.size()), diam >= lo});
        continue;
      }
      if ((int)w.size() >= maxDepth) {
        exhausted = true;
        continue;
      }
      for (int c = B - 1; c >= 0; --c) {
        std::vector<int> w2 = w;
        w2.push_back(c);
        stack.push_back({w2, g * cd.branches[c].g});
      }
    }
  });
  if (exhausted) throw ResolutionExhausted("partition depth limit reached");
  for (auto& v : parts)
    for (auto& c : v) {
      P.coveredNu += c.nuMass;
      P.cylinders.push_back(std::move(c));
    }
  return P;
}

// ---------------------------------------------------------------- masks and majorants

double BetaMask::value(const SymbolicPoint& p) const {
  double v = 1.0;
  for (size_t i = 0; i < words.size(); ++i)
    if (word_has_prefix(p.word, words[i])) v -= taus[i];
  return v;
}

Eigen::VectorXd BetaMask::at_nodes(const Coding& coding, const NodeGrid& grid) const {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(grid.size());
  for (size_t i = 0; i < words.size(); ++i) {
    GroupElement gi = word_element(coding, words[i]).inverse();
    for (int k = 0; k < grid.size(); ++k)
      if (coding.domain.contains(gi.apply(grid.node(k)), 0.0)) out[k] -= taus[i];
  }
  return out;
}

double BetaMask::lipschitz_bound(double rhoNorm, double R0, double c, double Ccyl, double minAlphaDerivative) const {
  return tau * rhoNorm * std::exp(R0) / (c / Ccyl * minAlphaDerivative);
}

double PatchFunction::eval(const Coding& coding, const NodeGrid& grid, const SymbolicPoint& p) const {
  double v = grid.interpolate(smooth, p.z);
  for (const Patch& pa : patches) {
    cplx y;
    if (strip_prefix(coding, p, pa.word, pa.g, y)) v += grid.interpolate(pa.pulled, y);
  }
  return v;
}

PatchFunction PatchFunction::constant(int n, double v) {
  PatchFunction f;
  f.smooth = Eigen::VectorXd::Constant(n, v);
  return f;
}

Eigen::VectorXd dolgopyat_apply_nodes(const Eigen::MatrixXd& P0, const Eigen::VectorXd& mask, const Eigen::VectorXd& h,
                                      int m) {
  Eigen::VectorXd v = mask.cwiseProduct(h);
  for (int i = 0; i < m; ++i) v = P0 * v;
  return v;
}

// ---------------------------------------------------------------- reports

std::string DolgopyatConstants::report() const {
  std::ostringstream os;
  auto kv = [&](const char* k, double v) { os << "dolgopyat." << k << "=" << format_double(v) << "\n"; };
  kv("lambda_hat", lambdaHat);
  kv("A0", A0);
  kv("C2", C2);
  kv("C_cyl", Ccyl);
  kv("C_Delta0", CDelta0);
  kv("eps1_lemma", eps1Lemma);
  kv("delta_rho", deltaRho);
  kv("C_exp_BP", CexpBP);
  kv("eps2", eps2);
  kv("eps3", eps3);
  kv("C_BP", C_BP);
  kv("E", E);
  kv("delta1_chain", delta1Chain);
  kv("epsilon1_chain", epsilon1Chain);
  kv("c0", c0);
  kv("c_chain", cChain);
  kv("T0", T0);
  kv("tau_chain", tauChain);
  kv("delta1", delta1);
  kv("tau", tau);
  os << "dolgopyat.m=" << m << "\n";
  kv("R0", R0);
  for (size_t i = 0; i < audit.size(); ++i) os << "dolgopyat.audit." << i << "=" << audit[i] << "\n";
  return os.str();
}

std::string DecayReport::to_csv() const {
  std::ostringstream os;
  os << "k,raw_norm,majorant_norm\n";
  for (const DecayRow& r : rows) {
    os << r.k << "," << format_double(r.rawNorm) << ",";
    if (r.majorantNorm >= 0) os << format_double(r.majorantNorm);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- engine

DolgopyatEngine::DolgopyatEngine(const SpectralData& sd, const DolgopyatOptions& opt) : sd_(&sd), opt_(opt) {
  init();
  derive_constants();
}

DolgopyatEngine::DolgopyatEngine(const SpectralData& sd, const LNICCertificate& lnic, const DolgopyatOptions& opt)
    : sd_(&sd), opt_(opt), lnic_(lnic) {
  init();
  derive_constants();
}

void DolgopyatEngine::init() {
  const Coding& cd = *sd_->coding;
  if (cd.branches.empty()) throw EmptyCoding("empty alphabet");
  P0_ = sd_->normalized_operator({0.0, 0.0, 0}, opt_.workers).matrix.real();
  anchorBranch_ = 0;
  for (size_t i = 0; i < cd.branches.size(); ++i)
    if (cd.branches[i].normHigh > cd.branches[anchorBranch_].normHigh) anchorBranch_ = (int)i;
  samples_.clear();
  weights_.clear();
  for (const CylinderAtom& a : sd_->atoms) {
    if (a.nuMass <= 0) continue;
    SymbolicPoint p;
    if (a.pooled) {
      p.word = a.word;
      p.depth = (int)a.word.size();
      p.base = word_element(cd, a.word).inverse().apply(a.point);
      p.z = a.point;
      p.word.push_back(-1);
    } else {
      p = symbolic(a.word);
    }
    samples_.push_back(std::move(p));
    weights_.push_back(a.nuMass);
  }
}

SymbolicPoint DolgopyatEngine::symbolic(const std::vector<int>& word) const {
  const Coding& cd = *sd_->coding;
  SymbolicPoint p;
  p.base = cd.domain.anchor;
  p.word = word;
  p.depth = (int)word.size();
  bool tail = !word.empty() && word.back() < 0;
  if (tail) {
    p.depth -= 1;
    p.word.pop_back();
  }
  p.z = word_element(cd, p.word).apply(p.base);
  if (tail)
    p.word.push_back(-1);
  else
    for (int i = 0; i < kSymbolicPad; ++i) p.word.push_back(anchorBranch_);
  return p;
}

double DolgopyatEngine::word_weight(const std::vector<int>& word, cplx y) const {
  GroupElement g = word_element(*sd_->coding, word);
  return std::pow(g.derivative(y), sd_->delta) * sd_->h_at(g.apply(y)) /
         (std::pow(sd_->lambda0, (double)word.size()) * sd_->h_at(y));
}

std::vector<int> DolgopyatEngine::alpha(int l, const CancellationEntry& e) const {
  return l == 1 ? lnic_.alpha0 : lnic_.alphas.at(e.j - 1);
}

void DolgopyatEngine::derive_constants() {
  const Coding& cd = *sd_->coding;
  const CodingCertificate& cert = cd.certificate;
  DolgopyatConstants& K = consts_;
  K.R0 = opt_.R0;
  K.lambdaHat = cert.lambdaHat;
  K.C2 = cert.C2;
  K.Ccyl = cert.Ccyl;
  K.CDelta0 = cd.domain.C_Delta0;
  double a0p = 0.0;
  for (double a : sd_->aGrid) a0p = std::max(a0p, std::abs(a));
  K.A0 = 2.0 * (sd_->delta + a0p) * cert.C1 + 2.0 * lip_log_h(*sd_) * (1.0 + K.lambdaHat);
  K.m = opt_.m;
  if (K.m <= 0) {
    K.m = 1;
    while (std::pow(K.lambdaHat, K.m) >= 1.0 / (8.0 * K.A0)) ++K.m;
  }
  if (lnic_.alpha0.empty()) {
    lnic_ = lnic_scan(cd, K.m, opt_.lnicGrid, 0, 6, opt_.workers);
  } else if (lnic_.m != K.m) {
    throw ConfigError("LNIC words have length " + std::to_string(lnic_.m) + " but the block length is " +
                      std::to_string(K.m));
  }
  K.eps2 = lnic_.eps2;
  K.C_BP = lnic_.C_BP;
  K.audit.push_back("eps1_lemma=1 and delta_rho=1 for abelian characters");

  // Second-order remainder of BP against its linearization on the LNIC grid.
  {
    std::vector<cplx> grid = lnic_grid(cd, 6);
    double h = 1e-3 * cd.domain.diameter;
    double worst = 0.0;
    for (const auto& aj : lnic_.alphas)
      for (cplx x : grid) {
        cplx dirs[2] = {1.0, cplx(0, 1)};
        for (int k = 0; k < cd.domain.dim; ++k) {
          cplx y = x + h * dirs[k];
          if (!cd.domain.contains(y, 0.0)) continue;
          AMElement bp = bp_map(cd, lnic_.alpha0, aj, x, y);
          cplx lin = bp_derivative_exact(cd, lnic_.alpha0, aj, x, h * dirs[k]);
          double err = std::abs(cplx(bp.t, bp.signed_theta()) - lin);
          worst = std::max(worst, err / (h * h));
        }
      }
    K.CexpBP = std::max(worst, 1e-12);
  }

  // Window-constrained non-concentration at the heaviest atoms.
  K.eps3 = opt_.eps3;
  if (K.eps3 <= 0) {
    std::vector<size_t> order(sd_->atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return sd_->atoms[a].nuMass > sd_->atoms[b].nuMass; });
    const double eps = 0.05;
    double worst = 1.0;
    int used = 0;
    for (size_t i : order) {
      if (used >= 10) break;
      if (sd_->atoms[i].pooled) continue;
      cplx x = sd_->atoms[i].point;
      std::vector<cplx> pts = limit_samples(cd, x, eps, eps * 0.02, 8);
      std::vector<cplx> dirs{1.0};
      if (cd.domain.dim == 2) dirs.push_back(cplx(0, 1));
      try {
        for (cplx w : dirs) worst = std::min(worst, ncp_witness(pts, x, w, eps).score);
        ++used;
      } catch (const ResolutionExhausted&) {
      }
    }
    K.eps3 = std::clamp(worst, 1e-6, 0.999);
  }

  K.E = 1.01 * 2.0 * K.A0 / K.deltaRho;
  K.delta1Chain = 0.99 * K.eps1Lemma * K.eps2 * K.eps3 / 14.0;
  K.delta1Chain = std::min(K.delta1Chain, 0.99 * K.eps3);
  double delta0 = 0.5 * inscribed(cd, GroupElement::identity(cd.preset.field()), cd.domain.anchor);
  const double eR = std::exp(K.R0);
  double d1 = K.delta1Chain;
  K.epsilon1Chain = 0.99 * std::min({delta0 / (K.Ccyl * K.CDelta0 * eR), delta0 * 8.0 * K.A0 * K.Ccyl * K.CDelta0 * eR / d1,
                                     1.0 / d1, d1 / (K.C_BP * K.C_BP), d1 * K.deltaRho / K.CexpBP});

  // c0: cylinders around heavy limit points inside B(x, r), smallest diameter or mass seen.
  {
    double r = K.delta1Chain * K.epsilon1Chain / (8.0 * K.A0 * K.Ccyl * K.CDelta0 * eR);
    double c0 = 1.0;
    int used = 0;
    for (const SymbolicPoint& p : samples_) {
      if (used >= 10) break;
      if (p.word.empty() || p.word.back() < 0) continue;
      std::vector<int> w(p.word.begin(), p.word.begin() + p.depth);
      GroupElement g = word_element(cd, w);
      int depth = (int)w.size();
      while (depth < 80 && cd.image_diameter(g) > r) {
        g = g * cd.branches[anchorBranch_].g;
        ++depth;
      }
      c0 = std::min({c0, cd.image_diameter(g), nu_of(*sd_, g, depth)});
      ++used;
    }
    K.c0 = c0;
    K.cChain = c0 / (K.Ccyl * K.CDelta0);
  }

  double minDer = 1e300;
  K.T0 = 0.0;
  std::vector<std::vector<int>> all{lnic_.alpha0};
  all.insert(all.end(), lnic_.alphas.begin(), lnic_.alphas.end());
  for (const auto& a : all) {
    GroupElement g = word_element(cd, a);
    for (cplx y : test_points(*sd_)) {
      minDer = std::min(minDer, std::sqrt(g.derivative(y)));
      K.T0 = std::max(K.T0, std::abs(std::log(word_weight(a, y))));
    }
  }
  double ac = std::acos(1.0 - std::pow(K.delta1Chain * K.epsilon1Chain, 2) / 2.0);
  K.tauChain = 0.99 * std::min({0.25, 2.0 * K.E * std::exp(-K.R0) * K.cChain / K.Ccyl * minDer,
                                 ac * ac / (256.0 * std::exp(2.0 * K.T0))});
  if (opt_.tau > 0) {
    K.tau = opt_.tau;
    K.audit.push_back("tau set by option to " + format_double(K.tau, 6));
  } else if (K.tauChain < opt_.tauFloor) {
    K.tau = opt_.tauPractical;
    K.audit.push_back("tau chain " + format_double(K.tauChain, 6) + " below floor, using " + format_double(K.tau, 6));
  } else {
    K.tau = K.tauChain;
  }
  K.delta1 = opt_.delta1;
  if (K.delta1 != K.delta1Chain)
    K.audit.push_back("delta1 practical " + format_double(K.delta1, 6) + " instead of chain " +
                      format_double(K.delta1Chain, 6));
  double mFull = std::max({K.cChain * std::exp(-2.0 * K.R0), 1.0 / (8.0 * K.A0), 1.0 / (8.0 * K.E * K.epsilon1Chain),
                           K.delta1Chain / (32.0 * K.E)});
  int mAll = 1;
  while (std::pow(K.lambdaHat, mAll) >= mFull && mAll < 1000) ++mAll;
  K.audit.push_back("block length from all clauses " + std::to_string(mAll));
}

std::vector<SymbolicPoint> DolgopyatEngine::probes(const std::vector<int>& word) const {
  const Coding& cd = *sd_->coding;
  std::vector<SymbolicPoint> out{symbolic(word)};
  std::vector<int> order(cd.branches.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return cd.branches[a].normHigh > cd.branches[b].normHigh; });
  for (int i = 0; i < std::min<int>(opt_.probeLetters, (int)order.size()); ++i) {
    std::vector<int> w = word;
    w.push_back(order[i]);
    out.push_back(symbolic(w));
  }
  return out;
}

FrequencyPartition DolgopyatEngine::partition(const TwistParameter& tw) const {
  return build_partition(*sd_, tw, opt_.R0);
}

CancellationData DolgopyatEngine::cancellation_data(const FrequencyPartition& part, const TwistParameter& tw) const {
  const Coding& cd = *sd_->coding;
  CancellationData out;
  out.rhoNorm = part.rhoNorm;
  out.delta1 = consts_.delta1;
  const double rho = part.rhoNorm;
  const cplx anchor = cd.domain.anchor;
  std::vector<int> flagged;
  for (size_t i = 0; i < part.cylinders.size(); ++i)
    if (part.cylinders[i].flagged) flagged.push_back((int)i);
  const double threshold0 = 7.0 * out.delta1;
  std::vector<int> heavy(cd.branches.size());
  std::iota(heavy.begin(), heavy.end(), 0);
  std::sort(heavy.begin(), heavy.end(), [&](int a, int b) { return cd.branches[a].normHigh > cd.branches[b].normHigh; });
  heavy.resize(std::min<size_t>(heavy.size(), 40));

  out.entries.resize(flagged.size());
  std::vector<int> missing(flagged.size(), 0);
  parallel_chunks((int)flagged.size(), opt_.workers, [&](int fi) {
    const PartitionCylinder& J = part.cylinders[flagged[fi]];
    CancellationEntry& e = out.entries[fi];
    e.cylinder = flagged[fi];
    e.x1 = J.g.apply(anchor);
    e.eps1 = opt_.eps1 > 0 ? opt_.eps1 : 0.5 * inscribed(cd, J.g, e.x1) * rho;
    const double rOut = e.eps1 / rho, rIn = out.delta1 * e.eps1 / rho;
    const double rSub = out.delta1 * e.eps1 / (4.0 * consts_.A0 * rho);
    const double threshold = threshold0 * e.eps1;
    // Linearized BP at x1 along 1 and i for each partner.
    const int j0 = (int)lnic_.alphas.size();
    std::vector<cplx> d1(j0), di(j0);
    for (int j = 0; j < j0; ++j) {
      d1[j] = bp_derivative_exact(cd, lnic_.alpha0, lnic_.alphas[j], e.x1, 1.0);
      di[j] = cd.domain.dim == 2 ? bp_derivative_exact(cd, lnic_.alpha0, lnic_.alphas[j], e.x1, cplx(0, 1)) : 0.0;
    }
    std::vector<std::vector<int>> cands;
    for (size_t b = 0; b < cd.branches.size(); ++b) cands.push_back({(int)b});
    for (int b : heavy)
      for (int c : heavy) cands.push_back({b, c});
    double best = -1.0;
    for (const auto& tail : cands) {
      GroupElement g = J.g * sub_element(cd, tail, 0, tail.size());
      cplx x2 = g.apply(anchor);
      cplx dz = x2 - e.x1;
      double r = std::abs(dz);
      if (r < rIn || r > rOut) continue;
      for (int j = 0; j < j0; ++j) {
        cplx D = dz.real() * d1[j] + dz.imag() * di[j];
        double pairing = std::abs(tw.b * D.real() - tw.n * D.imag());
        if (pairing > best) best = pairing, e.j = j + 1, e.x2 = x2, e.distance = r;
      }
    }
    if (best < 0) {
      missing[fi] = 1;
      return;
    }
    e.pairing = best;
    e.weak = best < threshold;
    // J_k: heaviest cylinder below J inside B(x_k, rSub), searched over images meeting the ball.
    cplx xs[2] = {e.x1, e.x2};
    for (int k = 0; k < 2; ++k) {
      double bestNu = -1.0;
      std::vector<std::pair<std::vector<int>, GroupElement>> stack{{J.word, J.g}};
      while (!stack.empty()) {
        auto [w, g] = stack.back();
        stack.pop_back();
        double nuW = -1.0;
        if (w.size() > J.word.size() && image_in_ball(cd, g, xs[k], rSub)) {
          nuW = nu_of(*sd_, g, (int)w.size());
          if (nuW > bestNu) {
            bestNu = nuW;
            e.Jk[k] = w;
            e.diamFrac[k] = cd.image_diameter(g) / J.diameter;
            e.nuFrac[k] = nuW / J.nuMass;
          }
          continue;
        }
        if (w.size() >= J.word.size() + 5) continue;
        for (size_t c = 0; c < cd.branches.size(); ++c) {
          GroupElement gc = g * cd.branches[c].g;
          auto [lo, hi] = cd.image_box(gc);
          cplx q(std::clamp(xs[k].real(), lo.real(), hi.real()), std::clamp(xs[k].imag(), lo.imag(), hi.imag()));
          if (std::abs(q - xs[k]) > rSub) continue;
          std::vector<int> w2 = w;
          w2.push_back((int)c);
          stack.push_back({w2, gc});
        }
      }
      if (bestNu < 0) missing[fi] = 1;
    }
  });
  if (std::any_of(missing.begin(), missing.end(), [](int v) { return v; }))
    throw ResolutionExhausted("no annulus limit point at the current resolution");
  out.cRealized = out.entries.empty() ? 1.0 : 1e300;
  out.eps1 = out.entries.empty() ? 0.0 : 1e300;
  for (const auto& e : out.entries) {
    out.eps1 = std::min(out.eps1, e.eps1);
    out.cRealized = std::min({out.cRealized, e.diamFrac[0], e.diamFrac[1], e.nuFrac[0], e.nuFrac[1]});
    if (e.weak) ++out.weakCount;
  }
  if (!out.entries.empty()) out.cRealized *= 0.99;
  return out;
}

std::vector<DenseChoice> DolgopyatEngine::dense_selection(const CancellationData& cdata, const TwistParameter& tw,
                                                          const Eigen::VectorXcd& H, const PatchFunction& h,
                                                          double tau) const {
  const Coding& cd = *sd_->coding;
  const NodeGrid& grid = sd_->grid;
  std::vector<DenseChoice> out(cdata.entries.size());
  parallel_chunks((int)cdata.entries.size(), opt_.workers, [&](int ei) {
    const CancellationEntry& e = cdata.entries[ei];
    std::vector<int> a[2] = {alpha(1, e), alpha(2, e)};
    GroupElement ga[2] = {word_element(cd, a[0]), word_element(cd, a[1])};
    struct Probe {
      cplx V[2];
      double W[2];
    };
    std::vector<Probe> pr[2];
    for (int k = 0; k < 2; ++k)
      for (const SymbolicPoint& x : probes(e.Jk[k])) {
        Probe p;
        for (int l = 0; l < 2; ++l) {
          double w = word_weight(a[l], x.z);
          cplx phase = branch_weight(ga[l], x.z, cplx(0.0, tw.b), tw.n);
          SymbolicPoint ax;
          ax.z = ga[l].apply(x.z);
          ax.word = a[l];
          ax.word.insert(ax.word.end(), x.word.begin(), x.word.end());
          ax.base = x.base;
          ax.depth = x.depth + (int)a[l].size();
          p.V[l] = w * phase * grid.interpolate(H, ax.z);
          p.W[l] = w * h.eval(cd, grid, ax);
        }
        pr[k].push_back(p);
      }
    DenseChoice choice{ei, 1, 1, 0.0};
    bool found = false;
    for (int halving = 0; halving <= 10 && !found; ++halving) {
      double t = tau / std::pow(2.0, halving);
      for (int k = 0; k < 2 && !found; ++k)
        for (int l = 0; l < 2 && !found; ++l) {
          bool ok = true;
          for (const Probe& p : pr[k]) {
            double den = (l == 0 ? (1.0 - t) * p.W[0] + p.W[1] : p.W[0] + (1.0 - t) * p.W[1]);
            if (std::abs(p.V[0] + p.V[1]) > den) {
              ok = false;
              break;
            }
          }
          if (ok) choice = {ei, k + 1, l + 1, t}, found = true;
        }
    }
    out[ei] = choice;
  });
  return out;
}

BetaMask DolgopyatEngine::beta_mask(const CancellationData& cdata, const std::vector<DenseChoice>& sel,
                                    double tau) const {
  if (!(tau > 0 && tau <= 0.25)) throw ConfigError("tau must lie in (0, 1/4]");
  std::vector<char> covered(cdata.entries.size(), 0);
  BetaMask mask;
  mask.tau = tau;
  for (const DenseChoice& c : sel) {
    if (c.entry < 0 || c.entry >= (int)cdata.entries.size()) throw DenseIndexError("selection names an unknown cylinder");
    covered[c.entry] = 1;
    if (c.tau <= 0) continue;
    const CancellationEntry& e = cdata.entries[c.entry];
    std::vector<int> w = alpha(c.l, e);
    w.insert(w.end(), e.Jk[c.k - 1].begin(), e.Jk[c.k - 1].end());
    mask.words.push_back(w);
    mask.bases.push_back(e.Jk[c.k - 1]);
    mask.alphaIndex.push_back(c.l == 1 ? 0 : e.j);
    mask.taus.push_back(std::min(c.tau, tau));
  }
  if (std::find(covered.begin(), covered.end(), 0) != covered.end())
    throw DenseIndexError("selection misses a flagged cylinder");
  return mask;
}

PatchFunction DolgopyatEngine::dolgopyat_apply(const BetaMask& mask, const PatchFunction& h, int m) const {
  const Coding& cd = *sd_->coding;
  const NodeGrid& grid = sd_->grid;
  const int N = grid.size();
  std::vector<Eigen::VectorXd> pow0(m + 1);
  PatchFunction out;
  Eigen::VectorXd smooth = h.smooth;
  for (int i = 0; i < m; ++i) smooth = P0_ * smooth;
  std::map<std::vector<int>, PatchFunction::Patch> next;
  auto add_patch = [&](const std::vector<int>& w, const Eigen::VectorXd& pulled) {
    auto it = next.find(w);
    if (it == next.end())
      next.emplace(w, PatchFunction::Patch{w, word_element(cd, w), pulled});
    else
      it->second.pulled += pulled;
  };
  for (const auto& p : h.patches) {
    const int d = (int)p.word.size();
    if (d <= m) {
      Eigen::VectorXd v(N);
      for (int i = 0; i < N; ++i) v[i] = word_weight(p.word, grid.node(i)) * p.pulled[i];
      for (int i = d; i < m; ++i) v = P0_ * v;
      smooth += v;
    } else {
      std::vector<int> head(p.word.begin(), p.word.begin() + m), tail(p.word.begin() + m, p.word.end());
      GroupElement gt = word_element(cd, tail);
      Eigen::VectorXd v(N);
      for (int i = 0; i < N; ++i) v[i] = word_weight(head, gt.apply(grid.node(i))) * p.pulled[i];
      add_patch(tail, v);
    }
  }
  for (size_t i = 0; i < mask.words.size(); ++i) {
    const std::vector<int>& w = mask.words[i];
    std::vector<int> head(w.begin(), w.begin() + m), tail(w.begin() + m, w.end());
    GroupElement gt = word_element(cd, tail), gh = word_element(cd, head);
    Eigen::VectorXd v(N);
    for (int k = 0; k < N; ++k) {
      cplx y = grid.node(k);
      cplx ty = gt.apply(y);
      SymbolicPoint p;
      p.base = y;
      p.word = w;
      p.word.push_back(-1);
      p.depth = (int)w.size();
      p.z = gh.apply(ty);
      v[k] = -mask.taus[i] * word_weight(head, ty) * h.eval(cd, grid, p);
    }
    add_patch(tail, v);
  }
  out.smooth = smooth;
  for (auto& kv : next) out.patches.push_back(std::move(kv.second));
  return out;
}

double DolgopyatEngine::metric_D(const SymbolicPoint& a, const SymbolicPoint& b) const {
  const Coding& cd = *sd_->coding;
  size_t L = 0;
  while (L < a.word.size() && L < b.word.size() && a.word[L] >= 0 && a.word[L] == b.word[L]) ++L;
  if (L == 0) return cd.domain.diameter;
  std::vector<int> w(a.word.begin(), a.word.begin() + L);
  return cd.image_diameter(word_element(cd, w));
}

double DolgopyatEngine::norm2(const Eigen::VectorXcd& H) const {
  double s = 0.0;
  for (size_t i = 0; i < samples_.size(); ++i) s += weights_[i] * std::norm(sd_->grid.interpolate(H, samples_[i].z));
  return std::sqrt(s);
}

double DolgopyatEngine::norm2(const PatchFunction& h) const {
  double s = 0.0;
  for (size_t i = 0; i < samples_.size(); ++i) {
    double v = h.eval(*sd_->coding, sd_->grid, samples_[i]);
    s += weights_[i] * v * v;
  }
  return std::sqrt(s);
}

double DolgopyatEngine::norm1b(const Eigen::VectorXcd& H, double rhoNorm) const {
  const size_t S = samples_.size();
  std::vector<cplx> v(S);
  double sup = H.cwiseAbs().maxCoeff();
  for (size_t i = 0; i < S; ++i) {
    v[i] = sd_->grid.interpolate(H, samples_[i].z);
    sup = std::max(sup, std::abs(v[i]));
  }
  std::mt19937_64 rng(stream_seed(opt_.seed, 11, 0));
  std::uniform_int_distribution<size_t> pick(0, S - 1);
  double lip = 0.0;
  for (int t = 0; t < opt_.samplePairs; ++t) {
    size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    double D = metric_D(samples_[i], samples_[j]);
    if (D > 0) lip = std::max(lip, std::abs(v[i] - v[j]) / D);
  }
  return sup + lip / std::max(rhoNorm, 1.0);
}

ConeReport DolgopyatEngine::cone_check(const Eigen::VectorXcd& H, const PatchFunction& h, double rhoNorm,
                                       int samplePairs, std::uint64_t seed) const {
  const Coding& cd = *sd_->coding;
  const size_t S = samples_.size();
  std::vector<double> hv(S);
  std::vector<cplx> Hv(S);
  ConeReport rep;
  rep.hMin = 1e300;
  rep.trapped = 1e300;
  for (size_t i = 0; i < S; ++i) {
    hv[i] = h.eval(cd, sd_->grid, samples_[i]);
    Hv[i] = sd_->grid.interpolate(H, samples_[i].z);
    rep.hMin = std::min(rep.hMin, hv[i]);
    if (hv[i] > 0) rep.trapped = std::min(rep.trapped, (hv[i] - std::abs(Hv[i])) / hv[i]);
    else rep.trapped = std::min(rep.trapped, -1.0);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, S - 1);
  rep.lipH = rep.lipHH = 1e300;
  const double E = consts_.E;
  for (int t = 0; t < samplePairs; ++t) {
    size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    double D = metric_D(samples_[i], samples_[j]);
    double scale = std::max(std::abs(hv[i]), 1e-300);
    double allow = E * rhoNorm * hv[i] * D;
    rep.lipH = std::min(rep.lipH, (allow - std::abs(hv[i] - hv[j])) / scale);
    rep.lipHH = std::min(rep.lipHH, (allow - std::abs(Hv[i] - Hv[j])) / scale);
    ++rep.pairs;
  }
  if (rep.pairs == 0) rep.lipH = rep.lipHH = 0.0;
  return rep;
}

namespace {

void fit_decay(DecayReport& rep, int kMax) {
  std::vector<double> xs, ys;
  rep.kMin = kMax / 4;
  for (const DecayRow& r : rep.rows)
    if (r.k >= rep.kMin && r.rawNorm > 0) xs.push_back(r.k), ys.push_back(std::log(r.rawNorm));
  if (xs.size() < 2) return;
  LinearFit f = fit_line(xs, ys);
  rep.eta = -f.slope;
  rep.r2 = f.r2;
}

}  // namespace

DecayReport twisted_decay(const SpectralData& sd, const TwistParameter& tw, const Eigen::VectorXcd& H0, int kMax,
                          int workers) {
  DecayReport rep;
  rep.b = tw.b;
  rep.n = tw.n;
  Eigen::MatrixXcd M = sd.normalized_operator(tw, workers).matrix;
  auto norm = [&](const Eigen::VectorXcd& H) {
    double s = 0.0;
    for (const CylinderAtom& a : sd.atoms) s += a.nuMass * std::norm(sd.grid.interpolate(H, a.point));
    return std::sqrt(s);
  };
  Eigen::VectorXcd H = H0;
  for (int k = 0; k <= kMax; ++k) {
    double nrm = norm(H);
    rep.rows.push_back({k, nrm, -1.0});
    if (nrm < 1e-250) {
      rep.earlyStop = true;
      break;
    }
    if (k < kMax) H = M * H;
  }
  fit_decay(rep, kMax);
  return rep;
}

DecayReport DolgopyatEngine::raw_decay(const TwistParameter& tw, const Eigen::VectorXcd& H0, int kMax) const {
  DecayReport rep;
  rep.b = tw.b;
  rep.n = tw.n;
  rep.m = consts_.m;
  Eigen::MatrixXcd M = sd_->normalized_operator(tw, opt_.workers).matrix;
  Eigen::VectorXcd H = H0;
  for (int k = 0; k <= kMax; ++k) {
    double nrm = norm2(H);
    rep.rows.push_back({k, nrm, -1.0});
    if (nrm < 1e-250) {
      rep.earlyStop = true;
      break;
    }
    if (k < kMax) H = M * H;
  }
  fit_decay(rep, kMax);
  return rep;
}

DecayReport DolgopyatEngine::spectral_decay(const TwistParameter& tw, const Eigen::VectorXcd& H0, int kMax) const {
  if (kMax <= 0) kMax = opt_.kMax;
  const double rho = tw.normOfRho_b();
  // Outside the frequency regime only the raw sequence is meaningful.
  if (!(std::abs(tw.b) > 1.0 || tw.n != 0)) return raw_decay(tw, H0, kMax);
  const Coding& cd = *sd_->coding;
  const int m = consts_.m;
  DecayReport rep;
  rep.b = tw.b;
  rep.n = tw.n;
  rep.m = m;
  rep.tau = consts_.tau;
  FrequencyPartition part = partition(tw);
  CancellationData cdata = cancellation_data(part, tw);
  rep.flaggedCylinders = cdata.entries.size();
  Eigen::MatrixXcd M = sd_->normalized_operator(tw, opt_.workers).matrix;
  Eigen::VectorXcd H = H0;
  PatchFunction h = PatchFunction::constant(sd_->grid.size(), norm1b(H0, rho));
  for (int k = 0; k <= kMax; ++k) {
    DecayRow row{k, norm2(H), -1.0};
    if (k % m == 0) {
      row.majorantNorm = norm2(h);
      for (const SymbolicPoint& p : samples_) {
        double hv = h.eval(cd, sd_->grid, p), Hv = std::abs(sd_->grid.interpolate(H, p.z));
        double excess = hv > 0 ? Hv / hv - 1.0 : 1e300;
        rep.worstDomination = std::max(rep.worstDomination, excess);
        if (Hv > hv * (1.0 + 1e-9) + 1e-14) ++rep.dominationViolations;
      }
      rep.cones.push_back(cone_check(H, h, rho, opt_.samplePairs, stream_seed(opt_.seed, 13, k)));
      if (k < kMax) {
        std::vector<DenseChoice> sel = dense_selection(cdata, tw, H, h, rep.tau);
        BetaMask mask = beta_mask(cdata, sel, rep.tau);
        std::vector<std::vector<int>> omega;
        for (const DenseChoice& c : sel) {
          if (c.tau > 0)
            omega.push_back(cdata.entries[c.entry].Jk[c.k - 1]);
          else
            ++rep.weakCylinders;
        }
        rep.omegaSets.push_back(std::move(omega));
        h = dolgopyat_apply(mask, h, m);
      }
    }
    rep.rows.push_back(row);
    if (row.rawNorm < 1e-250) {
      rep.earlyStop = true;
      break;
    }
    if (k < kMax) H = M * H;
  }
  fit_decay(rep, kMax);
  return rep;
}

std::vector<RecurrenceRow> DolgopyatEngine::recurrence_frequency(const DecayReport& rep, int samples,
                                                                 std::uint64_t seed, double kappa) const {
  const Coding& cd = *sd_->coding;
  const int B = (int)rep.omegaSets.size();
  const int m = rep.m > 0 ? rep.m : consts_.m;
  std::vector<RecurrenceRow> out;
  if (B == 0 || samples <= 0) return out;
  InvariantSampler sampler(*sd_);
  std::vector<std::vector<char>> hits(samples, std::vector<char>(B, 0));
  const int chunk = 64, chunks = (samples + chunk - 1) / chunk;
  parallel_chunks(chunks, opt_.workers, [&](int c) {
    std::mt19937_64 rng(stream_seed(seed, 17, c));
    for (int s = c * chunk; s < std::min(samples, (c + 1) * chunk); ++s) {
      SampledOrbit orb = sampler.orbit(rng, 20, (B + 1) * m + 16);
      std::vector<Letter> fwd = orb.forward_letters();
      std::vector<int> idx(fwd.size());
      for (size_t i = 0; i < fwd.size(); ++i) idx[i] = cd.find(fwd[i]);
      for (int j = 1; j <= B; ++j) {
        std::vector<int> tail(idx.begin() + std::min<size_t>(j * m, idx.size()), idx.end());
        for (const auto& w : rep.omegaSets[j - 1])
          if (word_has_prefix(tail, w)) {
            hits[s][j - 1] = 1;
            break;
          }
      }
    }
  });
  std::vector<double> rate(B, 0.0);
  for (int s = 0; s < samples; ++s)
    for (int j = 0; j < B; ++j) rate[j] += hits[s][j];
  double mean = 0.0, pMin = 1.0;
  for (int j = 0; j < B; ++j) {
    rate[j] /= samples;
    mean += rate[j] / B;
    pMin = std::min(pMin, rate[j]);
  }
  if (kappa <= 0) kappa = 0.5 * mean;
  for (int n = 1; n <= B; ++n) {
    int below = 0;
    for (int s = 0; s < samples; ++s) {
      int cnt = 0;
      for (int j = 0; j < n; ++j) cnt += hits[s][j];
      if (cnt < kappa * n) ++below;
    }
    RecurrenceRow r;
    r.n = n;
    r.frequency = double(below) / samples;
    Interval iv = wilson_interval(below, samples);
    r.low = iv.low;
    r.high = iv.high;
    double kmax = std::ceil(kappa * n) - 1.0;
    if (kmax < 0)
      r.coinBound = 0.0;
    else if (pMin <= 0)
      r.coinBound = 1.0;
    else if (pMin >= 1)
      r.coinBound = kmax >= n ? 1.0 : 0.0;
    else
      r.coinBound = boost::math::cdf(boost::math::binomial_distribution<double>(n, pMin), std::min(kmax, double(n)));
    out.push_back(r);
  }
  return out;
}

}  // namespace cusplab
