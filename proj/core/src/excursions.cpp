#include "cusplab/excursions.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <memory>

#include "cusplab/errors.hpp"
#include "cusplab/stats.hpp"

namespace cusplab {

double min_return_time(const Coding& coding) {
  double best = 0.0;
  for (const Branch& b : coding.branches) best = std::max(best, b.normHigh);
  return -std::log(best);
}

StoppingTime stopping_time(const std::vector<double>& returns, double t, size_t offset) {
  if (!(t > 0)) throw ConfigError("stopping time needs t > 0");
  double acc = 0.0;
  for (size_t i = offset; i < returns.size(); ++i) {
    double next = acc + returns[i];
    if (t < next) return {(int)(i - offset), next - t};
    acc = next;
  }
  throw OrbitEscape("orbit too short for the stopping time");
}

StoppingTime stopping_time(const Coding& coding, cplx x, double t, int maxSteps) {
  std::vector<double> rets;
  double acc = 0.0;
  while (acc <= t) {
    if ((int)rets.size() >= maxSteps) throw OrbitEscape("orbit too short for the stopping time");
    StepResult r = coding.decode(x);
    rets.push_back(r.ret);
    acc += r.ret;
    x = r.image;
  }
  return stopping_time(rets, t);
}

ForwardOrbit forward_orbit(const Coding& coding, const SampledOrbit& orbit, int index) {
  if (index < 0) index = (int)orbit.points.size() - 1;
  ForwardOrbit f;
  for (int k = index; k >= 1; --k) {
    const Letter& l = orbit.letters[k - 1];
    GroupElement g = coding.element(l);
    f.letters.push_back(l);
    f.returns.push_back(std::log(std::norm(g.denominator(orbit.points[k - 1]))));
  }
  return f;
}

ForwardOrbit forward_orbit(const Coding& coding, cplx x, int depth) {
  ForwardOrbit f;
  for (const StepResult& r : itinerary(coding, x, depth, false)) {
    f.letters.push_back(r.letter);
    f.returns.push_back(r.ret);
  }
  return f;
}

// ---------------------------------------------------------------- types

ExcursionRecord classify_type(const Coding& coding, const ForwardOrbit& orbit, double t, int m, int n, double R) {
  if (m < 1 || n < 0) throw ConfigError("classify_type needs m >= 1 and n >= 0");
  ExcursionRecord rec;
  rec.seed = orbit;
  rec.t = t;
  rec.m = m;
  rec.n = n;
  rec.R = R;
  const int L = (int)orbit.letters.size();
  std::map<int, std::vector<int>> classes;
  for (int k = 1; k <= n; ++k) {
    const int pos = k * m;
    if (pos >= L) throw OrbitEscape("itinerary shorter than n m");
    StoppingTime st = stopping_time(orbit.returns, t, pos);
    rec.stopping.push_back(st.l);
    rec.residuals.push_back(st.residual);
    if (!window_membership_letters(coding, orbit.letters.data() + pos, L - pos, t, R)) {
      rec.word.push_back(k);
      classes[pos + st.l].push_back(k);
    }
  }
  for (auto& kv : classes) rec.intervals.push_back(kv.second);
  std::sort(rec.intervals.begin(), rec.intervals.end());
  return rec;
}

ExcursionRecord classify_type(const Coding& coding, cplx x, double t, int m, int n, double R) {
  double lam = min_return_time(coding);
  int depth = n * m + (int)std::ceil((t + R) / lam) + 8;
  return classify_type(coding, forward_orbit(coding, x, depth), t, m, n, R);
}

// ---------------------------------------------------------------- LDP

LDPReport ldp_monte_carlo(const SpectralData& sd, const std::vector<double>& tList, int m, const std::vector<int>& nList,
                          double R0, size_t samples, std::uint64_t seed, int workers) {
  if (tList.empty() || nList.empty() || m < 1 || samples == 0) throw ConfigError("empty LDP design");
  const Coding& cd = *sd.coding;
  InvariantSampler sampler(sd);
  LDPReport rep;
  rep.m = m;
  rep.R0 = R0;
  rep.tList = tList;
  rep.nList = nList;
  rep.samples = samples;
  const int K = 16;
  for (int i = 0; i < K; ++i) rep.kappaGrid.push_back(std::exp(std::log(0.01) + (std::log(0.5) - std::log(0.01)) * (i + 0.5) / K));
  const int nMax = *std::max_element(nList.begin(), nList.end());
  const double tMax = *std::max_element(tList.begin(), tList.end());
  const int extra = (int)std::ceil((tMax + R0) / min_return_time(cd)) + 40;
  const size_t T = tList.size();

  // hits[s][ti] = bitset over j = 1..nMax.
  std::vector<std::vector<std::vector<char>>> hits(samples);
  std::vector<char> escaped(samples, 0);
  const int chunk = 256, chunks = (int)((samples + chunk - 1) / chunk);
  parallel_chunks(chunks, workers, [&](int c) {
    std::mt19937_64 rng(stream_seed(seed, 31, c));
    for (size_t s = (size_t)c * chunk; s < std::min(samples, (size_t)(c + 1) * chunk); ++s) {
      SampledOrbit orb = sampler.orbit(rng, 20, nMax * m + extra);
      std::vector<Letter> fwd = orb.forward_letters();
      hits[s].assign(T, std::vector<char>(nMax, 0));
      try {
        for (size_t ti = 0; ti < T; ++ti)
          for (int j = 1; j <= nMax; ++j)
            hits[s][ti][j - 1] =
                window_membership_letters(cd, fwd.data() + j * m, (int)fwd.size() - j * m, tList[ti], R0);
      } catch (const OrbitEscape&) {
        escaped[s] = 1;
      }
    }
  });
  std::vector<size_t> good;
  for (size_t s = 0; s < samples; ++s)
    if (!escaped[s]) good.push_back(s);
  rep.escapes = samples - good.size();
  rep.flagged = rep.escapes > samples / 100;
  const double N = (double)good.size();
  if (good.empty()) throw OrbitEscape("every LDP sample escaped");

  rep.prob.assign(T, std::vector<std::vector<double>>(K, std::vector<double>(nList.size())));
  rep.low = rep.high = rep.prob;
  rep.decay.assign(T, std::vector<double>(K, 0.0));
  rep.r2.assign(T, std::vector<double>(K, 0.0));
  rep.fitPoints.assign(T, std::vector<int>(K, 0));
  rep.hitRate.assign(T, 0.0);
  std::vector<bool> kappaOk(K, true);
  for (size_t ti = 0; ti < T; ++ti) {
    // Prefix counts per sample.
    std::vector<std::vector<int>> count(good.size(), std::vector<int>(nMax + 1, 0));
    double total = 0.0;
    for (size_t g = 0; g < good.size(); ++g) {
      for (int j = 1; j <= nMax; ++j) count[g][j] = count[g][j - 1] + hits[good[g]][ti][j - 1];
      total += count[g][nMax];
    }
    rep.hitRate[ti] = total / (N * nMax);
    for (int ki = 0; ki < K; ++ki) {
      const double kappa = rep.kappaGrid[ki];
      std::vector<double> xs, ys;
      bool allZero = true;
      for (size_t ni = 0; ni < nList.size(); ++ni) {
        const int n = nList[ni];
        size_t below = 0;
        for (size_t g = 0; g < good.size(); ++g)
          if (count[g][n] < kappa * n) ++below;
        double p = below / N;
        Interval iv = wilson_interval((double)below, N);
        rep.prob[ti][ki][ni] = p;
        rep.low[ti][ki][ni] = iv.low;
        rep.high[ti][ki][ni] = iv.high;
        if (below > 0) {
          allZero = false;
          xs.push_back(n);
          ys.push_back(std::log(p));
        }
      }
      rep.fitPoints[ti][ki] = (int)xs.size();
      bool positive = allZero;
      if (xs.size() >= 3) {
        LinearFit f = fit_line(xs, ys);
        rep.decay[ti][ki] = -f.slope;
        rep.r2[ti][ki] = f.r2;
        positive = f.slope < 0;
      }
      if (!positive) kappaOk[ki] = false;
    }
  }
  rep.kappaHat = 0.0;
  for (int ki = 0; ki < K; ++ki)
    if (kappaOk[ki]) rep.kappaHat = rep.kappaGrid[ki];
  return rep;
}

// ---------------------------------------------------------------- residuals

ResidualReport residual_tail(const SpectralData& sd, double t, const std::vector<double>& Rgrid, size_t samples,
                             std::uint64_t seed, int workers) {
  if (Rgrid.empty() || samples == 0) throw ConfigError("empty residual design");
  const Coding& cd = *sd.coding;
  InvariantSampler sampler(sd);
  const int forward = (int)std::ceil(t / min_return_time(cd)) + 2;
  std::vector<double> res(samples);
  const int chunk = 1024, chunks = (int)((samples + chunk - 1) / chunk);
  parallel_chunks(chunks, workers, [&](int c) {
    std::mt19937_64 rng(stream_seed(seed, 41, c));
    for (size_t s = (size_t)c * chunk; s < std::min(samples, (size_t)(c + 1) * chunk); ++s) {
      SampledOrbit orb = sampler.orbit(rng, 20, forward);
      res[s] = stopping_time(forward_orbit(cd, orb).returns, t).residual;
    }
  });
  ResidualReport rep;
  rep.t = t;
  rep.R = Rgrid;
  rep.samples = samples;
  std::vector<double> xs, ys, ws;
  for (double R : Rgrid) {
    size_t cnt = std::count_if(res.begin(), res.end(), [&](double r) { return r > R; });
    double p = double(cnt) / samples;
    double se = std::sqrt(std::max(p * (1 - p), 1.0 / samples) / samples);
    rep.prob.push_back(p);
    rep.stderr_.push_back(se);
    bool use = cnt > 0;
    rep.used.push_back(use);
    if (!use) {
      rep.flagged = true;
      continue;
    }
    xs.push_back(R);
    ys.push_back(std::log(p));
    ws.push_back(double(cnt));
  }
  if (xs.size() >= 2) {
    LinearFit f = fit_line(xs, ys, ws);
    rep.eps = -f.slope;
    rep.r2 = f.r2;
  }
  return rep;
}

ResidualIdentity residual_identity(const SpectralData& sd, double t, double R, size_t samples, std::uint64_t seed,
                                   int workers) {
  const Coding& cd = *sd.coding;
  InvariantSampler sampler(sd);
  const int steps = (int)std::ceil((t + R) / min_return_time(cd)) + 2;
  std::vector<double> direct(samples), renewal(samples);
  const int chunk = 1024, chunks = (int)((samples + chunk - 1) / chunk);
  parallel_chunks(chunks, workers, [&](int c) {
    std::mt19937_64 rngA(stream_seed(seed, 51, c)), rngB(stream_seed(seed, 52, c));
    for (size_t s = (size_t)c * chunk; s < std::min(samples, (size_t)(c + 1) * chunk); ++s) {
      // Direct: conformal measure through the density 1/h0 against nu.
      SampledOrbit a = sampler.orbit(rngA, 20, steps);
      double hx = sd.h_at(a.terminal());
      double resid = stopping_time(forward_orbit(cd, a).returns, t).residual;
      direct[s] = resid > R ? 1.0 / hx : 0.0;
      // Renewal identity: backward chain from x = points[1], Ret(x) from the step into it.
      SampledOrbit b = sampler.orbit(rngB, 20, steps + 1);
      double retX = std::log(std::norm(cd.element(b.letters[0]).denominator(b.points[0])));
      double acc = 0.0, sum = 0.0;
      for (size_t n = 1; n < b.points.size(); ++n) {
        double shift = acc - t;
        if (shift > 0) break;
        if (R - retX < shift) sum += 1.0 / sd.h_at(b.points[n]);
        if (n < b.letters.size()) acc += std::log(std::norm(cd.element(b.letters[n]).denominator(b.points[n])));
      }
      renewal[s] = sum;
    }
  });
  auto summarize = [](const std::vector<double>& v, double& mean, double& err) {
    Accumulator a;
    for (double x : v) a.add(x);
    MeanStd ms = a.summary();
    mean = ms.mean;
    err = ms.stderr_;
  };
  ResidualIdentity id;
  id.t = t;
  id.R = R;
  summarize(direct, id.direct, id.directErr);
  summarize(renewal, id.renewal, id.renewalErr);
  double comb = std::hypot(id.directErr, id.renewalErr);
  id.zscore = comb > 0 ? (id.direct - id.renewal) / comb : 0.0;
  return id;
}

// ---------------------------------------------------------------- renewal sums

double Profile::integral(double from) const {
  double a = std::max(from, lo);
  if (a >= hi) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, hi, 10, 1e-13);
}

Profile standard_bump(double center, double width, double scale) {
  Profile p;
  p.lo = center - width;
  p.hi = center + width;
  p.sup = scale * std::exp(-1.0);
  p.f = [=](double s) {
    double u = (s - center) / width;
    if (std::abs(u) >= 1.0) return 0.0;
    return scale * std::exp(-1.0 / (1.0 - u * u));
  };
  return p;
}

namespace {

// Depth-first sum over explicit words with Ret_n(gamma x) <= t + hi.
RenewalSum word_sum(const Coding& cd, double delta, const Profile& f, cplx x, double t) {
  const double limit = t + f.hi;
  std::vector<std::pair<double, int>> order;  // (least return of the letter, branch)
  for (int i = 0; i < (int)cd.branches.size(); ++i) order.push_back({-std::log(cd.branches[i].normHigh), i});
  std::sort(order.begin(), order.end());
  const double lam = order.empty() ? 1.0 : order.front().first;
  struct Node {
    GroupElement g;
    int depth;
  };
  RenewalSum out;
  std::vector<Node> stack{{GroupElement::identity(cd.preset.field()), 0}};
  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    double der = nd.g.derivative(x);
    out.value += std::pow(der, delta) * f.f(-std::log(der) - t);
    ++out.terms;
    out.depth = std::max(out.depth, nd.depth);
    for (const auto& [least, i] : order) {
      if (least + nd.depth * lam > limit) break;
      GroupElement h = nd.g * cd.branches[i].g;
      if (-std::log(h.derivative(x)) > limit) continue;
      stack.push_back({h, nd.depth + 1});
    }
  }
  return out;
}

}  // namespace

RenewalSum renewal_sum(const SpectralData& sd, const Profile& f, cplx x, double t, int depthBudget) {
  if (t < 0) throw ConfigError("renewal sum needs t >= 0");
  const Coding& cd = *sd.coding;
  const double lam = min_return_time(cd);
  const double limit = t + f.hi;
  const int depth = limit > 0 ? (int)std::ceil(limit / lam) : 0;
  const double hmin = sd.h0.minCoeff(), hmax = sd.h0.maxCoeff();
  if (depth > depthBudget)
    throw PartialSum("word length " + std::to_string(depth) + " exceeds the depth budget",
                     f.sup * (depth - depthBudget) * hmax / hmin);
  RenewalSum out = word_sum(cd, sd.delta, f, x, t);
  out.depth = depth;
  // Letters beyond the cutoff only matter once t + hi exceeds their least return.
  out.alphabetBound = limit > -std::log(cd.certificate.cutoff)
                          ? f.sup * (depth + 1) * cd.certificate.coverageDeficit * hmax / hmin
                          : 0.0;
  return out;
}

RenewalCheck renewal_limit_check(const SpectralData& sd, const Profile& f, cplx x, const std::vector<double>& tGrid,
                                 int depthBudget) {
  if (tGrid.empty()) throw ConfigError("empty time grid");
  const Coding& cd = *sd.coding;
  const double tMax = *std::max_element(tGrid.begin(), tGrid.end());
  // Refine the alphabet until every letter that can enter the sum is explicit.
  const double cut = 0.5 * std::exp(-(tMax + f.hi));
  std::shared_ptr<const Coding> fine = sd.coding;
  if (cut < cd.certificate.cutoff) fine = std::make_shared<Coding>(build_alphabet(cd.preset, cut, cd.options));
  const double lam = min_return_time(*fine);
  RenewalCheck out;
  const double hx = sd.h_at(x);
  for (double t : tGrid) {
    const int depth = (int)std::ceil(std::max(0.0, t + f.hi) / lam);
    if (depth > depthBudget)
      throw PartialSum("word length " + std::to_string(depth) + " exceeds the depth budget",
                       f.sup * (depth - depthBudget) * sd.h0.maxCoeff() / sd.h0.minCoeff());
    double v = word_sum(*fine, sd.delta, f, x, t).value;
    double lim = hx / sd.sigma0 * f.integral(-t);
    out.t.push_back(t);
    out.value.push_back(v);
    out.limit.push_back(lim);
    out.relError.push_back(std::abs(v - lim) / std::abs(lim));
  }
  out.kendall = kendall_tau(out.t, out.relError);
  return out;
}

}  // namespace cusplab
