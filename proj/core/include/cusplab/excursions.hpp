#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cusplab/sampler.hpp"
#include "cusplab/transfer.hpp"

namespace cusplab {

// Smallest return time over the whole branch family.
double min_return_time(const Coding& coding);

struct StoppingTime {
  int l = 0;
  double residual = 0.0;  // Ret_{l+1} - t
};

// Left-closed convention Ret_l <= t < Ret_{l+1} over a sequence of single-step returns.
StoppingTime stopping_time(const std::vector<double>& returns, double t, size_t offset = 0);
// Decodes x against the full branch family.
StoppingTime stopping_time(const Coding& coding, cplx x, double t, int maxSteps = 400);

// Forward itinerary of a sampled point with its single-step return times.
struct ForwardOrbit {
  std::vector<Letter> letters;
  std::vector<double> returns;
};
// Forward orbit of orbit.points[index] (index defaults to the terminal point).
ForwardOrbit forward_orbit(const Coding& coding, const SampledOrbit& orbit, int index = -1);
ForwardOrbit forward_orbit(const Coding& coding, cplx x, int depth);

struct ExcursionRecord {
  ForwardOrbit seed;
  double t = 0.0;
  int m = 1;
  int n = 0;
  double R = 0.0;
  std::vector<int> stopping;      // l(T^{km} x, t), k = 1..n
  std::vector<double> residuals;  // Ret_{l+1}(T^{km} x) - t
  std::vector<int> word;          // k with T^{km} x outside the window
  std::vector<std::vector<int>> intervals;
};

ExcursionRecord classify_type(const Coding& coding, const ForwardOrbit& orbit, double t, int m, int n, double R);
ExcursionRecord classify_type(const Coding& coding, cplx x, double t, int m, int n, double R);

struct LDPReport {
  int m = 1;
  double R0 = 0.0;
  std::vector<double> tList;
  std::vector<int> nList;
  std::vector<double> kappaGrid;
  // prob[t][kappa][n] with Wilson bounds.
  std::vector<std::vector<std::vector<double>>> prob, low, high;
  std::vector<std::vector<double>> decay;  // -slope of log prob against n
  std::vector<std::vector<double>> r2;
  std::vector<std::vector<int>> fitPoints;
  std::vector<double> hitRate;  // per t: fraction of (sample, j) in the window
  double kappaHat = 0.0;        // largest kappa with positive decay at every t, 0 if none
  size_t samples = 0;
  size_t escapes = 0;
  bool flagged = false;  // escapes above 1% of the samples
};

LDPReport ldp_monte_carlo(const SpectralData& sd, const std::vector<double>& tList, int m, const std::vector<int>& nList,
                          double R0, size_t samples, std::uint64_t seed, int workers = 1);

struct ResidualReport {
  double t = 0.0;
  std::vector<double> R;
  std::vector<double> prob, stderr_;
  std::vector<char> used;  // cell entered the fit
  double eps = 0.0;        // -slope
  double r2 = 0.0;
  size_t samples = 0;
  bool flagged = false;    // zero cells dropped
};

ResidualReport residual_tail(const SpectralData& sd, double t, const std::vector<double>& Rgrid, size_t samples,
                             std::uint64_t seed, int workers = 1);

// Conformal-measure residual probability two ways: direct stopping of sampled points and the
// renewal identity through backward chains.
struct ResidualIdentity {
  double t = 0.0, R = 0.0;
  double direct = 0.0, directErr = 0.0;
  double renewal = 0.0, renewalErr = 0.0;
  double zscore = 0.0;
};
ResidualIdentity residual_identity(const SpectralData& sd, double t, double R, size_t samples, std::uint64_t seed,
                                   int workers = 1);

// Compactly supported profile on [lo, hi].
struct Profile {
  std::function<double(double)> f;
  double lo = -1.0, hi = 1.0;
  double sup = 1.0;
  double integral(double from) const;  // integral of f over [from, infinity)
};
// exp(-1/(1-s^2)) scaled to support [center - width, center + width].
Profile standard_bump(double center = 0.0, double width = 1.0, double scale = 1.0);

struct RenewalSum {
  double value = 0.0;
  int depth = 0;            // required word length
  size_t terms = 0;
  double alphabetBound = 0.0;  // bound on the mass of words using letters beyond the cutoff
};

// Exhaustive sum over words of the explicit alphabet, pruned once Ret_n exceeds t + hi.
RenewalSum renewal_sum(const SpectralData& sd, const Profile& f, cplx x, double t, int depthBudget);

struct RenewalCheck {
  std::vector<double> t, value, limit, relError;
  double kendall = 0.0;
};
// Exact word sums on an alphabet refined below e^{-(max t + hi)}, against h0(x)/sigma0 times the integral of f.
RenewalCheck renewal_limit_check(const SpectralData& sd, const Profile& f, cplx x, const std::vector<double>& tGrid,
                                 int depthBudget = 64);

}  // namespace cusplab
