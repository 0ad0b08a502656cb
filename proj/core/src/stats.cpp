#include "cusplab/stats.hpp"

#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>
#include <thread>

namespace cusplab {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  LinearFit fit;
  const int n = static_cast<int>(x.size());
  fit.points = n;
  if (n < 2) return fit;
  double sw = 0, sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
    syy += wi * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (int i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += wi * r * r;
  }
  fit.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) fit.slopeStderr = std::sqrt(sse / (n - 2) / sxx);
  return fit;
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double concordant = 0, discordant = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double s = (x[i] - x[j]) * (y[i] - y[j]);
      if (s > 0) concordant += 1;
      if (s < 0) discordant += 1;
    }
  double pairs = 0.5 * n * (n - 1.0);
  return pairs > 0 ? (concordant - discordant) / pairs : 0.0;
}

Interval wilson_interval(double k, double n, double z) {
  if (n <= 0) return {0.0, 1.0};
  double p = k / n, z2 = z * z;
  double den = 1.0 + z2 / n;
  double center = (p + z2 / (2 * n)) / den;
  double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double chi_square_sf(double statistic, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

MeanStd Accumulator::summary() const {
  MeanStd out;
  out.count = n;
  if (n <= 0) return out;
  out.mean = sum / n;
  if (n > 1) {
    double var = std::max(0.0, (sumsq - n * out.mean * out.mean) / (n - 1));
    out.stderr_ = std::sqrt(var / n);
  }
  return out;
}

void parallel_chunks(int chunks, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || chunks <= 1) {
    for (int c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, chunks); ++w) {
    pool.emplace_back([&] {
      for (int c = next++; c < chunks; c = next++) fn(c);
    });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(chunk),
                    static_cast<std::uint32_t>(chunk >> 32)};
  std::uint64_t out[1];
  std::uint32_t parts[2];
  seq.generate(parts, parts + 2);
  out[0] = (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
  return out[0];
}

}  // namespace cusplab
