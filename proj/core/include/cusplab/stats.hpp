#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace cusplab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slopeStderr = 0.0;
  int points = 0;
};

// Weighted least squares y ~ intercept + slope * x (weights default to 1).
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& w = {});

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

struct Interval {
  double low, high;
};
Interval wilson_interval(double successes, double trials, double z = 1.96);

// Upper tail probability of a chi-square statistic.
double chi_square_sf(double statistic, double dof);

struct MeanStd {
  double mean = 0.0;
  double stderr_ = 0.0;
  double count = 0.0;
};

// Streaming sums kept in a fixed order for reproducible reductions.
struct Accumulator {
  double n = 0.0, sum = 0.0, sumsq = 0.0;
  void add(double v) {
    n += 1.0;
    sum += v;
    sumsq += v * v;
  }
  void merge(const Accumulator& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  MeanStd summary() const;
};

// Runs fn(chunk) for chunk = 0..chunks-1 on `workers` threads; results are
// written per chunk so any reduction in chunk order is worker-independent.
void parallel_chunks(int chunks, int workers, const std::function<void(int)>& fn);

// Seed for a given (base seed, stream, chunk) triple.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk);

}  // namespace cusplab
