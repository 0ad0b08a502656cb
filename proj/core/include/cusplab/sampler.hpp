#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cusplab/transfer.hpp"

namespace cusplab {

// Backward orbit y_0 -> y_1 = g_0 y_0 -> ...; the forward itinerary of y_N is
// letters[N-1], letters[N-2], ... and T^k y_N = y_{N-k}.
struct SampledOrbit {
  std::vector<cplx> points;
  std::vector<Letter> letters;

  cplx terminal() const { return points.back(); }
  // Forward letters of the terminal point, outermost first.
  std::vector<Letter> forward_letters() const { return {letters.rbegin(), letters.rend()}; }
};

// Draws inverse branches with probability e^{F(gamma y)} by rejection from a
// product Zipf proposal over (k, m). Real and complex non-lattice presets.
class InvariantSampler {
 public:
  explicit InvariantSampler(const SpectralData& sd, bool audit = false);

  // Normalized weight of the branch with letter (k, m) at y.
  double weight(int k, int m, cplx y, double hy) const;
  // Sum of all normalized weights at y through the tail quadrature.
  double probability_sum(cplx y) const;

  Letter draw(std::mt19937_64& rng, cplx y, double hy) const;
  SampledOrbit orbit(std::mt19937_64& rng, int burnIn, int length) const;
  BoundaryPoint sample(std::mt19937_64& rng, int burnIn) const;

  double drift_tolerance = 1e-6;
  mutable long proposals = 0, accepted = 0, boundViolations = 0;

 private:
  const SpectralData* sd_;
  bool audit_;
  double bound_ = 0.0;  // weight <= bound * (|k||m|)^{-2 delta}
  double h(cplx x) const;
};

BoundaryPoint sample_invariant(const SpectralData& sd, std::uint64_t seed, int burnIn);

// Zipf variate on {1, 2, ...} with P(n) proportional to n^{-s}, s > 1.
long zipf_variate(std::mt19937_64& rng, double s);

}  // namespace cusplab
