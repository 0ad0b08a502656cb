#include "cusplab/sampler.hpp"

#include <cmath>

#include "cusplab/errors.hpp"

namespace cusplab {

namespace {
constexpr long kMaxLetter = 1L << 30;
}  // namespace

long zipf_variate(std::mt19937_64& rng, double s) {
  // Devroye's rejection method.
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double b = std::pow(2.0, s - 1.0);
  while (true) {
    double u = 1.0 - U(rng), v = U(rng);
    double x = std::floor(std::pow(u, -1.0 / (s - 1.0)));
    if (!(x < 9.0e15)) continue;
    double t = std::pow(1.0 + 1.0 / x, s - 1.0);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<long>(x);
  }
}

InvariantSampler::InvariantSampler(const SpectralData& sd, bool audit) : sd_(&sd), audit_(audit) {
  const Coding& cd = *sd.coding;
  if (cd.preset.is_lattice()) throw ConfigError("invariant sampling is not available for the lattice preset");
  double alpha = cd.preset.mu * std::abs(cd.preset.c) / 2.0 - 1.0;
  if (alpha <= 0) throw ConfigError("sampler bound needs mu |c| > 2");
  double ratio = sd.h0.maxCoeff() / sd.h0.minCoeff();
  bound_ = 1.05 * ratio * std::pow(alpha, -2.0 * sd.delta) / sd.lambda0;
}

double InvariantSampler::h(cplx x) const { return sd_->h_at(x); }

double InvariantSampler::weight(int k, int m, cplx y, double hy) const {
  GroupElement g = sd_->coding->letter_element(k, m);
  return std::pow(g.derivative(y), sd_->delta) * h(g.apply(y)) / (sd_->lambda0 * hy);
}

double InvariantSampler::probability_sum(cplx y) const {
  double hy = h(y), s = 0.0;
  for (const QuadEntry& e : sd_->quad)
    s += e.coef.real() * std::pow(e.g.derivative(y), sd_->delta) * h(e.g.apply(y));
  return s / (sd_->lambda0 * hy);
}

Letter InvariantSampler::draw(std::mt19937_64& rng, cplx y, double hy) const {
  if (audit_) {
    double dev = std::abs(probability_sum(y) - 1.0);
    if (dev > drift_tolerance) throw NormalizationDrift("branch probabilities do not sum to 1", dev);
  }
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double s = 2.0 * sd_->delta;
  while (true) {
    ++proposals;
    long k = zipf_variate(rng, s), m = zipf_variate(rng, s);
    if (k > kMaxLetter || m > kMaxLetter) continue;
    if (U(rng) < 0.5) k = -k;
    if (U(rng) < 0.5) m = -m;
    double env = bound_ * std::pow(double(std::labs(k)) * double(std::labs(m)), -s);
    double w = weight(int(k), int(m), y, hy);
    if (w > env) ++boundViolations;
    if (U(rng) * env <= w) {
      ++accepted;
      return Letter{int(k), int(m), 0, 0};
    }
  }
}

SampledOrbit InvariantSampler::orbit(std::mt19937_64& rng, int burnIn, int length) const {
  SampledOrbit o;
  cplx y = sd_->coding->domain.anchor;
  double hy = h(y);
  o.points.push_back(y);
  for (int i = 0; i < burnIn + length; ++i) {
    Letter l = draw(rng, y, hy);
    y = sd_->coding->element(l).apply(y);
    hy = h(y);
    if (i >= burnIn) {
      o.letters.push_back(l);
      o.points.push_back(y);
    } else {
      o.points.back() = y;
    }
  }
  return o;
}

BoundaryPoint InvariantSampler::sample(std::mt19937_64& rng, int burnIn) const {
  return BoundaryPoint(orbit(rng, burnIn, 0).terminal());
}

BoundaryPoint sample_invariant(const SpectralData& sd, std::uint64_t seed, int burnIn) {
  std::mt19937_64 rng(seed);
  return InvariantSampler(sd).sample(rng, burnIn);
}

}  // namespace cusplab
