#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cusplab/sampler.hpp"
#include "cusplab/transfer.hpp"

namespace cusplab {

// Forward base orbit with per-step return times and fiber rotations.
struct BaseItinerary {
  std::vector<cplx> points;     // points[k] = T^k x
  std::vector<Letter> letters;  // letters[k] labels the branch containing points[k]
  std::vector<double> returns;  // Ret(points[k])
  std::vector<double> angles;   // fiber rotation fired at step k
};

BaseItinerary base_itinerary(const Coding& coding, const SampledOrbit& orbit);
// Forward decoding of x; precision degrades with depth through expansion.
BaseItinerary base_itinerary(const Coding& coding, cplx x, int depth);

struct FlowPoint {
  std::shared_ptr<const BaseItinerary> base;
  size_t index = 0;    // current base point base->points[index]
  double theta = 0.0;  // fiber angle in [0, 2 pi), unused in d = 1
  double s = 0.0;      // height in [0, Ret)

  cplx x() const { return base->points[index]; }
  double ret() const { return base->returns[index]; }
};

FlowPoint make_flow_point(std::shared_ptr<const BaseItinerary> base, double theta, double s);
// Throws ItineraryError once the itinerary runs out.
FlowPoint flow_step(const FlowPoint& p, double t);

// Product observable base(x) * fiber(theta) * height(s / Ret(x)).
struct ObservableTable {
  NodeGrid grid;
  Eigen::VectorXd base;                  // node values; empty means 1
  std::array<cplx, 17> fiber{};          // coefficient of e^{i n theta}, n = -8..8
  std::vector<double> height;            // Chebyshev coefficients on [0, 1]; empty means 1
  bool fiberDependent = false;

  double base_value(cplx x) const;
  double fiber_value(double theta) const;
  double height_value(double u) const;
  double operator()(cplx x, double theta, double s, double ret) const;
  double operator()(const FlowPoint& p) const { return (*this)(p.x(), p.theta, p.s, p.ret()); }

  static ObservableTable constant(double v);
  // cos(n theta), or cos for n = 1.
  static ObservableTable fiber_cosine(int n = 1);
  ObservableTable& set_fiber_mode(int n, cplx c);
};

struct CorrelationRow {
  double t = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  bool flagged = false;  // relative error above 50%
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  double eta = 0.0;  // log-linear fit of |estimate|
  double r2 = 0.0;
  int fitPoints = 0;
  // Damped cosine A e^{-eta t} cos(omega t + phase) by two-term linear prediction (equal spacing only).
  bool oscillatory = false;
  double oscEta = 0.0, omega = 0.0;
  size_t samples = 0;
  double meanPhi = 0.0, meanPsi = 0.0;
  std::string to_csv() const;
};

// Samples (x ~ nu, theta uniform, s uniform in [0, Ret)) with weight Ret(x) / sigma0,
// followed far enough to flow for time horizon.
struct WeightedFlowPoint {
  FlowPoint point;
  double weight = 1.0;
};
WeightedFlowPoint sample_flow_point(const SpectralData& sd, const InvariantSampler& sampler, std::mt19937_64& rng,
                                    double horizon);

// Covariance of phi o T_t against psi under the suspension measure, with a decay fit over rows
// whose estimate clears two standard errors.
CorrelationReport correlation_estimate(const SpectralData& sd, const ObservableTable& phi, const ObservableTable& psi,
                                       const std::vector<double>& tGrid, size_t samples, std::uint64_t seed,
                                       int workers = 1);

// Height integral of phi against e^{-xi s} over [0, ret), times the n-th fiber coefficient.
cplx laplace_coefficient(const ObservableTable& phi, cplx xi, int n, cplx x, double ret);
// Same with ret decoded from x.
cplx laplace_coefficient(const Coding& coding, const ObservableTable& phi, cplx xi, int n, cplx x);

// Sup over nodes of the normalized operator at (a, b, n) applied to the coefficient at -xi.
double laplace_operator_norm(const SpectralData& sd, const ObservableTable& phi, double a, double b, int n);

}  // namespace cusplab
