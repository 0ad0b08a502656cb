#include "cusplab/flow.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cusplab/errors.hpp"
#include "cusplab/excursions.hpp"
#include "cusplab/stats.hpp"

namespace cusplab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}
}  // namespace

BaseItinerary base_itinerary(const Coding& coding, const SampledOrbit& orbit) {
  BaseItinerary b;
  const int L = (int)orbit.letters.size();
  for (int k = 0; k <= L; ++k) b.points.push_back(orbit.points[L - k]);
  for (int k = 0; k < L; ++k) {
    const Letter& l = orbit.letters[L - k - 1];
    GroupElement g = coding.element(l);
    cplx y = orbit.points[L - k - 1];
    b.letters.push_back(l);
    b.returns.push_back(std::log(std::norm(g.denominator(y))));
    b.angles.push_back(holonomy_angle(g, y));
  }
  return b;
}

BaseItinerary base_itinerary(const Coding& coding, cplx x, int depth) {
  BaseItinerary b;
  b.points.push_back(x);
  for (const StepResult& r : itinerary(coding, x, depth, false)) {
    b.letters.push_back(r.letter);
    b.returns.push_back(r.ret);
    b.angles.push_back(holonomy_angle(r.g, r.image));
    b.points.push_back(r.image);
  }
  return b;
}

FlowPoint make_flow_point(std::shared_ptr<const BaseItinerary> base, double theta, double s) {
  if (!base || base->returns.empty()) throw ItineraryError("flow point needs at least one base step");
  if (!(s >= 0.0 && s < base->returns[0])) throw ConfigError("height outside [0, Ret(x))");
  FlowPoint p;
  p.base = std::move(base);
  p.theta = wrap(theta);
  p.s = s;
  return p;
}

FlowPoint flow_step(const FlowPoint& p, double t) {
  if (t < 0) throw ConfigError("flow time must be nonnegative");
  FlowPoint q = p;
  q.s += t;
  const BaseItinerary& b = *q.base;
  double theta = q.theta;
  while (q.index < b.returns.size() && q.s >= b.returns[q.index]) {
    q.s -= b.returns[q.index];
    theta += b.angles[q.index];
    ++q.index;
  }
  if (q.index >= b.returns.size()) throw ItineraryError("itinerary exhausted at flow time " + std::to_string(t));
  q.theta = wrap(theta);
  return q;
}

// ---------------------------------------------------------------- observables

double ObservableTable::base_value(cplx x) const { return base.size() ? grid.interpolate(base, x) : 1.0; }

double ObservableTable::fiber_value(double theta) const {
  if (!fiberDependent) return 1.0;
  cplx v = 0.0;
  for (int n = -8; n <= 8; ++n) v += fiber[n + 8] * std::exp(cplx(0.0, n * theta));
  return v.real();
}

double ObservableTable::height_value(double u) const {
  if (height.empty()) return 1.0;
  double a = std::acos(std::clamp(2.0 * u - 1.0, -1.0, 1.0)), v = 0.0;
  for (size_t k = 0; k < height.size(); ++k) v += height[k] * std::cos(k * a);
  return v;
}

double ObservableTable::operator()(cplx x, double theta, double s, double ret) const {
  return base_value(x) * fiber_value(theta) * height_value(s / ret);
}

ObservableTable ObservableTable::constant(double v) {
  ObservableTable t;
  t.height = {v};
  return t;
}

ObservableTable ObservableTable::fiber_cosine(int n) {
  if (n < 1 || n > 8) throw ConfigError("fiber modes are limited to |n| <= 8");
  ObservableTable t;
  t.set_fiber_mode(n, 0.5).set_fiber_mode(-n, 0.5);
  return t;
}

ObservableTable& ObservableTable::set_fiber_mode(int n, cplx c) {
  if (std::abs(n) > 8) throw ConfigError("fiber modes are limited to |n| <= 8");
  if (!fiberDependent) fiber.fill(0.0);
  fiberDependent = true;
  fiber[n + 8] = c;
  return *this;
}

// ---------------------------------------------------------------- correlations

namespace {

void damped_cosine_fit(CorrelationReport& rep) {
  const auto& r = rep.rows;
  const int T = (int)r.size();
  if (T < 5) return;
  const double dt = r[1].t - r[0].t;
  for (int k = 1; k < T; ++k)
    if (std::abs(r[k].t - r[k - 1].t - dt) > 1e-9 * std::max(1.0, dt)) return;
  // C_{k+2} = p1 C_{k+1} + p2 C_k
  Eigen::MatrixXd A(T - 2, 2);
  Eigen::VectorXd y(T - 2);
  for (int k = 0; k + 2 < T; ++k) {
    A(k, 0) = r[k + 1].estimate;
    A(k, 1) = r[k].estimate;
    y[k] = r[k + 2].estimate;
  }
  Eigen::Vector2d p = A.colPivHouseholderQr().solve(y);
  const double disc = p[0] * p[0] + 4.0 * p[1];
  if (disc >= 0 || p[1] >= 0) return;
  const double modulus = std::sqrt(-p[1]);
  rep.oscillatory = true;
  rep.oscEta = -std::log(modulus) / dt;
  rep.omega = std::atan2(std::sqrt(-disc), p[0]) / dt;
}

}  // namespace

std::string CorrelationReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "t,estimate,stderr,flagged\n";
  for (const CorrelationRow& r : rows) os << r.t << "," << r.estimate << "," << r.stderr_ << "," << r.flagged << "\n";
  os << "# eta=" << eta << " r2=" << r2 << " points=" << fitPoints << " samples=" << samples << "\n";
  if (oscillatory) os << "# damped_cosine eta=" << oscEta << " omega=" << omega << "\n";
  return os.str();
}

WeightedFlowPoint sample_flow_point(const SpectralData& sd, const InvariantSampler& sampler, std::mt19937_64& rng,
                                    double horizon) {
  const Coding& cd = *sd.coding;
  const int L = (int)std::ceil(std::max(horizon, 0.0) / min_return_time(cd)) + 2;
  auto base = std::make_shared<BaseItinerary>(base_itinerary(cd, sampler.orbit(rng, 20, L)));
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double ret = base->returns[0];
  double theta = cd.domain.dim == 2 ? kTwoPi * U(rng) : 0.0;
  double s = ret * U(rng);
  return {make_flow_point(base, theta, s), ret / sd.sigma0};
}

CorrelationReport correlation_estimate(const SpectralData& sd, const ObservableTable& phi, const ObservableTable& psi,
                                       const std::vector<double>& tGrid, size_t samples, std::uint64_t seed,
                                       int workers) {
  if (tGrid.empty() || samples < 2) throw ConfigError("empty correlation design");
  for (double t : tGrid)
    if (t < 0) throw ConfigError("correlation times must be nonnegative");
  const double horizon = *std::max_element(tGrid.begin(), tGrid.end());
  InvariantSampler sampler(sd);
  const size_t T = tGrid.size();
  std::vector<double> w(samples), ps(samples), ph(samples * T);
  const int chunk = 512, chunks = (int)((samples + chunk - 1) / chunk);
  parallel_chunks(chunks, workers, [&](int c) {
    std::mt19937_64 rng(stream_seed(seed, 61, c));
    for (size_t i = (size_t)c * chunk; i < std::min(samples, (size_t)(c + 1) * chunk); ++i) {
      WeightedFlowPoint wp = sample_flow_point(sd, sampler, rng, horizon);
      w[i] = wp.weight;
      ps[i] = psi(wp.point);
      for (size_t k = 0; k < T; ++k) ph[i * T + k] = phi(flow_step(wp.point, tGrid[k]));
    }
  });
  CorrelationReport rep;
  rep.samples = samples;
  double W = 0.0, B = 0.0;
  for (size_t i = 0; i < samples; ++i) W += w[i], B += w[i] * ps[i];
  B /= W;
  rep.meanPsi = B;
  const double N = (double)samples, scale = N / W;
  std::vector<double> xs, ys, wts;
  for (size_t k = 0; k < T; ++k) {
    double A = 0.0;
    for (size_t i = 0; i < samples; ++i) A += w[i] * ph[i * T + k];
    A /= W;
    if (k == 0) rep.meanPhi = A;
    Accumulator acc;
    for (size_t i = 0; i < samples; ++i) acc.add(scale * w[i] * (ph[i * T + k] - A) * (ps[i] - B));
    MeanStd ms = acc.summary();
    CorrelationRow row{tGrid[k], ms.mean, ms.stderr_, false};
    row.flagged = !(std::abs(row.estimate) > 2.0 * row.stderr_);
    rep.rows.push_back(row);
    if (!row.flagged) {
      xs.push_back(row.t);
      ys.push_back(std::log(std::abs(row.estimate)));
      wts.push_back(std::pow(row.estimate / row.stderr_, 2));
    }
  }
  rep.fitPoints = (int)xs.size();
  if (xs.size() >= 2) {
    LinearFit f = fit_line(xs, ys, wts);
    rep.eta = -f.slope;
    rep.r2 = f.r2;
  }
  damped_cosine_fit(rep);
  return rep;
}

// ---------------------------------------------------------------- Laplace coefficients

cplx laplace_coefficient(const ObservableTable& phi, cplx xi, int n, cplx x, double ret) {
  if (std::abs(n) > 8) return 0.0;
  cplx mode = phi.fiberDependent ? phi.fiber[n + 8] : (n == 0 ? cplx(1.0) : cplx(0.0));
  if (mode == 0.0 || !(ret > 0)) return 0.0;
  using Rule = boost::math::quadrature::gauss<double, 15>;
  const int panels = (int)std::ceil(std::abs(xi.imag()) * ret / std::numbers::pi) + 1;
  const double h = ret / panels;
  cplx sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double a = p * h;
    auto re = [&](double s) { return (phi.height_value(s / ret) * std::exp(-xi * s)).real(); };
    auto im = [&](double s) { return (phi.height_value(s / ret) * std::exp(-xi * s)).imag(); };
    sum += cplx(Rule::integrate(re, a, a + h), Rule::integrate(im, a, a + h));
  }
  return phi.base_value(x) * mode * sum;
}

cplx laplace_coefficient(const Coding& coding, const ObservableTable& phi, cplx xi, int n, cplx x) {
  return laplace_coefficient(phi, xi, n, x, coding.decode(x).ret);
}

double laplace_operator_norm(const SpectralData& sd, const ObservableTable& phi, double a, double b, int n) {
  size_t ai = sd.aGrid.size();
  for (size_t i = 0; i < sd.aGrid.size(); ++i)
    if (std::abs(sd.aGrid[i] - a) < 1e-12) ai = i;
  if (ai == sd.aGrid.size()) throw ConfigError("twist a is not on the a-grid");
  const Coding& cd = *sd.coding;
  const cplx sigma(sd.delta + a, b), xi(a, b);
  Quadrature quad = cd.quadrature(sigma);
  double worst = 0.0;
  for (int i = 0; i < sd.grid.size(); ++i) {
    cplx x = sd.grid.node(i);
    double hx = sd.h_at(x, ai);
    cplx acc = 0.0;
    for (const QuadEntry& e : quad) {
      cplx gx = e.g.apply(x);
      double ret = std::log(std::norm(e.g.denominator(x)));
      acc += e.coef * branch_weight(e.g, x, sigma, n) * sd.h_at(gx, ai) * laplace_coefficient(phi, -xi, n, gx, ret);
    }
    worst = std::max(worst, std::abs(acc) / (sd.lambdaA[ai] * hx));
  }
  return worst;
}

}  // namespace cusplab
