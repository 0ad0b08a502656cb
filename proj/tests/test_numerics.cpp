#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <random>
#include <set>

#include "cusplab/chebyshev.hpp"
#include "cusplab/series.hpp"
#include "cusplab/stats.hpp"

using namespace cusplab;

namespace {

// Direct partial sum plus an Euler-Maclaurin tail with three correction terms.
cplx hurwitz_brute(cplx s, double a, int N = 2000) {
  cplx sum = 0.0;
  for (int n = 0; n < N; ++n) sum += std::pow(n + a, -s);
  const double x = N + a;
  cplx fx = std::pow(x, -s);
  sum += x * fx / (s - 1.0) + 0.5 * fx;
  sum += s * fx / (12.0 * x);
  sum -= s * (s + 1.0) * (s + 2.0) * fx / (720.0 * x * x * x);
  return sum;
}

}  // namespace

TEST_CASE("chebyshev interpolation is exact on polynomials") {
  ChebGrid1D g(-0.7, 1.3, 9);
  auto p = [](double x) { return 1.0 - 2.0 * x + 0.5 * std::pow(x, 5) - std::pow(x, 8); };
  Eigen::VectorXd v(g.size());
  for (int j = 0; j < g.size(); ++j) v[j] = p(g.node(j));
  for (double x : {-0.7, -0.2, 0.0, 0.4, 1.1, 1.3}) {
    Eigen::VectorXd r = g.row(x);
    CHECK(r.sum() == doctest::Approx(1.0));
    CHECK(r.dot(v) == doctest::Approx(p(x)).epsilon(1e-12));
  }
  // Node rows are unit vectors.
  Eigen::VectorXd r = g.row(g.node(3));
  CHECK(r[3] == doctest::Approx(1.0));

  CollocationGrid box(-1.0, 1.0, -0.5, 0.5, 6, 5);
  CHECK(box.size() == 30);
  auto q = [](cplx z) { return std::pow(z.real(), 5) * z.imag() * z.imag() - z.imag(); };
  Eigen::VectorXd vals(box.size());
  for (int i = 0; i < box.size(); ++i) vals[i] = q(box.node(i));
  cplx y(0.31, -0.12);
  CHECK(box.interpolate(vals, y) == doctest::Approx(q(y)).epsilon(1e-12));
  CHECK(box.contains(y));
  CHECK_FALSE(box.contains(cplx(0.0, 0.6)));
}

TEST_CASE("hurwitz zeta against independent evaluations") {
  for (double s : {1.3, 2.0, 3.7}) CHECK(hurwitz_zeta(s, 1.0).real() == doctest::Approx(boost::math::zeta(s)).epsilon(1e-12));
  for (cplx s : {cplx(1.5, 0.0), cplx(2.2, 3.0), cplx(1.1, -7.0)})
    for (double a : {0.3, 1.0, 17.5}) {
      cplx ref = hurwitz_brute(s, a);
      CHECK(std::abs(hurwitz_zeta(s, a) - ref) <= 1e-10 * std::abs(ref));
    }
  // Shift identity zeta(s, a) = a^{-s} + zeta(s, a + 1).
  cplx s(2.4, 1.5);
  CHECK(std::abs(hurwitz_zeta(s, 0.6) - std::pow(0.6, -s) - hurwitz_zeta(s, 1.6)) <= 1e-12);
  // Derivative against a central difference.
  const double h = 1e-5;
  cplx fd = (hurwitz_zeta(s + h, 2.5) - hurwitz_zeta(s - h, 2.5)) / (2 * h);
  CHECK(std::abs(hurwitz_zeta_ds(s, 2.5) - fd) <= 1e-7 * std::abs(fd));
}

TEST_CASE("tail rule integrates the model class") {
  for (cplx sigma : {cplx(0.75, 0.0), cplx(0.9, 4.0)}) {
    const int K = 6;
    TailRule r = make_tail_rule(K, sigma, 8);
    CHECK(r.nodes.size() == r.coef.size());
    // f(k) = k^{-2 sigma} (1 + 2/k - 3/k^2 + 1/k^5)
    auto f = [&](double k) { return std::pow(k, -2.0 * sigma) * (1.0 + 2.0 / k - 3.0 / (k * k) + std::pow(k, -5)); };
    cplx viaRule = 0.0;
    for (size_t j = 0; j < r.nodes.size(); ++j) viaRule += r.coef[j] * f(r.nodes[j]);
    cplx s2 = 2.0 * sigma;
    cplx exact = hurwitz_zeta(s2, K + 1) + 2.0 * hurwitz_zeta(s2 + 1.0, K + 1) - 3.0 * hurwitz_zeta(s2 + 2.0, K + 1) +
                 hurwitz_zeta(s2 + 5.0, K + 1);
    CHECK(std::abs(viaRule - exact) <= 1e-10 * std::abs(exact));
    // Coefficient derivative against a central difference.
    const double h = 1e-6;
    TailRule up = make_tail_rule(K, sigma + h, 8), dn = make_tail_rule(K, sigma - h, 8);
    for (size_t j = 0; j < r.coef.size(); ++j)
      CHECK(std::abs(r.dcoef[j] - (up.coef[j] - dn.coef[j]) / (2 * h)) <= 1e-4 * (1 + std::abs(r.dcoef[j])));
  }
}

TEST_CASE("line fits and rank statistics") {
  std::vector<double> x{0, 1, 2, 3, 4}, y;
  for (double v : x) y.push_back(2.5 - 0.5 * v);
  LinearFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(f.intercept == doctest::Approx(2.5));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.points == 5);
  // Zero weight drops an outlier.
  std::vector<double> yo = y, w(5, 1.0);
  yo[4] = 100.0;
  w[4] = 0.0;
  CHECK(fit_line(x, yo, w).slope == doctest::Approx(-0.5));

  CHECK(kendall_tau(x, x) == doctest::Approx(1.0));
  CHECK(kendall_tau(x, y) == doctest::Approx(-1.0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  std::vector<double> a(40), b(40);
  for (int i = 0; i < 40; ++i) a[i] = N(rng), b[i] = a[i] + N(rng);
  int conc = 0, disc = 0;
  for (int i = 0; i < 40; ++i)
    for (int j = i + 1; j < 40; ++j) ((a[i] - a[j]) * (b[i] - b[j]) > 0 ? conc : disc)++;
  CHECK(kendall_tau(a, b) == doctest::Approx(double(conc - disc) / (conc + disc)));

  Interval wi = wilson_interval(5, 10);
  CHECK(wi.low == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(wi.high == doctest::Approx(0.7634).epsilon(1e-3));
  Interval zero = wilson_interval(0, 50);
  CHECK(zero.low == doctest::Approx(0.0));
  CHECK(zero.high > 0.0);

  for (double dof : {1.0, 4.0, 30.0})
    for (double s : {0.5, 3.0, 40.0}) {
      boost::math::chi_squared dist(dof);
      CHECK(chi_square_sf(s, dof) == doctest::Approx(boost::math::cdf(boost::math::complement(dist, s))).epsilon(1e-10));
    }
}

TEST_CASE("accumulator summary") {
  Accumulator acc, left, right;
  for (int i = 1; i <= 10; ++i) {
    acc.add(i);
    (i <= 4 ? left : right).add(i);
  }
  left.merge(right);
  MeanStd m = acc.summary();
  CHECK(m.mean == doctest::Approx(5.5));
  CHECK(m.count == 10);
  CHECK(m.stderr_ == doctest::Approx(std::sqrt(55.0 / 6.0) / std::sqrt(10.0)));
  CHECK(left.summary().mean == doctest::Approx(m.mean));
}

TEST_CASE("parallel chunks are worker independent") {
  auto runWith = [](int workers) {
    std::vector<double> out(64);
    parallel_chunks(64, workers, [&](int c) {
      std::mt19937_64 rng(stream_seed(9, 2, c));
      double s = 0.0;
      for (int i = 0; i < 1000; ++i) s += std::generate_canonical<double, 53>(rng);
      out[c] = s;
    });
    return out;
  };
  CHECK(runWith(1) == runWith(4));
  std::set<std::uint64_t> seeds;
  for (std::uint64_t st = 0; st < 4; ++st)
    for (std::uint64_t c = 0; c < 64; ++c) seeds.insert(stream_seed(1, st, c));
  CHECK(seeds.size() == 256);
  CHECK(stream_seed(1, 0, 0) != stream_seed(2, 0, 0));
}
