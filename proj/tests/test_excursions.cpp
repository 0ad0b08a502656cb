#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cusplab/errors.hpp"
#include "cusplab/excursions.hpp"

using namespace cusplab;

namespace {

const SpectralData& sd() {
  static const SpectralData s = [] {
    auto c = std::make_shared<const Coding>(build_alphabet(load_preset("two_parabolic_real", {3, 3}), 1e-3));
    FindDeltaOptions o;
    o.degree = 16;
    return find_delta(c, o);
  }();
  return s;
}

// Independent recursion over all explicit words whose return stays below the profile support.
double brute_word_sum(const Coding& c, double delta, const Profile& f, cplx x, double t) {
  std::function<double(const GroupElement&)> rec = [&](const GroupElement& g) {
    double ret = -std::log(g.derivative(x));
    if (ret > t + f.hi) return 0.0;
    double s = std::pow(g.derivative(x), delta) * f.f(ret - t);
    for (const Branch& b : c.branches) s += rec(g * b.g);
    return s;
  };
  return rec(GroupElement::identity());
}

}  // namespace

TEST_CASE("stopping time convention") {
  std::vector<double> rets{1.0, 2.0, 3.0};
  CHECK(stopping_time(rets, 0.5).l == 0);
  CHECK(stopping_time(rets, 0.5).residual == doctest::Approx(0.5));
  StoppingTime at = stopping_time(rets, 1.0);  // left-closed
  CHECK(at.l == 1);
  CHECK(at.residual == doctest::Approx(2.0));
  CHECK(stopping_time(rets, 5.99).l == 2);
  CHECK(stopping_time(rets, 2.5, 1).l == 1);
  CHECK_THROWS_AS(stopping_time(rets, 6.0), OrbitEscape);
  CHECK_THROWS_AS(stopping_time(rets, 0.0), ConfigError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.1, 2.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r(30);
    for (double& v : r) v = U(rng);
    double t = 20.0 * std::generate_canonical<double, 53>(rng) + 1e-3;
    int l = 0;
    double acc = 0.0;
    while (acc + r[l] <= t) acc += r[l++];
    StoppingTime st = stopping_time(r, t);
    CHECK(st.l == l);
    CHECK(st.residual == doctest::Approx(acc + r[l] - t));
  }
}

TEST_CASE("stopping time along the coding") {
  const Coding& c = *sd().coding;
  cplx x = c.branches[3].g.apply(c.branches[1].g.apply(c.domain.anchor));
  ForwardOrbit f = forward_orbit(c, x, 2);
  REQUIRE(f.returns.size() == 2);
  CHECK(stopping_time(c, x, 0.5 * f.returns[0]).l == 0);
  StoppingTime edge = stopping_time(c, x, f.returns[0]);
  CHECK(edge.l == 1);
  CHECK(edge.residual == doctest::Approx(f.returns[1]));
  CHECK(min_return_time(c) > 0);
  CHECK(min_return_time(c) <= f.returns[0] + 1e-12);
}

TEST_CASE("excursion classification") {
  const Coding& c = *sd().coding;
  ForwardOrbit f;
  std::vector<double> rets{1.0, 1.5, 0.8, 2.2, 1.1, 0.9, 3.0, 1.4, 2.0, 1.0, 2.5, 1.2};
  for (size_t i = 0; i < rets.size(); ++i) f.letters.push_back(c.branches[i % 4].letter), f.returns.push_back(rets[i]);
  ExcursionRecord none = classify_type(c, f, 3.0, 1, 0, 1.0);
  CHECK(none.stopping.empty());
  CHECK(none.word.empty());
  CHECK_THROWS_AS(classify_type(c, f, 3.0, 0, 2, 1.0), ConfigError);
  ExcursionRecord rec = classify_type(c, f, 2.0, 2, 3, 50.0);
  REQUIRE(rec.stopping.size() == 3);
  for (int k = 1; k <= 3; ++k) {
    StoppingTime st = stopping_time(rets, 2.0, 2 * k);
    CHECK(rec.stopping[k - 1] == st.l);
    CHECK(rec.residuals[k - 1] == doctest::Approx(st.residual));
  }
  // A window of width 50 contains every cylinder.
  CHECK(rec.word.empty());
  CHECK(rec.intervals.empty());
  CHECK_THROWS_AS(classify_type(c, f, 2.0, 4, 3, 1.0), OrbitEscape);
}

TEST_CASE("large deviation sampler") {
  LDPReport rep = ldp_monte_carlo(sd(), {2.0, 3.0}, 2, {1, 4, 8}, 3.0, 400, 9);
  CHECK(rep.kappaGrid.size() == 16);
  CHECK(rep.samples == 400);
  REQUIRE(rep.prob.size() == 2);
  for (size_t ti = 0; ti < 2; ++ti)
    for (size_t k = 0; k < rep.kappaGrid.size(); ++k)
      for (size_t n = 0; n < 3; ++n) {
        double p = rep.prob[ti][k][n];
        CHECK(p >= 0);
        CHECK(p <= 1);
        CHECK(rep.low[ti][k][n] <= p + 1e-12);
        CHECK(p <= rep.high[ti][k][n] + 1e-12);
        if (k > 0) CHECK(p >= rep.prob[ti][k - 1][n]);  // monotone in kappa
      }
  for (double h : rep.hitRate) CHECK((h >= 0 && h <= 1));
  CHECK(rep.kappaHat >= 0);
  CHECK_THROWS_AS(ldp_monte_carlo(sd(), {}, 2, {1}, 3.0, 10, 1), ConfigError);
}

TEST_CASE("residual tail") {
  ResidualReport rep = residual_tail(sd(), 4.0, {0.0, 0.5, 1.0, 2.0}, 2000, 3);
  CHECK(rep.prob[0] == 1.0);
  for (size_t i = 1; i < rep.prob.size(); ++i) CHECK(rep.prob[i] <= rep.prob[i - 1]);
  CHECK(rep.eps > 0);
  ResidualReport again = residual_tail(sd(), 4.0, {0.0, 0.5, 1.0, 2.0}, 2000, 3);
  CHECK(again.prob == rep.prob);
}

TEST_CASE("bump profile") {
  Profile p = standard_bump(0.0, 1.0);
  CHECK(p.integral(-10.0) == doctest::Approx(0.443993816168079).epsilon(1e-10));
  CHECK(p.integral(0.0) == doctest::Approx(0.5 * 0.443993816168079).epsilon(1e-10));
  CHECK(p.integral(2.0) == 0.0);
  Profile q = standard_bump(1.0, 0.5, 2.0);
  CHECK(q.integral(-10.0) == doctest::Approx(0.443993816168079).epsilon(1e-10));
  CHECK(q.sup == doctest::Approx(2.0 * std::exp(-1.0)));
}

TEST_CASE("renewal word sums") {
  const SpectralData& s = sd();
  const Coding& c = *s.coding;
  const cplx x = c.domain.anchor;
  Profile zero{[](double) { return 0.0; }, -1.0, 1.0, 0.0};
  CHECK(renewal_sum(s, zero, x, 4.0, 64).value == 0.0);
  // t = 0 with a narrow bump keeps only the empty word.
  Profile narrow = standard_bump(0.0, 0.5);
  RenewalSum empty = renewal_sum(s, narrow, x, 0.0, 64);
  CHECK(empty.value == doctest::Approx(std::exp(-1.0)));
  CHECK(empty.terms == 1);

  Profile f = standard_bump(0.0, 1.0);
  for (double t : {2.5, 4.0, 5.5}) {
    RenewalSum r = renewal_sum(s, f, x, t, 64);
    CHECK(r.value == doctest::Approx(brute_word_sum(c, s.delta, f, x, t)).epsilon(1e-12));
    Profile f3 = standard_bump(0.0, 1.0, 3.0);
    CHECK(renewal_sum(s, f3, x, t, 64).value == doctest::Approx(3.0 * r.value).epsilon(1e-12));
  }
  CHECK_THROWS_AS(renewal_sum(s, f, x, -1.0, 64), ConfigError);
  try {
    renewal_sum(s, f, x, 30.0, 2);
    FAIL("expected a partial sum");
  } catch (const PartialSum& e) {
    CHECK(e.discardedBound > 0);
  }

  RenewalCheck chk = renewal_limit_check(s, f, x, {3.0, 5.0});
  REQUIRE(chk.t.size() == 2);
  CHECK(chk.limit[0] == doctest::Approx(chk.limit[1]));
  CHECK(chk.limit[0] == doctest::Approx(s.h_at(x) / s.sigma0 * f.integral(-1e300)).epsilon(1e-6));
  for (size_t i = 0; i < 2; ++i) CHECK(chk.relError[i] == doctest::Approx(std::abs(chk.value[i] / chk.limit[i] - 1.0)));
}
