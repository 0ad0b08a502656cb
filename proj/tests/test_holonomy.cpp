#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cusplab/errors.hpp"
#include "cusplab/holonomy.hpp"

using namespace cusplab;

namespace {

const Coding& real3() {
  static const Coding c = build_alphabet(load_preset("two_parabolic_real", {3, 3}), 1e-3);
  return c;
}

const Coding& cx3() {
  static const Coding c = build_alphabet(load_preset("two_parabolic_complex", {3, 0, 3}), 1e-3);
  return c;
}

std::vector<int> random_word(std::mt19937_64& rng, int len, int letters) {
  std::vector<int> w;
  for (int i = 0; i < len; ++i) w.push_back((int)(rng() % letters));
  return w;
}

// Point of the domain near the anchor.
cplx base_point(const Coding& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  cplx x = c.domain.anchor + cplx(U(rng), c.domain.dim == 2 ? U(rng) : 0.0);
  return c.domain.contains(x) ? x : c.domain.anchor;
}

}  // namespace

TEST_CASE("group law of A x M") {
  AMElement g{0.4, 5.9}, h{-1.2, 0.7}, k{2.0, 3.3};
  AMElement e = g * g.inverse();
  CHECK(e.t == doctest::Approx(0.0));
  CHECK(am_distance(e, AMElement::identity()) <= 1e-12);
  CHECK(am_distance((g * h) * k, g * (h * k)) <= 1e-12);
  CHECK((g * h).theta == doctest::Approx(wrap_angle(5.9 + 0.7)));
  CHECK(am_distance(g, h) == doctest::Approx(am_distance(h, g)));
  CHECK(wrap_angle(-0.5) == doctest::Approx(2 * std::numbers::pi - 0.5));
  AMElement neg{0.0, 2 * std::numbers::pi - 0.25};
  CHECK(neg.signed_theta() == doctest::Approx(-0.25));
}

TEST_CASE("holonomy of words") {
  std::mt19937_64 rng(1);
  for (const Coding* c : {&real3(), &cx3()}) {
    cplx x = base_point(*c, rng);
    AMElement e = holonomy_of_word(*c, {}, x);
    CHECK(e.t == 0.0);
    CHECK(e.theta == 0.0);
    for (int i = 0; i < 30; ++i) {
      std::vector<int> w1 = random_word(rng, 2, 8), w2 = random_word(rng, 2, 8), w = w1;
      w.insert(w.end(), w2.begin(), w2.end());
      cplx y = base_point(*c, rng);
      AMElement whole = holonomy_of_word(*c, w, y);
      AMElement split = holonomy_of_word(*c, w1, word_element(*c, w2).apply(y)) * holonomy_of_word(*c, w2, y);
      CHECK(am_distance(whole, split) <= 1e-9);
      if (c->domain.dim == 1) CHECK(whole.theta == 0.0);
      // Along the forward itinerary of g_w y the holonomy is the Birkhoff return plus the derivative angle;
      // forward decoding loses digits to the expansion.
      std::vector<Letter> forward;
      for (int b : w) forward.push_back(c->branches[b].letter);
      AMElement gen = generalized_holonomy(*c, forward, word_element(*c, w).apply(y));
      CHECK(am_distance(gen, whole) <= 1e-6 * std::exp(0.5 * whole.t));
    }
  }
  CHECK_THROWS_AS(holonomy_of_word(real3(), {0}, cplx(50.0)), ItineraryError);
}

TEST_CASE("Brin-Pesin map") {
  std::mt19937_64 rng(2);
  const Coding& c = cx3();
  for (int i = 0; i < 30; ++i) {
    auto a = random_word(rng, 3, 6), b = random_word(rng, 3, 6);
    cplx x = base_point(c, rng), y = base_point(c, rng);
    CHECK(am_distance(bp_map(c, a, a, x, y), AMElement::identity()) <= 1e-9);
    CHECK(am_distance(bp_map(c, a, b, x, x), AMElement::identity()) <= 1e-9);
    CHECK(am_distance(bp_map(c, a, b, x, y), bp_map(c, b, a, x, y).inverse()) <= 1e-9);
  }
}

TEST_CASE("Brin-Pesin map under a smooth gauge") {
  // Gauge: the cocycle of a word g at x becomes H(g, x) + phi(g x) - phi(x) in A x M.
  auto phi = [](cplx p) { return AMElement{0.7 * std::sin(3.0 * p.real()) + 0.2 * p.imag(), wrap_angle(std::cos(2.0 * p.real() - p.imag()))}; };
  const double lip = 0.7 * 3.0 + 0.2 + std::sqrt(5.0);
  auto gauged = [&](const Coding& c, const std::vector<int>& w, cplx p) {
    cplx q = word_element(c, w).apply(p);
    return holonomy_of_word(c, w, p) * phi(q) * phi(p).inverse();
  };
  std::mt19937_64 rng(5);
  for (const Coding* c : {&real3(), &cx3()}) {
    double worst[2] = {0.0, 0.0};
    for (int len : {1, 6}) {
      for (int i = 0; i < 20; ++i) {
        auto a = random_word(rng, len, 6), b = random_word(rng, len, 6);
        cplx x = base_point(*c, rng), y = base_point(*c, rng);
        AMElement plain = bp_map(*c, a, b, x, y);
        AMElement g = gauged(*c, a, x).inverse() * gauged(*c, a, y) * gauged(*c, b, y).inverse() * gauged(*c, b, x);
        GroupElement ga = word_element(*c, a), gb = word_element(*c, b);
        double spread = std::abs(ga.apply(x) - ga.apply(y)) + std::abs(gb.apply(x) - gb.apply(y));
        double change = am_distance(plain, g);
        CHECK(change <= lip * spread + 1e-9);
        worst[len == 6] = std::max(worst[len == 6], change);
      }
    }
    // The gauge contribution contracts with word length.
    CHECK(worst[1] < 1e-2 * worst[0] + 1e-12);
  }
}

TEST_CASE("linearization of the Brin-Pesin map") {
  std::mt19937_64 rng(3);
  for (const Coding* c : {&real3(), &cx3()}) {
    for (int i = 0; i < 10; ++i) {
      auto a = random_word(rng, 2, 6), b = random_word(rng, 2, 6);
      cplx x = base_point(*c, rng);
      cplx z = c->domain.dim == 2 ? std::polar(1.0, 0.3 * i) : cplx(1.0);
      cplx exact = bp_derivative_exact(*c, a, b, x, z);
      BPDerivative d1 = bp_derivative(*c, a, b, x, z, 1e-2), d2 = bp_derivative(*c, a, b, x, z, 5e-3);
      double e1 = std::abs(d1.value - exact), e2 = std::abs(d2.value - exact);
      if (e2 > 1e-9) CHECK(e1 / e2 >= 3.0);  // central differences are second order
      CHECK(std::abs(d2.richardson - exact) <= 1e-6 * (1 + std::abs(exact)));
    }
  }
}

TEST_CASE("local non-integrability scan") {
  const Coding& c = real3();
  CHECK(lnic_grid(c, 4).size() == 17);
  CHECK(lnic_grid(cx3(), 4).size() == 25);
  auto cands = lnic_candidates(c, 2, 4);
  CHECK(cands.size() == 16);
  LNICCertificate cert = lnic_scan(c, 2, 4, 0, 4);
  CHECK(cert.eps2 > 0);
  CHECK_FALSE(cert.degenerate);
  CHECK((int)cert.alphas.size() == cert.j0);
  CHECK(cert.scannedPoints == 17);
  // Nested grids: refining can only lower the minimum.
  double v4 = lnic_value(c, cert.alpha0, cert.alphas, lnic_grid(c, 4));
  double v8 = lnic_value(c, cert.alpha0, cert.alphas, lnic_grid(c, 8));
  CHECK(v4 == doctest::Approx(cert.eps2));
  CHECK(v8 <= v4 + 1e-12);
  auto g4 = lnic_grid(c, 4), g8 = lnic_grid(c, 8);
  for (cplx p : g4) CHECK(std::any_of(g8.begin(), g8.end(), [&](cplx q) { return std::abs(p - q) < 1e-12; }));
}

TEST_CASE("non-concentration witness") {
  std::vector<cplx> pts{cplx(0.01, 0.0), cplx(0.0, 0.02), cplx(0.5, 0.0), cplx(-0.03, 0.04)};
  NCPWitness w = ncp_witness(pts, 0.0, cplx(1.0, 0.0), 0.1);
  CHECK(w.inBall == 3);
  CHECK(w.score == doctest::Approx(0.3));
  CHECK(w.y == cplx(-0.03, 0.04));
  NCPWitness v = ncp_witness(pts, 0.0, cplx(0.0, 2.0), 0.1);
  CHECK(v.score == doctest::Approx(0.4));
  CHECK_THROWS_AS(ncp_witness(pts, 0.0, 1.0, 1.5), ConfigError);
  CHECK_THROWS_AS(ncp_witness(pts, cplx(3.0), 1.0, 0.1), ResolutionExhausted);
}

TEST_CASE("failure profile at the parabolic point") {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  auto rows = ncp_failure_profile(cx3(), eps, 500, 3);
  REQUIRE(rows.size() == eps.size());
  for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].score <= rows[i - 1].score + 1e-12);
  CHECK(rows.front().score / rows.back().score > 1.5);
  cplx w = ncp_failure_direction(cx3());
  CHECK(std::abs(w) == doctest::Approx(1.0));
  CHECK(std::abs((std::conj(w) * std::conj(cx3().preset.c)).real()) <= 1e-12);
  CHECK_THROWS_AS(ncp_failure_profile(real3(), eps), ConfigError);
}

TEST_CASE("window scan") {
  const Coding& c = real3();
  std::vector<cplx> cands;
  for (int i = 0; i < 40; ++i) cands.push_back(c.branches[i % 10].g.apply(c.branches[i / 10].g.apply(c.domain.anchor)));
  NCPScan s = ncp_window_scan(c, cands, 20, 0.02, 0.2, 3.0, 7);
  CHECK((int)s.rows.size() <= 20);
  CHECK(s.rows.size() + s.outsideWindow + s.exhausted <= cands.size());
  REQUIRE_FALSE(s.rows.empty());
  double mn = 1e300;
  for (const NCPScanRow& r : s.rows) {
    CHECK(r.eps >= 0.02);
    CHECK(r.eps <= 0.2);
    mn = std::min(mn, r.score);
  }
  CHECK(s.eta0 == doctest::Approx(mn));
  NCPScan again = ncp_window_scan(c, cands, 20, 0.02, 0.2, 3.0, 7);
  CHECK(again.eta0 == s.eta0);
  CHECK_THROWS_AS(ncp_window_scan(c, cands, 5, 0.3, 0.2, 3.0, 1), ConfigError);
}
