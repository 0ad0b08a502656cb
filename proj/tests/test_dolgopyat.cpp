#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cusplab/dolgopyat.hpp"
#include "cusplab/errors.hpp"

using namespace cusplab;

namespace {

const SpectralData& sd() {
  static const SpectralData s = [] {
    auto c = std::make_shared<const Coding>(build_alphabet(load_preset("two_parabolic_real", {3, 3}), 1e-4));
    FindDeltaOptions o;
    o.degree = 16;
    return find_delta(c, o);
  }();
  return s;
}

const DolgopyatEngine& engine() {
  static const DolgopyatEngine e(sd());
  return e;
}

Eigen::VectorXcd wave(const NodeGrid& grid) {
  Eigen::VectorXcd H(grid.size());
  for (int i = 0; i < H.size(); ++i) H[i] = std::exp(cplx(0.0, grid.node(i).real()));
  return H;
}

}  // namespace

TEST_CASE("word prefixes") {
  CHECK(word_has_prefix({1, 2, 3}, {}));
  CHECK(word_has_prefix({1, 2, 3}, {1, 2}));
  CHECK_FALSE(word_has_prefix({1, 2}, {1, 2, 3}));
  CHECK_FALSE(word_has_prefix({1, -1, 3}, {1, 4}));
}

TEST_CASE("frequency partition") {
  const TwistParameter tw{0.0, 20.0, 0};
  FrequencyPartition P = build_partition(sd(), tw, 3.0);
  const double hi = std::exp(3.0) / 20.0, lo = std::exp(-3.0) / 20.0;
  REQUIRE_FALSE(P.cylinders.empty());
  size_t flagged = 0;
  for (const PartitionCylinder& c : P.cylinders) {
    CHECK(c.diameter <= hi);
    CHECK(c.flagged == (c.diameter >= lo));
    CHECK(c.nuMass >= 0);
    flagged += c.flagged;
    std::vector<int> longer = c.word;
    longer.push_back(0);
    CHECK(P.cylinders[P.locate(longer)].word == c.word);
  }
  CHECK(P.flagged_count() == flagged);
  CHECK(P.coveredNu <= 1.0 + 1e-6);
  CHECK(P.coveredNu >= 0.5);
  // Coarse frequency: the whole domain is one cylinder.
  FrequencyPartition coarse = build_partition(sd(), {0.0, 1.0, 0}, 3.0);
  REQUIRE(coarse.cylinders.size() == 1);
  CHECK(coarse.cylinders[0].word.empty());
  CHECK_THROWS_AS(build_partition(sd(), {0.0, 0.5, 0}, 3.0), InvalidTwist);
  CHECK_THROWS_AS(build_partition(sd(), {0.0, 1e7, 0}, 3.0), ResolutionExhausted);
  CHECK_THROWS_AS(build_partition(sd(), {0.0, 200.0, 0}, 1.0, 1), ResolutionExhausted);
}

TEST_CASE("engine constants") {
  const DolgopyatConstants& k = engine().constants();
  CHECK(k.m >= 1);
  CHECK(k.tau > 0);
  CHECK(k.tau <= 0.25);
  CHECK(k.eps2 > 0);
  CHECK(k.lambdaHat < 1);
  CHECK(std::pow(k.lambdaHat, k.m) < 1.0 / (8.0 * k.A0));
  CHECK(k.report().find("tau") != std::string::npos);
  double wsum = 0.0;
  for (double w : engine().sample_weights()) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("beta masks") {
  const DolgopyatEngine& eng = engine();
  const TwistParameter tw{0.0, 20.0, 0};
  CancellationData cd = eng.cancellation_data(eng.partition(tw), tw);
  REQUIRE_FALSE(cd.entries.empty());
  const double tau = eng.constants().tau;
  std::vector<DenseChoice> none, all;
  for (size_t i = 0; i < cd.entries.size(); ++i) {
    none.push_back({(int)i, 1, 1, 0.0});
    all.push_back({(int)i, 1 + (int)(i % 2), 1 + (int)(i % 3 == 0), tau});
  }
  BetaMask empty = eng.beta_mask(cd, none, tau);
  CHECK(empty.words.empty());
  CHECK(empty.at_nodes(*sd().coding, sd().grid).isOnes());
  CHECK(empty.value(eng.samples().front()) == 1.0);

  BetaMask mask = eng.beta_mask(cd, all, tau);
  CHECK(mask.words.size() == cd.entries.size());
  Eigen::VectorXd nodes = mask.at_nodes(*sd().coding, sd().grid);
  for (int i = 0; i < nodes.size(); ++i)
    CHECK((std::abs(nodes[i] - 1.0) < 1e-12 || std::abs(nodes[i] - (1.0 - tau)) < 1e-12));
  for (const SymbolicPoint& p : eng.samples()) {
    double v = mask.value(p);
    CHECK((v == 1.0 || std::abs(v - (1.0 - tau)) < 1e-12));
  }
  CHECK_THROWS_AS(eng.beta_mask(cd, all, 0.3), ConfigError);
  CHECK_THROWS_AS(eng.beta_mask(cd, all, 0.0), ConfigError);
  std::vector<DenseChoice> missing(all.begin() + 1, all.end());
  CHECK_THROWS_AS(eng.beta_mask(cd, missing, tau), DenseIndexError);
  std::vector<DenseChoice> bogus = all;
  bogus.push_back({(int)cd.entries.size() + 5, 1, 1, tau});
  CHECK_THROWS_AS(eng.beta_mask(cd, bogus, tau), DenseIndexError);

  // Dolgopyat operator: mask one keeps constants, a mask below one lowers the majorant.
  const int m = eng.constants().m;
  const int N = sd().grid.size();
  PatchFunction one = PatchFunction::constant(N, 1.0);
  PatchFunction kept = eng.dolgopyat_apply(empty, one, m);
  CHECK(kept.patches.empty());
  CHECK((kept.smooth - Eigen::VectorXd::Ones(N)).cwiseAbs().maxCoeff() <= 1e-8);
  PatchFunction cut = eng.dolgopyat_apply(mask, one, m);
  for (const SymbolicPoint& p : eng.samples()) CHECK(cut.eval(*sd().coding, sd().grid, p) <= 1.0 + 1e-8);
  CHECK(eng.norm2(cut) < eng.norm2(kept));
  Eigen::VectorXd viaNodes = dolgopyat_apply_nodes(eng.real_operator(), Eigen::VectorXd::Ones(N), Eigen::VectorXd::Ones(N), m);
  CHECK((viaNodes - kept.smooth).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("cone conditions") {
  const DolgopyatEngine& eng = engine();
  const int N = sd().grid.size();
  PatchFunction h = PatchFunction::constant(N, 1.0);
  ConeReport zero = eng.cone_check(Eigen::VectorXcd::Zero(N), h, 20.0, 500, 3);
  CHECK(zero.pass());
  CHECK(zero.trapped == doctest::Approx(1.0));
  // A function larger than the majorant leaves the cone.
  ConeReport big = eng.cone_check(Eigen::VectorXcd::Constant(N, 2.0), h, 20.0, 500, 3);
  CHECK_FALSE(big.pass());
  CHECK(big.trapped < 0);
  ConeReport neg = eng.cone_check(Eigen::VectorXcd::Zero(N), PatchFunction::constant(N, -1.0), 20.0, 500, 3);
  CHECK_FALSE(neg.pass());
}

TEST_CASE("decay sequences") {
  const DolgopyatEngine& eng = engine();
  const NodeGrid& grid = sd().grid;
  // b = 0: constants are fixed, no decay.
  DecayReport flat = eng.raw_decay({0.0, 0.0, 0}, Eigen::VectorXcd::Ones(grid.size()), 10);
  for (const DecayRow& r : flat.rows) CHECK(r.rawNorm == doctest::Approx(1.0).epsilon(1e-6));
  DecayReport rep = eng.spectral_decay({0.0, 20.0, 0}, wave(grid), 12);
  CHECK(rep.dominationViolations == 0);
  CHECK(rep.rows.back().rawNorm < rep.rows.front().rawNorm);
  for (const DecayRow& r : rep.rows) CHECK((r.majorantNorm >= 0) == (r.k % rep.m == 0));
  for (const ConeReport& c : rep.cones) CHECK(c.pass());
  CHECK(rep.to_csv().find("k,") != std::string::npos);
  // Dense twisted powers agree with the engine's raw sequence.
  DecayReport raw = twisted_decay(sd(), {0.0, 20.0, 0}, wave(grid), 12);
  REQUIRE(raw.rows.size() == rep.rows.size());
  CHECK(raw.eta > 0);
  auto rows = eng.recurrence_frequency(rep, 500, 5, 0.0);
  for (const RecurrenceRow& r : rows) {
    CHECK(r.low <= r.frequency + 1e-12);
    CHECK(r.frequency <= r.high + 1e-12);
  }
}
