#pragma once

#include <array>
#include <complex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cusplab/moebius.hpp"

namespace cusplab {

// Translation-strip fundamental interval (d=1) or box (d=2), shrunk by a gap.
struct Domain {
  int dim = 1;
  double halfWidth = 0.0;   // |Re x| <= halfWidth
  double halfHeight = 0.0;  // |Im x| <= halfHeight, d = 2 only
  double gap = 0.0;
  double diameter = 0.0;
  double C_Delta0 = 1.0;
  cplx anchor{};            // attracting fixed point of a branch, a certified limit point
  // Collocation hull: padded bounding box of the branch images.
  double hullReLo = 0, hullReHi = 0, hullImLo = 0, hullImHi = 0;

  bool contains(cplx x, double tol = 1e-12) const;
  std::vector<cplx> boundary(int perSide = 32) const;
  bool in_hull(cplx x, double tol = 1e-12) const;
};

// Letter of the acceleration family: P^n T^k S^m with P the parabolic
// prefix fixing side = +1 or -1 (lattice preset only, n = 0 otherwise).
struct Letter {
  int k = 0, m = 0, n = 0, side = 0;
  bool operator==(const Letter& o) const { return k == o.k && m == o.m && n == o.n && side == o.side; }
};

struct LetterHash {
  size_t operator()(const Letter& l) const {
    size_t h = std::hash<long long>()((long long)l.k * 1000003LL + l.m);
    return h ^ (std::hash<long long>()((long long)l.n * 7919LL + l.side) << 1);
  }
};

struct Branch {
  std::string word;
  GroupElement g;
  Letter letter;
  double normLow = 0.0, normHigh = 0.0;
  cplx boxLo{}, boxHi{};  // bounding box of the image
  double imageDiameter = 0.0;
};

struct Cylinder {
  std::vector<int> word;  // alphabet indices, outermost first
  GroupElement g;
  double diameter = 0.0;
  double gibbsWeight = 0.0;
};

struct TailPoint {
  double theta;
  double sum;
};

struct CodingCertificate {
  double cutoff = 0.0;
  size_t alphabetSize = 0;
  double lambdaHat = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double Ccyl = 1.0;
  double maxLogDistortion = 0.0;  // max log(normHigh/normLow)
  double minGap = 0.0;            // smallest separation between sorted images
  double eps0 = 0.0;
  double eps0R2 = 0.0;
  double tailExponent = 1.0;
  std::vector<TailPoint> tailTable;
  double coverageDeficit = 0.0;
  double containmentMargin = 0.0;
};

// One entry of the compensated quadrature over the infinite family:
// sum over branches of F(gamma) ~= sum_e coef_e F(g_e), exact for explicit
// entries and tail-rule weighted for virtual (non-integer) ones.
struct QuadEntry {
  cplx coef{1.0};
  cplx dcoef{0.0};  // d coef / d sigma
  GroupElement g;
  int branch = -1;  // alphabet index, -1 if not in the cutoff alphabet
  bool isVirtual = false;
  int group = -1;  // tail rule the virtual entry belongs to
};
using Quadrature = std::vector<QuadEntry>;

struct CodingOptions {
  double gapFraction = 1e-3;  // gap g = gapFraction * mu (0 for the lattice)
  int tailNodes = 8;
  int minExplicit = 4;
  double tailExponent = 1.0;
  double hullPad = 0.02;
  bool compensate = true;
};

struct StepResult {
  int branch = -1;
  Letter letter;
  GroupElement g;
  cplx image{};
  double ret = 0.0;
};

class Coding {
 public:
  GroupPreset preset;
  Domain domain;
  std::vector<Branch> branches;
  CodingCertificate certificate;
  CodingOptions options;

  GroupElement letter_element(double k, double m) const;
  GroupElement prefix_element(double n, int side) const;
  GroupElement element(const Letter& l) const;
  std::string word_of(const Letter& l) const;

  double norm_high(const GroupElement& g) const;
  double norm_low(const GroupElement& g) const;
  std::pair<cplx, cplx> image_box(const GroupElement& g) const;
  double image_diameter(const GroupElement& g) const;
  double image_measure(const GroupElement& g) const;  // Lebesgue length or area
  bool image_contained(const GroupElement& g, double* margin = nullptr) const;

  int find(const Letter& l) const;
  // Decodes x against the whole infinite family; throws OrbitEscape in gaps.
  StepResult decode(cplx x) const;

  Quadrature quadrature(cplx sigma) const;
  Quadrature quadrature(cplx sigma, int nQ) const;

  // Explicit row structure of the quadrature, fixed by the cutoff.
  struct Row {
    int m = 0, sk = 0, K = 0;
  };
  struct Plan {
    int n = 0, side = 0;
    int M = 0;
    std::vector<Row> rows;
    std::vector<std::pair<int, int>> excluded;  // (k, m)
  };
  std::vector<Plan> plans;
  // Lattice only: explicit prefix powers per side and the inner plan at tail prefixes.
  int prefixExplicit = 0;
  Plan tailPlanPlus, tailPlanMinus;

  std::unordered_map<Letter, int, LetterHash> index;
};

Coding build_alphabet(const GroupPreset& preset, double cutoff, const CodingOptions& options = {});
void refit_tail(Coding& coding, double exponent);

StepResult expanding_step(const Coding& coding, cplx x);
double birkhoff_return(const Coding& coding, cplx x, int n);
std::vector<StepResult> itinerary(const Coding& coding, cplx x, int depth, bool restrictToAlphabet = true);
double cylinder_metric_D(const Coding& coding, cplx x, cplx y, int maxDepth = 40);
bool window_membership(const Coding& coding, cplx x, double t, double R, int maxDepth = 200);
// Same test for an itinerary given as letters (outermost first).
bool window_membership_letters(const Coding& coding, const Letter* letters, int count, double t, double R);

Cylinder make_cylinder(const Coding& coding, const std::vector<int>& word);

std::string alphabet_dump(const Coding& coding);

}  // namespace cusplab
