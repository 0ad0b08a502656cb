#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cusplab/coding.hpp"

namespace cusplab {

// Element of A x M with A = R (log scale) and M = SO(2) (trivial in d = 1).
struct AMElement {
  double t = 0.0;
  double theta = 0.0;  // in [0, 2pi)

  static AMElement identity() { return {}; }
  AMElement operator*(const AMElement& o) const;
  AMElement inverse() const;
  // Signed angle representative in (-pi, pi].
  double signed_theta() const;
};

double am_distance(const AMElement& g, const AMElement& h);
double wrap_angle(double theta);  // to [0, 2pi)

// Generalized holonomy along forward letters starting at y: t = Birkhoff return,
// theta = accumulated -arg of the complex branch derivative.
AMElement generalized_holonomy(const Coding& coding, const std::vector<Letter>& forward, cplx y);
// Same for the point g_w x reached by applying the branch word w (outermost first) to x.
AMElement holonomy_of_word(const Coding& coding, const std::vector<int>& word, cplx x);

GroupElement word_element(const Coding& coding, const std::vector<int>& word);

AMElement bp_map(const Coding& coding, const std::vector<int>& alpha, const std::vector<int>& beta, cplx x, cplx y);

// Derivative of y -> BP(x, y) at y = x in direction z, by central differences
// with step h (and the Richardson-extrapolated value).
struct BPDerivative {
  cplx value{};       // t-part + i theta-part
  cplx richardson{};
  double step = 0.0;
};
BPDerivative bp_derivative(const Coding& coding, const std::vector<int>& alpha, const std::vector<int>& beta,
                           cplx x, cplx z, double step);
// Closed form 2 (c_a/(c_a x + d_a) - c_b/(c_b x + d_b)) z.
cplx bp_derivative_exact(const Coding& coding, const std::vector<int>& alpha, const std::vector<int>& beta, cplx x,
                         cplx z);

struct LNICCertificate {
  int m = 0;
  int gridSize = 0;
  int j0 = 0;
  std::vector<int> alpha0;
  std::vector<std::vector<int>> alphas;  // alpha_1 .. alpha_j0
  double eps2 = 0.0;
  double C_BP = 0.0;
  cplx worstPoint{};
  bool degenerate = false;
  size_t scannedPoints = 0;
};

// Scan points: (gridSize^2 + 1) evenly spaced in d = 1, (gridSize + 1)^2 tensor points in d = 2,
// nested under doubling.
std::vector<cplx> lnic_grid(const Coding& coding, int gridSize);
// Candidate words: all length-m words over the `letters` heaviest branches.
std::vector<std::vector<int>> lnic_candidates(const Coding& coding, int m, int letters);
LNICCertificate lnic_scan(const Coding& coding, int m, int gridSize, int j0 = 0, int letters = 6, int workers = 1);
// min over grid of max_j |dBP_j| for a fixed selection.
double lnic_value(const Coding& coding, const std::vector<int>& alpha0, const std::vector<std::vector<int>>& alphas,
                  const std::vector<cplx>& grid, cplx* worst = nullptr);

struct NCPWitness {
  cplx y{};
  double score = 0.0;
  size_t inBall = 0;
};

NCPWitness ncp_witness(const std::vector<cplx>& limitSamples, cplx x, cplx w, double eps);

// Anchors of cylinders meeting B(center, radius) down to the given image diameter.
std::vector<cplx> limit_samples(const Coding& coding, cplx center, double radius, double minDiameter,
                                int maxDepth = 12);
// Limit points T^k S^m g(anchor) accumulating at the parabolic point 0.
std::vector<cplx> parabolic_samples(const Coding& coding, int kMax, int mMax, double radius);

struct NCPProfileRow {
  double eps = 0.0;
  double score = 0.0;
  size_t inBall = 0;
};
// Parabolic point 0 of the second generator, w orthogonal to the tangency direction conj(c).
std::vector<NCPProfileRow> ncp_failure_profile(const Coding& coding, const std::vector<double>& epsGrid,
                                               int kMax = 2000, int mMax = 4);
cplx ncp_failure_direction(const Coding& coding);

struct NCPScanRow {
  cplx x{};
  cplx w{};
  double eps = 0.0;
  double score = 0.0;
  size_t inBall = 0;
};
struct NCPScan {
  std::vector<NCPScanRow> rows;
  double eta0 = 0.0;  // smallest score over the rows
  size_t outsideWindow = 0;
  size_t exhausted = 0;
};
// Scores at candidate points x inside the window at t = -log eps, eps log-uniform in
// [epsLo, epsHi], random unit direction in d = 2; stops after `count` rows.
NCPScan ncp_window_scan(const Coding& coding, const std::vector<cplx>& candidates, int count, double epsLo,
                        double epsHi, double R, std::uint64_t seed);

}  // namespace cusplab
