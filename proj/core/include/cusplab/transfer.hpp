#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cusplab/chebyshev.hpp"
#include "cusplab/coding.hpp"

namespace cusplab {

struct TwistParameter {
  double a = 0.0;
  double b = 0.0;
  int n = 0;
  // Upper end of the bracket max{|b|,|n|} <= ||rho_b|| <= |b| + |n|.
  double normOfRho_b() const { return std::abs(b) + std::abs(n); }
};

using NodeGrid = CollocationGrid;

// Chebyshev grid on the padded hull of the branch images.
NodeGrid make_grid(const Coding& coding, int degree);

struct DiscretizedOperator {
  cplx sigma{};  // exponent applied to |gamma'|
  int n = 0;     // holonomy character
  double cutoff = 0.0;
  bool normalized = false;
  Eigen::MatrixXcd matrix;
};

// Weight of branch g at x: |g'(x)|^sigma * ((cx+d)/|cx+d|)^{2n}.
cplx branch_weight(const GroupElement& g, cplx x, cplx sigma, int n);
// Holonomy angle of a branch at x: -arg of the complex derivative.
double holonomy_angle(const GroupElement& g, cplx x);

// Unnormalized operator u -> sum_gamma |gamma'|^sigma chi_n u(gamma x) at the nodes.
DiscretizedOperator assemble_sigma(const Coding& coding, const NodeGrid& grid, cplx sigma, int n,
                                   const Quadrature* quad = nullptr, int workers = 1);
// Same with sigma = delta + s.
DiscretizedOperator assemble(const Coding& coding, const NodeGrid& grid, cplx s, int n, double delta,
                             int workers = 1);
// d/dsigma of the discretized operator: the weight times -Ret plus the tail-weight derivative.
DiscretizedOperator assemble_series(const Coding& coding, const NodeGrid& grid, cplx sigma, int n,
                                    int workers = 1);

struct EigenResult {
  cplx lambda{};
  Eigen::VectorXcd right;
  Eigen::VectorXcd left;
  double residual = 0.0;
  int iterations = 0;
};

// Power iteration with Rayleigh refinement; left vector scaled to total mass 1,
// right vector scaled so that left . right = 1.
EigenResult leading_eigen(const DiscretizedOperator& op, int budget = 10000, double target = 1e-10);

// Point mass standing in for a cylinder; an empty word or a trailing tail marks a pooled tail group.
struct CylinderAtom {
  std::vector<int> word;
  cplx point{};
  double nuMass = 0.0;
  double muEMass = 0.0;
  bool pooled = false;  // tail group below the word, no explicit letter at the next level
};

struct FindDeltaOptions {
  int degree = 32;  // per axis
  int workers = 1;
  int aPoints = 5;
  double depth2Threshold = 2e-3;  // nu mass above which a cylinder is refined to depth two
  double tol = 1e-13;
};

class SpectralData {
 public:
  std::shared_ptr<const Coding> coding;
  NodeGrid grid;
  Quadrature quad;  // at sigma = delta
  double delta = 0.0;
  double lambda0 = 1.0;
  double residual = 0.0;
  double sigma0 = 0.0;
  double eps0 = 0.0;  // tail exponent refit at delta
  Eigen::VectorXd h0;
  Eigen::VectorXd left;  // node functional of the conformal measure, total mass 1
  Eigen::VectorXd nu;    // node functional of the Gibbs measure
  std::vector<double> aGrid, lambdaA;
  std::vector<Eigen::VectorXd> hA;
  std::vector<CylinderAtom> atoms;
  double atomDeficitNu = 0.0;
  double atomDeficitMuE = 0.0;
  int degree = 0;

  // Integral of f against the conformal measure mu_E.
  double integrate(const std::function<double(cplx)>& f) const;
  cplx integrate_c(const std::function<cplx(cplx)>& f) const;
  double h_at(cplx x) const;
  double h_at(cplx x, size_t aIndex) const;
  // Normalized weight e^{F^(a)(gamma x)} of a branch at x.
  double normalized_weight(const GroupElement& g, cplx x, size_t aIndex = 0) const;
  size_t zero_index() const;
  // Normalized twisted operator diag(1/(lambda_a h_a)) A diag(h_a).
  DiscretizedOperator normalized_operator(const TwistParameter& tw, int workers = 1) const;
  std::string report() const;
};

SpectralData find_delta(std::shared_ptr<const Coding> coding, const FindDeltaOptions& options = {});

// Leading eigenvalue of the unnormalized real operator at sigma.
double leading_lambda(const Coding& coding, const NodeGrid& grid, double sigma, int workers = 1);

struct AnalyticityReport {
  std::vector<double> thetas;
  std::vector<double> errors;
  double order = 0.0;
  std::vector<double> halvingRatios;
};

AnalyticityReport analyticity_check(const Coding& coding, const NodeGrid& grid, cplx sigma,
                                    const Eigen::VectorXcd& u, double theta = 1e-2, int workers = 1);

constexpr int kSpectralReportVersion = 1;

}  // namespace cusplab
