#pragma once

#include <complex>
#include <vector>

namespace cusplab {

using cplx = std::complex<double>;

// Hurwitz zeta sum_{n>=0} (n+a)^{-s} for Re s > 1, a > 0, with its s-derivative.
cplx hurwitz_zeta(cplx s, double a);
cplx hurwitz_zeta_ds(cplx s, double a);

// Quadrature for sum_{k>K} f(k) when f(k) = k^{-2 sigma} g(1/k) with g smooth near 0.
// sum_{k>K} f(k) ~= sum_j coef[j] * f(nodes[j]).
struct TailRule {
  int K = 0;
  cplx sigma{};
  std::vector<double> nodes;
  std::vector<cplx> coef;
  std::vector<cplx> dcoef;  // d coef / d sigma
};

TailRule make_tail_rule(int K, cplx sigma, int Q = 8);

}  // namespace cusplab
