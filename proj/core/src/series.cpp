#include "cusplab/series.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <cmath>

namespace cusplab {

namespace {

constexpr int kBernoulliTerms = 12;

struct ZetaParts {
  cplx value;
  cplx derivative;
};

// Euler-Maclaurin with shift N and kBernoulliTerms correction terms.
ZetaParts zeta_em(cplx s, double a, bool wantDerivative) {
  int N = std::max(10, static_cast<int>(std::ceil(std::abs(s))) + 10);
  cplx val = 0.0, der = 0.0;
  for (int n = 0; n < N; ++n) {
    double x = n + a;
    cplx t = std::exp(-s * std::log(x));
    val += t;
    if (wantDerivative) der -= std::log(x) * t;
  }
  double X = N + a;
  double lx = std::log(X);
  cplx xs = std::exp(-s * lx);  // X^{-s}
  val += X * xs / (s - 1.0) + 0.5 * xs;
  if (wantDerivative) {
    der += -lx * X * xs / (s - 1.0) - X * xs / ((s - 1.0) * (s - 1.0)) - 0.5 * lx * xs;
  }
  // Terms B_{2j}/(2j)! * s(s+1)...(s+2j-2) X^{-s-2j+1}.
  cplx poch = s;        // product over i = 0..2j-2
  cplx pochLogDer = 1.0 / s;
  double xpow = 1.0 / X;  // X^{-2j+1}
  for (int j = 1; j <= kBernoulliTerms; ++j) {
    double c = boost::math::bernoulli_b2n<double>(j) / boost::math::factorial<double>(2 * j);
    cplx term = c * poch * xs * xpow;
    val += term;
    if (wantDerivative) der += term * (pochLogDer - lx);
    poch *= (s + double(2 * j - 1)) * (s + double(2 * j));
    pochLogDer += 1.0 / (s + double(2 * j - 1)) + 1.0 / (s + double(2 * j));
    xpow /= X * X;
  }
  return {val, der};
}

}  // namespace

cplx hurwitz_zeta(cplx s, double a) { return zeta_em(s, a, false).value; }
cplx hurwitz_zeta_ds(cplx s, double a) { return zeta_em(s, a, true).derivative; }

TailRule make_tail_rule(int K, cplx sigma, int Q) {
  TailRule rule;
  rule.K = K;
  rule.sigma = sigma;
  const double start = K + 1.0;
  Eigen::VectorXd tt(Q);
  for (int j = 0; j < Q; ++j) tt[j] = 0.5 * (1.0 + std::cos((2.0 * j + 1.0) * M_PI / (2.0 * Q)));
  Eigen::MatrixXcd V(Q, Q);
  Eigen::VectorXcd rhs(Q), drhs(Q);
  for (int p = 0; p < Q; ++p) {
    for (int j = 0; j < Q; ++j) V(p, j) = std::pow(tt[j], p);
    double scale = std::pow(start, p);
    auto z = zeta_em(2.0 * sigma + double(p), start, true);
    rhs[p] = scale * z.value;
    drhs[p] = 2.0 * scale * z.derivative;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
  Eigen::VectorXcd w = lu.solve(rhs);
  Eigen::VectorXcd dw = lu.solve(drhs);
  rule.nodes.resize(Q);
  rule.coef.resize(Q);
  rule.dcoef.resize(Q);
  for (int j = 0; j < Q; ++j) {
    double k = start / tt[j];
    cplx kp = std::exp(2.0 * sigma * std::log(k));
    rule.nodes[j] = k;
    rule.coef[j] = w[j] * kp;
    rule.dcoef[j] = dw[j] * kp + w[j] * kp * 2.0 * std::log(k);
  }
  return rule;
}

}  // namespace cusplab
