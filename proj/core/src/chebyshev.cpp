#include "cusplab/chebyshev.hpp"

#include <cmath>

namespace cusplab {

ChebGrid1D::ChebGrid1D(double lo, double hi, int n) : lo_(lo), hi_(hi), n_(n), nodes_(n), bw_(n) {
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int j = 0; j < n; ++j) {
    double th = (2.0 * j + 1.0) * M_PI / (2.0 * n);
    nodes_[j] = mid + half * std::cos(th);
    bw_[j] = ((j % 2) ? -1.0 : 1.0) * std::sin(th);
  }
}

void ChebGrid1D::row(double x, double* out) const {
  double total = 0.0;
  for (int j = 0; j < n_; ++j) {
    double d = x - nodes_[j];
    if (d == 0.0) {
      for (int i = 0; i < n_; ++i) out[i] = 0.0;
      out[j] = 1.0;
      return;
    }
    out[j] = bw_[j] / d;
    total += out[j];
  }
  for (int j = 0; j < n_; ++j) out[j] /= total;
}

Eigen::VectorXd ChebGrid1D::row(double x) const {
  Eigen::VectorXd r(n_);
  row(x, r.data());
  return r;
}

CollocationGrid::CollocationGrid(double lo, double hi, int n) : dim_(1), gx_(lo, hi, n) {}

CollocationGrid::CollocationGrid(double reLo, double reHi, double imLo, double imHi, int nx, int ny)
    : dim_(2), gx_(reLo, reHi, nx), gy_(imLo, imHi, ny) {}

cplx CollocationGrid::node(int i) const {
  if (dim_ == 1) return {gx_.node(i), 0.0};
  const int ny = gy_.size();
  return {gx_.node(i / ny), gy_.node(i % ny)};
}

bool CollocationGrid::contains(cplx x, double tol) const {
  if (x.real() < gx_.lo() - tol || x.real() > gx_.hi() + tol) return false;
  if (dim_ == 2 && (x.imag() < gy_.lo() - tol || x.imag() > gy_.hi() + tol)) return false;
  return true;
}

cplx CollocationGrid::interpolate(const Eigen::VectorXcd& values, cplx y) const {
  thread_local std::vector<double> rx, ry;
  rx.resize(gx_.size());
  gx_.row(y.real(), rx.data());
  if (dim_ == 1) {
    cplx s = 0.0;
    for (int j = 0; j < gx_.size(); ++j) s += rx[j] * values[j];
    return s;
  }
  ry.resize(gy_.size());
  gy_.row(y.imag(), ry.data());
  const int ny = gy_.size();
  cplx s = 0.0;
  for (int a = 0; a < gx_.size(); ++a) {
    cplx inner = 0.0;
    for (int b = 0; b < ny; ++b) inner += ry[b] * values[a * ny + b];
    s += rx[a] * inner;
  }
  return s;
}

double CollocationGrid::interpolate(const Eigen::VectorXd& values, cplx y) const {
  thread_local std::vector<double> rx, ry;
  rx.resize(gx_.size());
  gx_.row(y.real(), rx.data());
  if (dim_ == 1) {
    double s = 0.0;
    for (int j = 0; j < gx_.size(); ++j) s += rx[j] * values[j];
    return s;
  }
  ry.resize(gy_.size());
  gy_.row(y.imag(), ry.data());
  const int ny = gy_.size();
  double s = 0.0;
  for (int a = 0; a < gx_.size(); ++a) {
    double inner = 0.0;
    for (int b = 0; b < ny; ++b) inner += ry[b] * values[a * ny + b];
    s += rx[a] * inner;
  }
  return s;
}

}  // namespace cusplab
