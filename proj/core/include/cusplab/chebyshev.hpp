#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace cusplab {

using cplx = std::complex<double>;

// First-kind Chebyshev points on [lo, hi] with barycentric weights.
class ChebGrid1D {
 public:
  ChebGrid1D() = default;
  ChebGrid1D(double lo, double hi, int n);

  int size() const { return n_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double node(int j) const { return nodes_[j]; }
  const std::vector<double>& nodes() const { return nodes_; }

  // Interpolation weights at x (sum to 1); writes n entries into out.
  void row(double x, double* out) const;
  Eigen::VectorXd row(double x) const;

 private:
  double lo_ = -1.0, hi_ = 1.0;
  int n_ = 0;
  std::vector<double> nodes_, bw_;
};

// Tensor collocation grid on an interval (d=1) or a box in C (d=2).
class CollocationGrid {
 public:
  CollocationGrid() = default;
  CollocationGrid(double lo, double hi, int n);                                   // d = 1
  CollocationGrid(double reLo, double reHi, double imLo, double imHi, int nx, int ny);  // d = 2

  int dim() const { return dim_; }
  int size() const { return dim_ == 1 ? gx_.size() : gx_.size() * gy_.size(); }
  cplx node(int i) const;
  const ChebGrid1D& gx() const { return gx_; }
  const ChebGrid1D& gy() const { return gy_; }
  bool contains(cplx x, double tol = 1e-12) const;

  // Adds w * interpolation row at y into out (length size()).
  template <class Vec, class Scalar>
  void accumulate_row(cplx y, Scalar w, Vec& out) const;

  cplx interpolate(const Eigen::VectorXcd& values, cplx y) const;
  double interpolate(const Eigen::VectorXd& values, cplx y) const;

 private:
  int dim_ = 1;
  ChebGrid1D gx_, gy_;
};

template <class Vec, class Scalar>
void CollocationGrid::accumulate_row(cplx y, Scalar w, Vec& out) const {
  thread_local std::vector<double> rx, ry;
  rx.resize(gx_.size());
  gx_.row(y.real(), rx.data());
  if (dim_ == 1) {
    for (int j = 0; j < gx_.size(); ++j) out[j] += w * rx[j];
    return;
  }
  ry.resize(gy_.size());
  gy_.row(y.imag(), ry.data());
  const int ny = gy_.size();
  for (int a = 0; a < gx_.size(); ++a) {
    Scalar wa = w * rx[a];
    for (int b = 0; b < ny; ++b) out[a * ny + b] += wa * ry[b];
  }
}

}  // namespace cusplab
