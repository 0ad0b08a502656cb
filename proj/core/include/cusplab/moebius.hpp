#pragma once

#include <complex>
#include <string>
#include <vector>

namespace cusplab {

using cplx = std::complex<double>;

enum class Field { Real, Complex };
enum class Metric { Euclidean, Spherical };

// Point of R^d ∪ {∞}, d = 1 or 2, stored as a complex number.
struct BoundaryPoint {
  cplx value{};
  bool infinite = false;

  BoundaryPoint() = default;
  BoundaryPoint(cplx v) : value(v) {}
  BoundaryPoint(double v) : value(v, 0.0) {}
  static BoundaryPoint infinity() {
    BoundaryPoint p;
    p.infinite = true;
    return p;
  }
};

// Point of the upper half-space: boundary coordinate plus height.
struct InteriorPoint {
  cplx base{};
  double height = 1.0;
};

class GroupElement {
 public:
  cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};
  Field field = Field::Real;

  GroupElement() = default;
  GroupElement(cplx a, cplx b, cplx c, cplx d, Field f = Field::Real)
      : a(a), b(b), c(c), d(d), field(f) {}

  static GroupElement identity(Field f = Field::Real) { return {1.0, 0.0, 0.0, 1.0, f}; }

  cplx det() const { return a * d - b * c; }
  cplx trace() const { return a + d; }
  bool unimodular(double tol = 1e-12) const { return std::abs(det() - 1.0) <= tol; }

  GroupElement operator*(const GroupElement& o) const;
  GroupElement inverse() const { return {d, -b, -c, a, field}; }
  GroupElement power(int n) const;

  // Finite action, caller guarantees x is not the pole.
  cplx apply(cplx x) const { return (a * x + b) / (c * x + d); }
  cplx denominator(cplx x) const { return c * x + d; }
  // Euclidean derivative norm 1/|cx+d|^2.
  double derivative(cplx x) const { return 1.0 / std::norm(c * x + d); }

  double max_abs_entry() const;
};

BoundaryPoint mobius_apply(const GroupElement& g, const BoundaryPoint& x);

// Throws InfiniteDerivative at the pole with the Euclidean metric.
double conformal_derivative(const GroupElement& g, const BoundaryPoint& x,
                            Metric metric = Metric::Euclidean);

InteriorPoint act_interior(const GroupElement& g, const InteriorPoint& z);
double hyperbolic_distance(const InteriorPoint& z, const InteriorPoint& w);
double busemann(const BoundaryPoint& x, const InteriorPoint& z, const InteriorPoint& zp);

struct IsometricCircle {
  cplx center;
  double radius;
};

struct PingPongCertificate {
  double stripHalfWidth = 0.0;
  std::vector<IsometricCircle> circles;
  double margin = 0.0;  // stripHalfWidth - max(|Re center| + radius)
  bool tangentAllowed = false;
};

struct GroupPreset {
  std::string name;
  std::vector<double> params;
  int dim = 1;
  int cuspRank = 1;
  double mu = 0.0;    // translation length of the parabolic at infinity
  cplx c{0.0};        // lower-left entry of the second generator
  GroupElement translation;  // [[1, mu], [0, 1]]
  GroupElement second;       // [[1, 0], [c, 1]]
  PingPongCertificate certificate;

  std::vector<GroupElement> generators() const { return {translation, second}; }
  Field field() const { return dim == 1 ? Field::Real : Field::Complex; }
  bool is_lattice() const { return name == "two_parabolic_lattice"; }
  std::string catalog_text() const;
};

PingPongCertificate ping_pong_certificate(double mu, cplx c);

// Names: two_parabolic_real [mu, nu], two_parabolic_lattice [], two_parabolic_complex [mu, Re c, Im c].
GroupPreset load_preset(const std::string& name, const std::vector<double>& params = {});

std::string format_double(double v, int precision = 17);

}  // namespace cusplab
