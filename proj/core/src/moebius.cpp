#include "cusplab/moebius.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cusplab/errors.hpp"

namespace cusplab {

GroupElement GroupElement::operator*(const GroupElement& o) const {
  Field f = (field == Field::Complex || o.field == Field::Complex) ? Field::Complex : Field::Real;
  return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d, f};
}

GroupElement GroupElement::power(int n) const {
  GroupElement base = n >= 0 ? *this : inverse();
  GroupElement out = identity(field);
  for (int k = std::abs(n); k > 0; k >>= 1) {
    if (k & 1) out = out * base;
    base = base * base;
  }
  return out;
}

double GroupElement::max_abs_entry() const {
  return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
}

BoundaryPoint mobius_apply(const GroupElement& g, const BoundaryPoint& x) {
  if (x.infinite) {
    if (g.c == 0.0) return BoundaryPoint::infinity();
    return BoundaryPoint(g.a / g.c);
  }
  cplx den = g.c * x.value + g.d;
  if (den == 0.0) return BoundaryPoint::infinity();
  return BoundaryPoint((g.a * x.value + g.b) / den);
}

double conformal_derivative(const GroupElement& g, const BoundaryPoint& x, Metric metric) {
  if (metric == Metric::Spherical) {
    if (x.infinite) return 1.0 / (std::norm(g.a) + std::norm(g.c));
    return (1.0 + std::norm(x.value)) / (std::norm(g.a * x.value + g.b) + std::norm(g.c * x.value + g.d));
  }
  if (x.infinite) throw InfiniteDerivative("euclidean derivative at infinity");
  cplx den = g.c * x.value + g.d;
  if (den == 0.0) throw InfiniteDerivative("point is the pole of the transformation");
  return 1.0 / std::norm(den);
}

InteriorPoint act_interior(const GroupElement& g, const InteriorPoint& z) {
  cplx q = g.c * z.base + g.d;
  double t2 = z.height * z.height;
  double den = std::norm(q) + std::norm(g.c) * t2;
  InteriorPoint out;
  out.base = ((g.a * z.base + g.b) * std::conj(q) + g.a * std::conj(g.c) * t2) / den;
  out.height = z.height / den;
  return out;
}

double hyperbolic_distance(const InteriorPoint& z, const InteriorPoint& w) {
  double num = std::norm(z.base - w.base) + (z.height - w.height) * (z.height - w.height);
  return std::acosh(1.0 + num / (2.0 * z.height * w.height));
}

double busemann(const BoundaryPoint& x, const InteriorPoint& z, const InteriorPoint& zp) {
  if (x.infinite) return std::log(zp.height) - std::log(z.height);
  // Move x to infinity by [[0,-1],[1,-x]] and use the height formula there.
  auto lifted = [&](const InteriorPoint& p) {
    return p.height / (std::norm(p.base - x.value) + p.height * p.height);
  };
  return std::log(lifted(zp)) - std::log(lifted(z));
}

PingPongCertificate ping_pong_certificate(double mu, cplx c) {
  PingPongCertificate cert;
  cert.stripHalfWidth = mu / 2.0;
  double r = 1.0 / std::abs(c);
  cert.circles = {{-1.0 / c, r}, {1.0 / c, r}};
  double reach = 0.0;
  for (const auto& ci : cert.circles) reach = std::max(reach, std::abs(ci.center.real()) + ci.radius);
  cert.margin = cert.stripHalfWidth - reach;
  return cert;
}

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string GroupPreset::catalog_text() const {
  std::ostringstream os;
  os << "preset.name=" << name << "\n";
  os << "preset.params=";
  for (size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << format_double(params[i]);
  os << "\n";
  os << "preset.dim=" << dim << "\n";
  os << "preset.cusp_rank=" << cuspRank << "\n";
  os << "preset.mu=" << format_double(mu) << "\n";
  os << "preset.c=" << format_double(c.real()) << "," << format_double(c.imag()) << "\n";
  os << "preset.strip_half_width=" << format_double(certificate.stripHalfWidth) << "\n";
  for (size_t i = 0; i < certificate.circles.size(); ++i) {
    const auto& ci = certificate.circles[i];
    os << "preset.circle" << i << "=" << format_double(ci.center.real()) << ","
       << format_double(ci.center.imag()) << "," << format_double(ci.radius) << "\n";
  }
  os << "preset.margin=" << format_double(certificate.margin) << "\n";
  os << "preset.tangent_allowed=" << (certificate.tangentAllowed ? 1 : 0) << "\n";
  return os.str();
}

GroupPreset load_preset(const std::string& name, const std::vector<double>& params) {
  GroupPreset p;
  p.name = name;
  double mu = 0.0;
  cplx c{0.0};
  if (name == "two_parabolic_real") {
    std::vector<double> v = params.empty() ? std::vector<double>{3.0, 3.0} : params;
    if (v.size() != 2) throw PresetRejected("two_parabolic_real expects [mu, nu]", 0.0);
    mu = v[0];
    c = v[1];
    p.params = v;
    p.dim = 1;
  } else if (name == "two_parabolic_lattice") {
    if (!params.empty() && !(params.size() == 2 && params[0] == 2.0 && params[1] == 2.0))
      throw PresetRejected("two_parabolic_lattice is a fixed catalog entry", 0.0);
    mu = 2.0;
    c = 2.0;
    p.params = {2.0, 2.0};
    p.dim = 1;
  } else if (name == "two_parabolic_complex") {
    std::vector<double> v = params.empty() ? std::vector<double>{3.0, 0.0, 3.0} : params;
    if (v.size() != 3) throw PresetRejected("two_parabolic_complex expects [mu, Re c, Im c]", 0.0);
    mu = v[0];
    c = cplx(v[1], v[2]);
    p.params = v;
    p.dim = 2;
    if (c.imag() == 0.0) throw PresetRejected("complex preset needs non-real c", 0.0);
  } else {
    throw PresetRejected("unknown preset '" + name + "'", 0.0);
  }
  if (!(mu > 0.0) || std::abs(c) == 0.0) throw PresetRejected("translation lengths must be nonzero", 0.0);

  Field f = p.dim == 1 ? Field::Real : Field::Complex;
  p.mu = mu;
  p.c = c;
  p.translation = GroupElement(1.0, mu, 0.0, 1.0, f);
  p.second = GroupElement(1.0, 0.0, c, 1.0, f);
  p.certificate = ping_pong_certificate(mu, c);
  p.certificate.tangentAllowed = p.is_lattice();
  double m = p.certificate.margin;
  if (p.is_lattice() ? m < -1e-12 : !(m > 0.0)) {
    throw PresetRejected("isometric circles leave the translation strip (margin " + format_double(m, 6) + ")", m);
  }
  return p;
}

}  // namespace cusplab
