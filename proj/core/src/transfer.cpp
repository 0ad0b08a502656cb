#include "cusplab/transfer.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "cusplab/errors.hpp"
#include "cusplab/stats.hpp"

namespace cusplab {

NodeGrid make_grid(const Coding& coding, int degree) {
  const Domain& D = coding.domain;
  if (D.dim == 1) return NodeGrid(D.hullReLo, D.hullReHi, degree);
  return NodeGrid(D.hullReLo, D.hullReHi, D.hullImLo, D.hullImHi, degree, degree);
}

cplx branch_weight(const GroupElement& g, cplx x, cplx sigma, int n) {
  cplx den = g.c * x + g.d;
  double nrm = std::norm(den);
  cplx w = std::exp(-sigma * std::log(nrm));
  if (n != 0) w *= std::pow(den / std::sqrt(nrm), 2 * n);
  return w;
}

double holonomy_angle(const GroupElement& g, cplx x) { return 2.0 * std::arg(g.c * x + g.d); }

namespace {

void check_twist(const Coding& coding, int n) {
  if (n != 0 && coding.domain.dim == 1) throw InvalidTwist("holonomy twist n != 0 requires d = 2");
}

// Fills rows of out with sum_e weight_e(x_i) * interpolation row at g_e x_i.
template <class WeightFn>
void fill_rows(const Quadrature& quad, const NodeGrid& grid, int workers, Eigen::MatrixXcd& out,
               WeightFn weight) {
  const int N = grid.size();
  out.setZero(N, N);
  parallel_chunks(N, workers, [&](int i) {
    cplx x = grid.node(i);
    Eigen::VectorXcd row = Eigen::VectorXcd::Zero(N);
    for (const QuadEntry& e : quad) {
      cplx w = weight(e, x);
      if (w == cplx(0.0)) continue;
      grid.accumulate_row(e.g.apply(x), w, row);
    }
    out.row(i) = row.transpose();
  });
}

}  // namespace

DiscretizedOperator assemble_sigma(const Coding& coding, const NodeGrid& grid, cplx sigma, int n,
                                   const Quadrature* quad, int workers) {
  check_twist(coding, n);
  Quadrature local;
  if (!quad) {
    local = coding.quadrature(sigma);
    quad = &local;
  }
  DiscretizedOperator op;
  op.sigma = sigma;
  op.n = n;
  op.cutoff = coding.certificate.cutoff;
  fill_rows(*quad, grid, workers, op.matrix,
            [&](const QuadEntry& e, cplx x) { return e.coef * branch_weight(e.g, x, sigma, n); });
  return op;
}

DiscretizedOperator assemble(const Coding& coding, const NodeGrid& grid, cplx s, int n, double delta,
                             int workers) {
  return assemble_sigma(coding, grid, delta + s, n, nullptr, workers);
}

DiscretizedOperator assemble_series(const Coding& coding, const NodeGrid& grid, cplx sigma, int n,
                                    int workers) {
  check_twist(coding, n);
  Quadrature quad = coding.quadrature(sigma);
  DiscretizedOperator op;
  op.sigma = sigma;
  op.n = n;
  op.cutoff = coding.certificate.cutoff;
  fill_rows(quad, grid, workers, op.matrix, [&](const QuadEntry& e, cplx x) {
    double ret = std::log(std::norm(e.g.c * x + e.g.d));
    return (e.dcoef - e.coef * ret) * branch_weight(e.g, x, sigma, n);
  });
  return op;
}

EigenResult leading_eigen(const DiscretizedOperator& op, int budget, double target) {
  const Eigen::MatrixXcd& A = op.matrix;
  const int N = A.rows();
  EigenResult res;
  Eigen::VectorXcd h = Eigen::VectorXcd::Ones(N), v = Eigen::VectorXcd::Ones(N);
  cplx lam = 0.0;
  double resid = 1.0;
  int it = 0;
  for (; it < budget; ++it) {
    Eigen::VectorXcd Ah = A * h;
    Eigen::VectorXcd Av = A.transpose() * v;
    double nh = Ah.cwiseAbs().maxCoeff(), nv = Av.cwiseAbs().maxCoeff();
    if (!(nh > 0) || !(nv > 0) || !std::isfinite(nh)) throw EigenFailure("iteration blew up", INFINITY);
    h = Ah / nh;
    v = Av / nv;
    lam = v.conjugate().dot(A * h) / v.conjugate().dot(h);
    resid = (A * h - lam * h).cwiseAbs().maxCoeff() / std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    double lresid = (A.transpose() * v - lam * v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
    if (resid <= target * std::abs(lam) && lresid <= target * std::abs(lam)) {
      ++it;
      break;
    }
  }
  if (resid > target * std::max(std::abs(lam), 1e-300) * 100) throw EigenFailure("power iteration did not converge", resid);
  // Left functional of total mass 1; right vector paired to 1 against it.
  cplx mass = v.sum();
  v /= mass;
  cplx pair = (v.transpose() * h)(0);
  h /= pair;
  res.lambda = (v.transpose() * (A * h))(0) / (v.transpose() * h)(0);
  res.right = h;
  res.left = v;
  res.residual = resid;
  res.iterations = it;
  return res;
}

double leading_lambda(const Coding& coding, const NodeGrid& grid, double sigma, int workers) {
  auto op = assemble_sigma(coding, grid, sigma, 0, nullptr, workers);
  return leading_eigen(op).lambda.real();
}

// ---------------------------------------------------------------- SpectralData

double SpectralData::integrate(const std::function<double(cplx)>& f) const {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i) s += left[i] * f(grid.node(i));
  return s;
}

cplx SpectralData::integrate_c(const std::function<cplx(cplx)>& f) const {
  cplx s = 0.0;
  for (int i = 0; i < grid.size(); ++i) s += left[i] * f(grid.node(i));
  return s;
}

size_t SpectralData::zero_index() const {
  size_t best = 0;
  for (size_t i = 0; i < aGrid.size(); ++i)
    if (std::abs(aGrid[i]) < std::abs(aGrid[best])) best = i;
  return best;
}

double SpectralData::h_at(cplx x, size_t aIndex) const {
  const Eigen::VectorXd& h = hA[aIndex];
  if (grid.contains(x, 1e-9)) return grid.interpolate(h, x);
  // Outside the hull: one step of the eigen-equation.
  double sig = delta + aGrid[aIndex];
  Quadrature q = coding->quadrature(sig);
  double s = 0.0;
  for (const QuadEntry& e : q) s += e.coef.real() * std::pow(e.g.derivative(x), sig) * grid.interpolate(h, e.g.apply(x));
  return s / lambdaA[aIndex];
}

double SpectralData::h_at(cplx x) const {
  if (grid.contains(x, 1e-9)) return grid.interpolate(h0, x);
  double s = 0.0;
  for (const QuadEntry& e : quad) s += e.coef.real() * std::pow(e.g.derivative(x), delta) * grid.interpolate(h0, e.g.apply(x));
  return s / lambda0;
}

double SpectralData::normalized_weight(const GroupElement& g, cplx x, size_t aIndex) const {
  double sig = delta + aGrid[aIndex];
  return std::pow(g.derivative(x), sig) * h_at(g.apply(x), aIndex) / (lambdaA[aIndex] * h_at(x, aIndex));
}

DiscretizedOperator SpectralData::normalized_operator(const TwistParameter& tw, int workers) const {
  size_t ai = zero_index();
  double best = 1e300;
  for (size_t i = 0; i < aGrid.size(); ++i)
    if (std::abs(aGrid[i] - tw.a) < best) best = std::abs(aGrid[i] - tw.a), ai = i;
  if (best > 1e-12) throw ConfigError("twist a = " + format_double(tw.a) + " is not on the a-grid");
  DiscretizedOperator op = assemble_sigma(*coding, grid, cplx(delta + aGrid[ai], tw.b), tw.n, nullptr, workers);
  const Eigen::VectorXd& h = hA[ai];
  for (int i = 0; i < op.matrix.rows(); ++i)
    for (int j = 0; j < op.matrix.cols(); ++j) op.matrix(i, j) *= h[j] / (lambdaA[ai] * h[i]);
  op.normalized = true;
  return op;
}

std::string SpectralData::report() const {
  std::ostringstream os;
  os << "spectral.version=" << kSpectralReportVersion << "\n";
  os << "spectral.preset=" << coding->preset.name << "\n";
  os << "spectral.cutoff=" << format_double(coding->certificate.cutoff) << "\n";
  os << "spectral.alphabet=" << coding->branches.size() << "\n";
  os << "spectral.grid.dim=" << grid.dim() << "\n";
  os << "spectral.grid.degree=" << degree << "\n";
  os << "spectral.grid.nodes=" << grid.size() << "\n";
  os << "spectral.grid.re=" << format_double(grid.gx().lo()) << "," << format_double(grid.gx().hi()) << "\n";
  if (grid.dim() == 2)
    os << "spectral.grid.im=" << format_double(grid.gy().lo()) << "," << format_double(grid.gy().hi()) << "\n";
  os << "spectral.delta=" << format_double(delta) << "\n";
  os << "spectral.lambda0=" << format_double(lambda0) << "\n";
  os << "spectral.residual=" << format_double(residual, 6) << "\n";
  os << "spectral.sigma0=" << format_double(sigma0) << "\n";
  os << "spectral.eps0=" << format_double(eps0) << "\n";
  for (size_t i = 0; i < aGrid.size(); ++i)
    os << "spectral.lambda_a[" << i << "]=" << format_double(aGrid[i]) << "," << format_double(lambdaA[i]) << "\n";
  os << "spectral.atoms=" << atoms.size() << "\n";
  os << "spectral.atomDeficit.nu=" << format_double(atomDeficitNu, 6) << "\n";
  os << "spectral.atomDeficit.muE=" << format_double(atomDeficitMuE, 6) << "\n";
  return os.str();
}

// ---------------------------------------------------------------- find_delta

namespace {

// Positive atoms of nu and mu_E: one per explicit branch and one per tail group,
// with heavy explicit cylinders refined to depth two.
void build_atoms(SpectralData& sd, double depth2Threshold) {
  const Coding& cd = *sd.coding;
  const int N = sd.grid.size();
  auto masses = [&](const GroupElement& g, double coef, double& nuM, double& muM) {
    nuM = muM = 0.0;
    for (int i = 0; i < N; ++i) {
      cplx x = sd.grid.node(i);
      double w = coef * std::pow(g.derivative(x), sd.delta);
      muM += sd.left[i] * w;
      nuM += sd.left[i] * w * sd.grid.interpolate(sd.h0, g.apply(x));
    }
    nuM /= sd.lambda0;
    muM /= sd.lambda0;
  };
  struct Piece {
    std::vector<int> word;
    GroupElement g;
    double nu = 0, mu = 0, best = -1e300;
    bool pooled = false;
  };
  // Children of g: explicit entries one by one, virtual entries pooled per group.
  auto expand = [&](const GroupElement& g, const std::vector<int>& prefix) {
    std::vector<Piece> out;
    std::map<int, size_t> groupAt;
    for (const QuadEntry& e : sd.quad) {
      GroupElement ge = g * e.g;
      double nuM, muM;
      masses(ge, e.coef.real(), nuM, muM);
      if (e.group < 0) {
        std::vector<int> w = prefix;
        w.push_back(e.branch);
        out.push_back({w, ge, nuM, muM, nuM, false});
        continue;
      }
      auto it = groupAt.find(e.group);
      if (it == groupAt.end()) {
        it = groupAt.emplace(e.group, out.size()).first;
        out.push_back({prefix, ge, 0.0, 0.0, -1e300, true});
      }
      Piece& p = out[it->second];
      p.nu += nuM;
      p.mu += muM;
      if (nuM > p.best) p.best = nuM, p.g = ge;
    }
    return out;
  };
  std::vector<CylinderAtom> atoms;
  double negNu = 0.0, negMu = 0.0;
  auto emit = [&](const Piece& p) {
    negNu += std::max(-p.nu, 0.0);
    negMu += std::max(-p.mu, 0.0);
    atoms.push_back({p.word, p.g.apply(cd.domain.anchor), std::max(p.nu, 0.0), std::max(p.mu, 0.0), p.pooled});
  };
  const GroupElement id = GroupElement::identity(cd.preset.field());
  for (const Piece& p : expand(id, {})) {
    bool refine = !cd.preset.is_lattice() && !p.pooled && p.nu >= depth2Threshold;
    if (!refine) {
      emit(p);
      continue;
    }
    for (const Piece& q : expand(p.g, p.word)) emit(q);
  }
  double nuSum = 0.0, muSum = 0.0;
  for (auto& a : atoms) nuSum += a.nuMass, muSum += a.muEMass;
  for (auto& a : atoms) a.nuMass /= nuSum, a.muEMass /= muSum;
  sd.atomDeficitNu = std::abs(1.0 - nuSum) + negNu;
  sd.atomDeficitMuE = std::abs(1.0 - muSum) + negMu;
  sd.atoms = std::move(atoms);
}

}  // namespace

SpectralData find_delta(std::shared_ptr<const Coding> coding, const FindDeltaOptions& opt) {
  if (!coding || coding->branches.empty()) throw EmptyCoding("empty alphabet");
  SpectralData sd;
  sd.degree = opt.degree;
  sd.grid = make_grid(*coding, opt.degree);
  const double dim = coding->domain.dim;

  auto f = [&](double s) { return leading_lambda(*coding, sd.grid, s, opt.workers) - 1.0; };
  double lo = 0.5 + 1e-3, hi = dim;
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0)) throw DeltaRange("leading eigenvalue below 1 at the lower bracket");
  if (fhi > 0) {
    // Allow the root within the coverage-deficit tolerance above d.
    double hi2 = dim + 0.01, fhi2 = f(hi2);
    if (fhi2 > 0) throw DeltaRange("leading eigenvalue above 1 at s = d");
    hi = hi2;
    fhi = fhi2;
  }
  boost::uintmax_t maxIter = 80;
  auto tolFn = [&](double a, double b) { return std::abs(b - a) <= opt.tol; };
  auto root = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tolFn, maxIter);
  double delta = 0.5 * (root.first + root.second);
  if (delta > dim + 1e-3) throw DeltaRange("root above d");

  auto cd2 = std::make_shared<Coding>(*coding);
  refit_tail(*cd2, delta);
  sd.coding = cd2;
  sd.delta = delta;
  sd.eps0 = cd2->certificate.eps0;
  sd.quad = cd2->quadrature(delta);

  auto op = assemble_sigma(*cd2, sd.grid, delta, 0, &sd.quad, opt.workers);
  EigenResult er = leading_eigen(op);
  sd.lambda0 = er.lambda.real();
  sd.residual = er.residual;
  sd.left = er.left.real();
  sd.h0 = er.right.real();
  if (sd.h0.minCoeff() <= 0) throw EigenFailure("eigenfunction not positive", sd.h0.minCoeff());
  sd.nu = sd.left.cwiseProduct(sd.h0);

  double a0 = std::min(std::max(sd.eps0, 0.0) / 4.0, 0.1);
  int P = std::max(opt.aPoints, 1);
  for (int i = 0; i < P; ++i) {
    double a = P == 1 ? 0.0 : -a0 + 2.0 * a0 * i / (P - 1);
    if (std::abs(a) < 1e-15) a = 0.0;
    sd.aGrid.push_back(a);
    if (a == 0.0) {
      sd.lambdaA.push_back(sd.lambda0);
      sd.hA.push_back(sd.h0);
      continue;
    }
    auto opa = assemble_sigma(*cd2, sd.grid, delta + a, 0, nullptr, opt.workers);
    EigenResult ea = leading_eigen(opa);
    Eigen::VectorXd ha = ea.right.real();
    if (ha.minCoeff() <= 0) throw EigenFailure("eigenfunction not positive", ha.minCoeff());
    ha /= sd.left.dot(ha);
    sd.lambdaA.push_back(ea.lambda.real());
    sd.hA.push_back(ha);
  }

  auto series = assemble_series(*cd2, sd.grid, delta, 0, opt.workers);
  Eigen::VectorXcd h0c = sd.h0.cast<cplx>();
  cplx num = (sd.left.cast<cplx>().transpose() * (series.matrix * h0c))(0);
  sd.sigma0 = -num.real() / sd.left.dot(sd.h0);

  build_atoms(sd, opt.depth2Threshold);
  return sd;
}

AnalyticityReport analyticity_check(const Coding& coding, const NodeGrid& grid, cplx sigma,
                                    const Eigen::VectorXcd& u, double theta, int workers) {
  AnalyticityReport rep;
  auto L0 = assemble_sigma(coding, grid, sigma, 0, nullptr, workers);
  auto L1 = assemble_series(coding, grid, sigma, 0, workers);
  Eigen::VectorXcd base = L0.matrix * u, deriv = L1.matrix * u;
  for (int k = 0; k < 3; ++k) {
    double th = theta / std::pow(2.0, k);
    auto Lt = assemble_sigma(coding, grid, sigma + th, 0, nullptr, workers);
    Eigen::VectorXcd fd = (Lt.matrix * u - base) / th;
    rep.thetas.push_back(th);
    rep.errors.push_back(u.size() ? (fd - deriv).cwiseAbs().maxCoeff() : 0.0);
  }
  for (int k = 1; k < 3; ++k)
    rep.halvingRatios.push_back(rep.errors[k] > 0 ? rep.errors[k - 1] / rep.errors[k] : 0.0);
  if (rep.errors.back() > 0 && rep.errors.front() > 0)
    rep.order = std::log2(rep.errors.front() / rep.errors.back()) / 2.0;
  return rep;
}

}  // namespace cusplab
