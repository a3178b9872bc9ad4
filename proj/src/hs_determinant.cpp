#include "apfp/hs_determinant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace apfp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLoopTol = 1e-8;

using Coords = std::vector<Complex>;

Coords integrand_coords(const InvertiblePath& path, double t, bool from_left) {
  const PathJet jet = path.jet(t, from_left);
  Coords out(jet.value.num_blocks());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Eigen::PartialPivLU<Matrix> lu(jet.value.block(i));
    if (!(lu.rcond() > 1e-13)) {
      throw Error(ErrorKind::SingularValueOnPath, "path value is numerically singular at t = " + std::to_string(t));
    }
    // tr(a' a^{-1}) = tr(a^{-1} a')
    out[i] = lu.solve(jet.derivative.block(i)).trace();
  }
  return out;
}

void axpy(Coords& acc, double s, const Coords& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
}

double max_diff(const Coords& a, const Coords& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Composite Simpson on [a, b] with node reuse across doublings. Endpoint
// jets are taken from inside the piece.
Coords simpson_piece(const InvertiblePath& path, double a, double b, long steps, const QuadratureConfig& quad) {
  const std::size_t k = path.algebra().num_blocks();
  Coords ends(k), evens(k), odds(k);
  axpy(ends, 1.0, integrand_coords(path, a, false));
  axpy(ends, 1.0, integrand_coords(path, b, true));

  long n = std::max(2L, steps + (steps % 2));
  double h = (b - a) / static_cast<double>(n);
  for (long j = 1; j < n; ++j) axpy(j % 2 ? odds : evens, 1.0, integrand_coords(path, a + j * h, false));

  auto estimate = [&] {
    Coords s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = h / 3.0 * (ends[i] + 4.0 * odds[i] + 2.0 * evens[i]);
    return s;
  };

  Coords previous = estimate();
  while (true) {
    if (2 * n > quad.max_steps) {
      throw Error(ErrorKind::NoConvergence, "quadrature did not converge within max_steps");
    }
    // Old nodes all become even nodes of the refined grid.
    axpy(evens, 1.0, odds);
    std::fill(odds.begin(), odds.end(), Complex{});
    n *= 2;
    h /= 2.0;
    for (long j = 1; j < n; j += 2) axpy(odds, 1.0, integrand_coords(path, a + j * h, false));
    Coords current = estimate();
    if (max_diff(current, previous) <= quad.tol) return current;
    previous = std::move(current);
  }
}

double wrap_phase(double im) {
  // nearest representative in [-pi, pi]
  return im - kTwoPi * std::round(im / kTwoPi);
}

}  // namespace

TraceValue determinant_integrand(const InvertiblePath& path, double t) {
  return TraceValue(path.algebra(), integrand_coords(path, t, t >= path.domain().hi));
}

TraceValue path_determinant(const InvertiblePath& path, const QuadratureConfig& quad) {
  if (quad.steps < 2) throw Error(ErrorKind::InvalidPath, "quadrature needs at least two steps");
  const Interval domain = path.domain();
  std::vector<double> nodes{domain.lo};
  for (double b : path.breakpoints()) nodes.push_back(b);
  nodes.push_back(domain.hi);

  Coords total(path.algebra().num_blocks());
  for (std::size_t p = 0; p + 1 < nodes.size(); ++p) {
    const double a = nodes[p], b = nodes[p + 1];
    const long steps =
        static_cast<long>(std::ceil(static_cast<double>(quad.steps) * (b - a) / domain.width()));
    axpy(total, 1.0, simpson_piece(path, a, b, steps, quad));
  }
  return TraceValue(path.algebra(), std::move(total));
}

LatticeQuotientValue lattice_reduce(const TraceValue& v) {
  std::vector<Complex> coords;
  for (Complex c : v.coords()) {
    double im = c.imag() - kTwoPi * std::floor(c.imag() / kTwoPi);
    // rounding can leave a lattice point just below 2 pi
    if (im >= kTwoPi || im < 0.0 || kTwoPi - im <= 1e-12 * std::max(1.0, std::abs(c.imag()))) im = 0.0;
    if (im == 0.0) im = 0.0;  // drop negative zero
    coords.emplace_back(c.real(), im);
  }
  return {TraceValue(v.algebra(), std::move(coords))};
}

double lattice_distance(const TraceValue& a, const TraceValue& b) {
  const TraceValue d = a - b;
  double m = 0.0;
  for (Complex c : d.coords()) m = std::max(m, std::abs(Complex(c.real(), wrap_phase(c.imag()))));
  return m;
}

double distance_to_lattice(const TraceValue& v) { return lattice_distance(v, TraceValue::zero(v.algebra())); }

Element unitary_log_any_branch(const Element& u) {
  try {
    return log_unitary_principal(u);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BranchCut) throw;
  }
  std::vector<Complex> spectrum;
  for (const auto& b : u.blocks()) {
    Eigen::ComplexEigenSolver<Matrix> es(b, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) spectrum.push_back(es.eigenvalues()(i));
  }
  constexpr int kCandidates = 64;
  double best_phi = 0.0, best_gap = -1.0;
  for (int j = 1; j < kCandidates; ++j) {
    const double phi = kTwoPi * j / kCandidates;
    const Complex rot = std::polar(1.0, -phi);
    double gap = std::numeric_limits<double>::infinity();
    for (Complex lambda : spectrum) gap = std::min(gap, std::abs(rot * lambda + 1.0));
    if (gap > best_gap) {
      best_gap = gap;
      best_phi = phi;
    }
  }
  const Element rotated = scale(std::polar(1.0, -best_phi), u);
  return log_unitary_principal(rotated) + Element::scalar(u.algebra(), best_phi);
}

InvertiblePath polar_connecting_path(const Element& x) {
  const Polar pd = polar(x);
  const Element h = unitary_log_any_branch(pd.unitary);
  const Element c = log_positive(pd.positive);
  return InvertiblePath::pointwise_product(InvertiblePath::exp_line(scale(Complex(0.0, 1.0), h)),
                                           InvertiblePath::exp_line(c));
}

InvertiblePath spectral_connecting_path(const Element& x) {
  if (!is_invertible(x)) throw Error(ErrorKind::SingularInput, "connecting path needs an invertible element");
  std::vector<Matrix> logs;
  for (const auto& b : x.blocks()) {
    Eigen::ComplexEigenSolver<Matrix> es(b);
    const Eigen::VectorXcd log_lambda = es.eigenvalues().array().log();
    const Matrix& v = es.eigenvectors();
    Matrix l = v * log_lambda.asDiagonal() * v.inverse();
    const Matrix back = v * es.eigenvalues().asDiagonal() * v.inverse();
    if ((back - b).norm() > 1e-8 * b.norm()) {
      throw Error(ErrorKind::NoConvergence, "spectral route needs a well-conditioned diagonalizable element");
    }
    logs.push_back(std::move(l));
  }
  return InvertiblePath::exp_line(Element(x.algebra(), std::move(logs)));
}

LatticeQuotientValue determinant_mod_lattice(const Element& x, const QuadratureConfig& quad) {
  return lattice_reduce(path_determinant(polar_connecting_path(x), quad));
}

DeterminantCrossCheck determinant_self_test(const Element& x, const QuadratureConfig& quad) {
  LatticeQuotientValue a = determinant_mod_lattice(x, quad);
  LatticeQuotientValue b = lattice_reduce(path_determinant(spectral_connecting_path(x), quad));
  const double gap = lattice_distance(a.representative, b.representative);
  return {std::move(a), std::move(b), gap};
}

LoopDeterminant delta_1_0(const InvertiblePath& loop, const QuadratureConfig& quad) {
  const AlgebraDescriptor& alg = loop.algebra();
  const Element one = Element::identity(alg);
  const Interval d = loop.domain();
  if (op_norm(loop.evaluate(d.lo) - one) > kLoopTol || op_norm(loop.evaluate(d.hi) - one) > kLoopTol) {
    throw Error(ErrorKind::NotALoop, "loop must start and end at the identity");
  }
  std::vector<double> probes = loop.breakpoints();
  constexpr int kProbes = 32;
  for (int j = 0; j <= kProbes; ++j) probes.push_back(d.lo + d.width() * j / kProbes);
  for (double t : probes) {
    if (unitarity_defect(loop.evaluate(t)) > kLoopTol) {
      throw Error(ErrorKind::NotUnitaryPath, "loop value is not unitary at t = " + std::to_string(t));
    }
  }

  TraceValue h = Complex(0.0, -1.0 / kTwoPi) * path_determinant(loop, quad);
  LoopDeterminant out{AffFunction{}, h, 0.0};
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double n = alg.block_size(i);
    out.function.values.push_back(h[i].real() / n);
    out.imaginary_residual = std::max(out.imaginary_residual, std::abs(h[i].imag()) / n);
  }
  return out;
}

}  // namespace apfp
