#pragma once

// The de la Harpe-Skandalis determinant of paths of invertibles, computed as
// the integral of T(a'(t) a(t)^{-1}), and its reduction modulo 2*pi*i*Z^k,
// the image of K_0 under the universal trace for block algebras.

#include "apfp/aff_function.hpp"
#include "apfp/algebra.hpp"
#include "apfp/path.hpp"

namespace apfp {

struct QuadratureConfig {
  int steps = 256;
  double tol = 1e-9;
  long max_steps = 1L << 20;
};

/// T(a'(t) a(t)^{-1}). Throws SingularValueOnPath if a(t) is numerically
/// singular.
TraceValue determinant_integrand(const InvertiblePath& path, double t);

/// Composite Simpson on each smooth piece of the path, doubling until two
/// successive estimates agree within quad.tol. NoConvergence past max_steps.
TraceValue path_determinant(const InvertiblePath& path, const QuadratureConfig& quad = {});

/// A coset of the lattice 2*pi*i*Z^k; the representative has every imaginary
/// part in [0, 2*pi).
struct LatticeQuotientValue {
  TraceValue representative;
};

LatticeQuotientValue lattice_reduce(const TraceValue& v);
/// Max-coordinate distance between the cosets of a and b.
double lattice_distance(const TraceValue& a, const TraceValue& b);
/// Distance from v to the lattice itself.
double distance_to_lattice(const TraceValue& v);

/// Self-adjoint h with e^{ih} = u. Uses the principal branch when possible
/// and otherwise rotates by a scalar phase to move the spectrum off -1.
Element unitary_log_any_branch(const Element& u);

/// The path t -> e^{ith} e^{tc} from 1 to x built from the polar data of x.
InvertiblePath polar_connecting_path(const Element& x);
/// t -> e^{tL} with L a blockwise spectral logarithm of x.
InvertiblePath spectral_connecting_path(const Element& x);

LatticeQuotientValue determinant_mod_lattice(const Element& x, const QuadratureConfig& quad = {});

struct DeterminantCrossCheck {
  LatticeQuotientValue polar_route;
  LatticeQuotientValue spectral_route;
  double discrepancy;  // lattice distance between the two
};

/// Computes the determinant along two unrelated connecting paths.
DeterminantCrossCheck determinant_self_test(const Element& x, const QuadratureConfig& quad = {});

struct LoopDeterminant {
  AffFunction function;       // tau_i -> Re(h_i) / n_i
  TraceValue h;               // Delta / (2 pi i)
  double imaginary_residual;  // max_i |Im h_i| / n_i
};

/// The loop map: h = Delta(loop) / (2 pi i) paired with the extreme traces.
/// NotALoop unless both endpoints are within 1e-8 of 1; NotUnitaryPath if a
/// probed value is not unitary to 1e-8.
LoopDeterminant delta_1_0(const InvertiblePath& loop, const QuadratureConfig& quad = {});

}  // namespace apfp
