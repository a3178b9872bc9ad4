#pragma once

// Finite-dimensional C*-algebras A = M_{n_1}(C) + ... + M_{n_k}(C) and their
// elements, stored as tuples of dense complex blocks.

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "apfp/error.hpp"

namespace apfp {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

class AlgebraDescriptor {
 public:
  explicit AlgebraDescriptor(std::vector<int> block_sizes);

  std::size_t num_blocks() const noexcept { return sizes_.size(); }
  int block_size(std::size_t i) const { return sizes_.at(i); }
  std::span<const int> block_sizes() const noexcept { return sizes_; }
  /// Sum of n_i^2, the complex dimension of the algebra.
  int total_dimension() const noexcept;

  friend bool operator==(const AlgebraDescriptor&, const AlgebraDescriptor&) = default;

 private:
  std::vector<int> sizes_;
};

class Element {
 public:
  /// Validates block shapes against the descriptor and rejects NaN/Inf.
  Element(AlgebraDescriptor algebra, std::vector<Matrix> blocks);
  /// Descriptor inferred from the (square) block shapes.
  explicit Element(std::vector<Matrix> blocks);

  static Element identity(const AlgebraDescriptor& algebra);
  static Element zero(const AlgebraDescriptor& algebra);
  /// Scalar multiple of the identity.
  static Element scalar(const AlgebraDescriptor& algebra, Complex value);

  const AlgebraDescriptor& algebra() const noexcept { return algebra_; }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  const Matrix& block(std::size_t i) const { return blocks_.at(i); }
  const std::vector<Matrix>& blocks() const noexcept { return blocks_; }

  friend bool operator==(const Element& a, const Element& b);

 private:
  AlgebraDescriptor algebra_;
  std::vector<Matrix> blocks_;
};

/// Block traces: the image of an element in A/[A,A], which is C^k here.
class TraceValue {
 public:
  TraceValue(AlgebraDescriptor algebra, std::vector<Complex> coords);
  static TraceValue zero(const AlgebraDescriptor& algebra);

  const AlgebraDescriptor& algebra() const noexcept { return algebra_; }
  std::span<const Complex> coords() const noexcept { return coords_; }
  Complex operator[](std::size_t i) const { return coords_.at(i); }
  std::size_t size() const noexcept { return coords_.size(); }

  TraceValue& operator+=(const TraceValue& other);
  TraceValue& operator-=(const TraceValue& other);
  TraceValue& operator*=(Complex s);

  friend bool operator==(const TraceValue&, const TraceValue&) = default;

 private:
  AlgebraDescriptor algebra_;
  std::vector<Complex> coords_;
};

TraceValue operator+(TraceValue a, const TraceValue& b);
TraceValue operator-(TraceValue a, const TraceValue& b);
TraceValue operator*(Complex s, TraceValue v);
/// Largest coordinate modulus.
double max_abs(const TraceValue& v);

// ---------------------------------------------------------------------------
// *-algebra structure

Element adjoint(const Element& x);
Element mul(const Element& x, const Element& y);
Element add(const Element& x, const Element& y);
Element sub(const Element& x, const Element& y);
Element scale(Complex lambda, const Element& x);
Element inverse(const Element& x);
Element commutator(const Element& x, const Element& y);

inline Element operator*(const Element& x, const Element& y) { return mul(x, y); }
inline Element operator+(const Element& x, const Element& y) { return add(x, y); }
inline Element operator-(const Element& x, const Element& y) { return sub(x, y); }
inline Element operator*(Complex s, const Element& x) { return scale(s, x); }

// ---------------------------------------------------------------------------
// Norms and spectral predicates

/// C*-norm: the largest singular value over all blocks.
double op_norm(const Element& x);
double min_singular_value(const Element& x);
/// ||x* x - 1||.
double unitarity_defect(const Element& x);

inline constexpr double kPositivityRelTol = 1e-12;
inline constexpr double kSingularRelTol = 1e-12;
inline constexpr double kBranchGap = 1e-6;

/// ||x - x*|| <= tol and the spectrum of (x + x*)/2 is >= -tol.
bool is_positive(const Element& x, double tol);
/// Uses the default relative floor 1e-12 * ||x||.
bool is_positive(const Element& x);
bool is_self_adjoint(const Element& x, double tol);
/// Smallest singular value strictly above kSingularRelTol * ||x||.
bool is_invertible(const Element& x);

/// Per-block determinants.
std::vector<Complex> block_determinants(const Element& x);

// ---------------------------------------------------------------------------
// Polar decomposition and functional calculus

struct Polar {
  Element unitary;
  Element positive;
};

/// x = u |x| for invertible x. Throws SingularInput below the threshold.
Polar polar(const Element& x);

/// (x + x*)/2.
Element hermitian_part(const Element& x);

Element exp_element(const Element& h);
/// Self-adjoint c with e^c = a for positive invertible a; NotPositive otherwise.
Element log_positive(const Element& a);
/// Self-adjoint h with spectrum in (-pi, pi) and e^{ih} = u. BranchCut if an
/// eigenvalue of u is within `gap` of -1.
Element log_unitary_principal(const Element& u, double gap = kBranchGap);
/// Principal logarithm of a general invertible element with no spectrum on
/// the closed negative real axis (used for steps close to the identity).
Element log_principal(const Element& x);
/// a^{1/2} and a^{-1/2} for positive invertible a.
Element sqrt_positive(const Element& a);
Element inv_sqrt_positive(const Element& a);

// ---------------------------------------------------------------------------
// Universal trace and the commutator quotient

TraceValue universal_trace(const Element& x);
/// Quotient norm on A/[A,A]: max_i |coords_i| / n_i.
double quotient_norm(const TraceValue& v);
/// x minus its block-scalar part; lies in [A,A].
Element project_traceless(const Element& x);

}  // namespace apfp
