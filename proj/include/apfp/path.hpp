#pragma once

// Smooth (piecewise smooth) paths of invertible elements, built from closed
// forms or from samples. Each kind knows its own derivative exactly.

#include <memory>
#include <variant>
#include <vector>

#include "apfp/algebra.hpp"

namespace apfp {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const noexcept { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

class InvertiblePath;

namespace path_kind {

/// t -> e^{tc}.
struct ExpLine {
  Element c;
};

/// t -> g_t |g_t|^{-1} with g_t = e^{tc} e^{td}: the unitary part of a
/// product of two positive exponentials.
struct ProductPolar {
  Element c;
  Element d;
};

/// t -> |e^{tc} e^{td}|, the positive part of the same product.
struct PolarModulus {
  Element c;
  Element d;
};

struct Sample {
  double t;
  Element value;
};

/// Geodesic interpolation between samples:
/// x_j exp(s log(x_j^{-1} x_{j+1})), s = (t - t_j) / (t_{j+1} - t_j).
struct Sampled {
  std::vector<Sample> samples;
  std::vector<Element> step_logs;  // log(x_j^{-1} x_{j+1}), one per segment
};

struct PointwiseProduct {
  std::shared_ptr<const InvertiblePath> first;
  std::shared_ptr<const InvertiblePath> second;
};

/// First path, then the second shifted to start where the first ends.
struct Concatenation {
  std::shared_ptr<const InvertiblePath> first;
  std::shared_ptr<const InvertiblePath> second;
};

/// t -> path(lo + hi - t).
struct Reversal {
  std::shared_ptr<const InvertiblePath> inner;
};

}  // namespace path_kind

struct PathJet {
  Element value;
  Element derivative;
};

class InvertiblePath {
 public:
  using Kind = std::variant<path_kind::ExpLine, path_kind::ProductPolar, path_kind::PolarModulus, path_kind::Sampled,
                            path_kind::PointwiseProduct, path_kind::Concatenation, path_kind::Reversal>;

  static InvertiblePath exp_line(Element c, Interval domain = {});
  /// Requires self-adjoint c and d.
  static InvertiblePath product_polar(Element c, Element d, Interval domain = {});
  static InvertiblePath polar_modulus(Element c, Element d, Interval domain = {});
  /// Requires >= 2 samples with strictly increasing parameters, invertible
  /// values, and ||x_{j+1} x_j^{-1} - 1|| < 1/2 between neighbours.
  static InvertiblePath sampled(std::vector<path_kind::Sample> samples);
  /// Both paths must share the algebra and the domain.
  static InvertiblePath pointwise_product(InvertiblePath first, InvertiblePath second);
  static InvertiblePath concatenation(InvertiblePath first, InvertiblePath second);
  static InvertiblePath reversal(InvertiblePath inner);

  const AlgebraDescriptor& algebra() const noexcept { return algebra_; }
  Interval domain() const noexcept { return domain_; }
  const Kind& kind() const noexcept { return kind_; }

  /// Throws OutOfDomain outside the domain (up to rounding slack).
  Element evaluate(double t) const;
  /// Value and exact derivative. At a breakpoint the right-sided derivative
  /// is returned, or the left-sided one at the right end of the domain.
  PathJet jet(double t) const;
  /// One-sided jet, for integrating piece by piece between breakpoints.
  PathJet jet(double t, bool from_left) const;
  /// Interior parameters where the derivative may jump, sorted.
  std::vector<double> breakpoints() const;

 private:
  InvertiblePath(AlgebraDescriptor algebra, Interval domain, Kind kind);

  double clamp_to_domain(double t) const;
  PathJet jet_impl(double t, bool from_left) const;

  AlgebraDescriptor algebra_;
  Interval domain_;
  Kind kind_;
};

/// Fourth-order central difference of the path value; an independent
/// cross-check of the closed-form derivatives on smooth stretches.
Element finite_difference_derivative(const InvertiblePath& path, double t, double step);

}  // namespace apfp
