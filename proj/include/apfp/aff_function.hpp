#pragma once

#include <cstddef>
#include <vector>

namespace apfp {

/// A continuous affine function on the trace simplex of a block algebra,
/// stored by its values at the k extreme tracial states.
struct AffFunction {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values.at(i); }

  friend bool operator==(const AffFunction&, const AffFunction&) = default;
};

AffFunction operator+(const AffFunction& a, const AffFunction& b);
AffFunction operator*(double s, const AffFunction& a);
/// Sup norm over the simplex, attained at an extreme point.
double sup_norm(const AffFunction& f);

}  // namespace apfp
