#include "apfp/aff_function.hpp"

#include <algorithm>
#include <cmath>

#include "apfp/error.hpp"

namespace apfp {

AffFunction operator+(const AffFunction& a, const AffFunction& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::RankMismatch, "affine functions on different simplices");
  AffFunction out{a.values};
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

AffFunction operator*(double s, const AffFunction& a) {
  AffFunction out{a.values};
  for (double& v : out.values) v *= s;
  return out;
}

double sup_norm(const AffFunction& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace apfp
