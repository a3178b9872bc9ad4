#pragma once

// The four conditions characterizing the approximate positive factorization
// property: no finite-dimensional representations, stable rank one, trivial
// K_1 and dense range of the pairing K_0 -> Aff(T(A)).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "apfp/aff_function.hpp"
#include "apfp/algebra.hpp"
#include "apfp/hs_determinant.hpp"
#include "apfp/path.hpp"

namespace apfp {

using Rational = boost::multiprecision::cpp_rational;

/// "p/q" or "p"; ParseError otherwise.
Rational parse_rational(const std::string& text);
std::string to_string(const Rational& r);

/// The extreme tracial states tau_i(x) = tr(x_i) / n_i of a block algebra.
class TraceSimplex {
 public:
  explicit TraceSimplex(AlgebraDescriptor alg) : alg_(std::move(alg)) {}

  const AlgebraDescriptor& algebra() const noexcept { return alg_; }
  std::size_t rank() const noexcept { return alg_.num_blocks(); }
  Complex evaluate(std::size_t i, const Element& x) const;

 private:
  AlgebraDescriptor alg_;
};

/// rho(g)_i = g_i / n_i. RankMismatch if g has the wrong length.
AffFunction rho(const std::vector<std::int64_t>& g, const TraceSimplex& simplex);
std::vector<Rational> rho_exact(const std::vector<std::int64_t>& g, const TraceSimplex& simplex);

/// a + b theta for a fixed symbolic irrational theta.
struct SymbolicReal {
  Rational a;
  Rational b;

  friend bool operator==(const SymbolicReal&, const SymbolicReal&) = default;
};

/// Generator images of K_0 under the pairing, one vector of length rank per
/// generator.
struct K0Data {
  std::size_t rank = 0;
  std::vector<std::vector<SymbolicReal>> generators;
};

K0Data k0_data(const AlgebraDescriptor& alg);

struct DensityDecision {
  bool dense = false;
  /// When the subgroup is cyclic: a generator (zero for the trivial group).
  std::optional<SymbolicReal> generator;
};

/// Whether the subgroup of R generated by the values is dense. Exact; the
/// subgroup is dense iff it is not cyclic.
DensityDecision decide_density(const std::vector<SymbolicReal>& values);

enum class Source { Computed, Asserted, ClosedForm };
std::string_view to_string(Source s);

struct Condition {
  bool holds = false;
  Source source = Source::Computed;
  std::string note;
};

/// An affine function far from the image lattice of rho.
struct LatticeWitness {
  std::vector<Rational> function;
  std::vector<Rational> nearest;
  Rational distance;
};

struct StableRankProbe {
  int samples = 0;
  double epsilon = 0.0;
  double max_distance = 0.0;  // ||x - x'|| over the probes
  bool all_invertible = false;
};

struct ConditionReport {
  Condition no_findim_reps;
  Condition stable_rank_one;
  Condition k1_trivial;
  Condition rho_dense;
  bool apfp_verdict = false;

  std::optional<int> representation_dimension;  // witness for no_findim_reps
  std::optional<StableRankProbe> probe;
  std::optional<LatticeWitness> lattice_witness;
  std::optional<SymbolicReal> cyclic_generator;

  /// Names of the conditions that fail, in declaration order.
  std::vector<std::string> failing() const;
};

ConditionReport check_conditions(const AlgebraDescriptor& alg, std::uint64_t seed = 0);

struct AbstractDescriptor {
  K0Data k0;
  bool no_findim_reps = false;
  bool stable_rank_one = false;
  bool k1_trivial = false;
  std::optional<bool> rho_dense;  // required when rank > 1
};

/// Applies the characterization to asserted data. RankTooHighForDensity if
/// rank > 1 and density is not asserted; InconsistentFlags if an asserted
/// density contradicts the exact rank-one decision.
ConditionReport check_abstract(const AbstractDescriptor& desc);

struct PairingCheck {
  bool consistent = false;
  AffFunction value;                  // Delta_1^0 of the loop
  std::vector<std::int64_t> nearest;  // K_0 class of the nearest lattice point
  AffFunction nearest_point;          // rho(nearest)
  double distance = 0.0;              // max norm
};

/// Checks that Delta_1^0(loop) lies within 1e-6 of rho(K_0(A)).
PairingCheck pairing_consistency(const AlgebraDescriptor& alg, const InvertiblePath& loop,
                                 const QuadratureConfig& quad = {});

}  // namespace apfp
