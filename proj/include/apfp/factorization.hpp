#pragma once

// Explicit constructions around products of positive elements: the unitary
// path of a product of two positive exponentials, its splitting into
// exponentials, commutator witnesses for determinant-one unitaries, the
// closure membership test and an optimizing factorizer.

#include <cstdint>
#include <optional>
#include <vector>

#include "apfp/algebra.hpp"
#include "apfp/hs_determinant.hpp"
#include "apfp/path.hpp"

namespace apfp {

/// t -> (e^{tc} e^{td}) |e^{tc} e^{td}|^{-1} on [0, 1] for self-adjoint c, d.
InvertiblePath polar_path(const Element& c, const Element& d);

struct ExponentialSplitting {
  std::vector<double> partition;  // 0 = t_0 < ... < t_N = 1
  std::vector<Element> logs;      // h_k with e^{i h_k} = u(t_{k-1})^{-1} u(t_k)

  /// e^{i h_1} e^{i h_2} ... e^{i h_N}.
  Element product() const;
  /// h_1 + ... + h_N.
  Element log_sum() const;
};

/// Coarsest dyadic partition whose steps (and their two halves) satisfy
/// ||u(a)^{-1} u(b) - 1|| <= max_step_norm; intervals are only split where
/// the bound fails. PartitionOverflow past 2^16 intervals.
ExponentialSplitting split_into_exponentials(const InvertiblePath& path, double max_step_norm = 0.5);

struct CommutatorPair {
  Element v;
  Element w;
};

/// v w v* w*.
Element group_commutator(const Element& v, const Element& w);

/// Writes a unitary with determinant one in every block as a single
/// multiplicative commutator of unitaries. DeterminantNotOne if some block
/// determinant is farther than 1e-8 from 1.
CommutatorPair commutator_factor_su(const Element& u);

struct MembershipResult {
  bool member = false;
  std::vector<double> block_phases;  // arg det of the unitary polar part
};

/// Closure of products of positives, restricted to invertibles: the unitary
/// polar part must have determinant phase within tol of 0 in every block.
MembershipResult membership_test(const Element& x, double tol = 1e-8);

struct OptimizerConfig {
  int restarts = 16;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-10;
  double target_residual = 1e-6;  // relative to ||x||
  std::uint64_t seed = 0;
  double membership_tol = 1e-8;
  int threads = 1;  // 0: hardware concurrency
};

class PositiveFactorization {
 public:
  /// Recomputes the residual from the factors.
  PositiveFactorization(std::vector<Element> factors, Element target);

  const std::vector<Element>& factors() const noexcept { return factors_; }
  const Element& target() const noexcept { return target_; }
  /// op_norm(product - target).
  double residual() const noexcept { return residual_; }
  Element product() const;

 private:
  std::vector<Element> factors_;
  Element target_;
  double residual_;
};

/// Thrown by factor_positive_products when no restart reaches the target.
class FactorizationNoConvergence : public Error {
 public:
  FactorizationNoConvergence(PositiveFactorization best, const std::string& what)
      : Error(ErrorKind::NoConvergence, what), best_(std::move(best)) {}
  const PositiveFactorization& best() const noexcept { return best_; }

 private:
  PositiveFactorization best_;
};

/// Writes x as a product of m positive invertible factors e^{h_1}...e^{h_m}
/// by multi-start quasi-Newton descent on ||prod - x||_F^2. The first restart
/// (in index order) reaching the target wins; otherwise the best one is
/// reported through FactorizationNoConvergence. NotInClosure if x fails the
/// membership test.
PositiveFactorization factor_positive_products(const Element& x, int m, const OptimizerConfig& opt = {});

/// Smallest op_norm(p_1...p_m - x) found over positive (possibly singular)
/// factors p_j = b_j b_j*; an upper bound on the distance from x to the
/// closure of products of positives.
double best_approx_distance(const Element& x, int m, const OptimizerConfig& opt = {});

}  // namespace apfp
