#pragma once

// Seeded generators and brute-force oracles shared by the test binaries.
// The oracles deliberately avoid the library's own numerical routes.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "apfp/algebra.hpp"

namespace apfp::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Matrix gaussian(int n) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(normal(), normal());
    return m;
  }

  Matrix hermitian(int n, double max_norm) {
    Matrix g = gaussian(n);
    Matrix h = 0.5 * (g + g.adjoint());
    const double norm = Eigen::JacobiSVD<Matrix>(h).singularValues()(0);
    return h * (uniform(0.1, 1.0) * max_norm / norm);
  }

  Matrix unitary(int n) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(n));
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
    return q;
  }

  Matrix special_unitary(int n) {
    Matrix u = unitary(n);
    const Complex det = u.determinant();
    return u * std::pow(std::conj(det) / std::abs(det), 1.0 / n);
  }

  Matrix positive_definite(int n) {
    Matrix g = gaussian(n);
    return g.adjoint() * g + 0.5 * Matrix::Identity(n, n);
  }

  Element element(const AlgebraDescriptor& alg) {
    std::vector<Matrix> b;
    for (int n : alg.block_sizes()) b.push_back(gaussian(n));
    return Element(alg, std::move(b));
  }
  Element hermitian(const AlgebraDescriptor& alg, double max_norm) {
    std::vector<Matrix> b;
    for (int n : alg.block_sizes()) b.push_back(hermitian(n, max_norm));
    return Element(alg, std::move(b));
  }
  Element positive_definite(const AlgebraDescriptor& alg) {
    std::vector<Matrix> b;
    for (int n : alg.block_sizes()) b.push_back(positive_definite(n));
    return Element(alg, std::move(b));
  }
  Element special_unitary(const AlgebraDescriptor& alg) {
    std::vector<Matrix> b;
    for (int n : alg.block_sizes()) b.push_back(special_unitary(n));
    return Element(alg, std::move(b));
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Element single(const Matrix& m) { return Element(std::vector<Matrix>{m}); }

inline Element diag(std::vector<Complex> entries) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(entries.size()), static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
  return single(m);
}

inline double distance(const Element& a, const Element& b) { return op_norm(a - b); }

/// Largest singular value by power iteration on x* x.
inline double power_iteration_norm(const Matrix& x, int iterations = 5000) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(x.cols());
  const Matrix g = x.adjoint() * x;
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Eigen::VectorXcd w = g * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    lambda = n / v.norm();
    v = w / n;
  }
  return std::sqrt(lambda);
}

/// Matrix exponential by scaling and squaring a truncated Taylor series.
inline Matrix taylor_exp(const Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const Matrix s = a / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * s / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

inline Element taylor_exp(const Element& a) {
  std::vector<Matrix> b;
  for (const auto& m : a.blocks()) b.push_back(taylor_exp(m));
  return Element(a.algebra(), std::move(b));
}

}  // namespace apfp::testing
