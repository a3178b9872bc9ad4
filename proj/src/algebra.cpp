#include "apfp/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace apfp {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidElement: return "InvalidElement";
    case ErrorKind::DescriptorMismatch: return "DescriptorMismatch";
    case ErrorKind::SingularInput: return "SingularInput";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::BranchCut: return "BranchCut";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SingularValueOnPath: return "SingularValueOnPath";
    case ErrorKind::InvalidPath: return "InvalidPath";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotALoop: return "NotALoop";
    case ErrorKind::NotUnitaryPath: return "NotUnitaryPath";
    case ErrorKind::PartitionOverflow: return "PartitionOverflow";
    case ErrorKind::DeterminantNotOne: return "DeterminantNotOne";
    case ErrorKind::NotInClosure: return "NotInClosure";
    case ErrorKind::RankMismatch: return "RankMismatch";
    case ErrorKind::RankTooHighForDensity: return "RankTooHighForDensity";
    case ErrorKind::InconsistentFlags: return "InconsistentFlags";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

using HermitianSolver = Eigen::SelfAdjointEigenSolver<Matrix>;

void require_same(const AlgebraDescriptor& a, const AlgebraDescriptor& b) {
  if (!(a == b)) throw Error(ErrorKind::DescriptorMismatch, "operands live in different algebras");
}

template <class F>
Element map_blocks(const Element& x, F&& f) {
  std::vector<Matrix> out;
  out.reserve(x.num_blocks());
  for (const auto& b : x.blocks()) out.push_back(f(b));
  return Element(x.algebra(), std::move(out));
}

template <class F>
Element zip_blocks(const Element& x, const Element& y, F&& f) {
  require_same(x.algebra(), y.algebra());
  std::vector<Matrix> out;
  out.reserve(x.num_blocks());
  for (std::size_t i = 0; i < x.num_blocks(); ++i) out.push_back(f(x.block(i), y.block(i)));
  return Element(x.algebra(), std::move(out));
}

double block_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix herm(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Applies a real function to the spectrum of a Hermitian block.
template <class F>
Matrix hermitian_function(const Matrix& h, F&& f) {
  HermitianSolver es(herm(h));
  Eigen::VectorXcd d(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = f(es.eigenvalues()(i));
  return herm(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint());
}

bool is_hermitian_block(const Matrix& m, double rel) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel * (1.0 + m.cwiseAbs().maxCoeff());
}

Matrix exp_block(const Matrix& h) {
  constexpr double kStructureTol = 1e-14;
  if (is_hermitian_block(h, kStructureTol)) {
    return hermitian_function(h, [](double l) { return Complex(std::exp(l), 0.0); });
  }
  const Matrix k = Complex(0.0, -1.0) * h;  // h = i k
  if (is_hermitian_block(k, kStructureTol)) {
    HermitianSolver es(herm(k));
    Eigen::VectorXcd d(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = std::polar(1.0, es.eigenvalues()(i));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  }
  return h.exp();
}

// Scaled Newton iteration for the unitary polar factor.
Matrix polar_unitary_block(const Matrix& x) {
  Matrix u = x;
  for (int iter = 0; iter < 100; ++iter) {
    const Matrix inv_adj = u.inverse().adjoint();
    double zeta = std::sqrt(inv_adj.norm() / u.norm());
    if (!std::isfinite(zeta) || zeta <= 0.0) zeta = 1.0;
    const Matrix next = 0.5 * (zeta * u + inv_adj / zeta);
    const double change = (next - u).norm();
    u = next;
    if (change <= 1e-15 * u.norm()) break;
  }
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------

AlgebraDescriptor::AlgebraDescriptor(std::vector<int> block_sizes) : sizes_(std::move(block_sizes)) {
  if (sizes_.empty()) throw Error(ErrorKind::InvalidElement, "an algebra needs at least one block");
  for (int n : sizes_) {
    if (n < 1) throw Error(ErrorKind::InvalidElement, "block sizes must be positive");
  }
}

int AlgebraDescriptor::total_dimension() const noexcept {
  int total = 0;
  for (int n : sizes_) total += n * n;
  return total;
}

namespace {
AlgebraDescriptor infer_descriptor(const std::vector<Matrix>& blocks) {
  std::vector<int> sizes;
  sizes.reserve(blocks.size());
  for (const auto& b : blocks) {
    if (b.rows() != b.cols()) throw Error(ErrorKind::InvalidElement, "blocks must be square");
    sizes.push_back(static_cast<int>(b.rows()));
  }
  return AlgebraDescriptor(std::move(sizes));
}
}  // namespace

Element::Element(AlgebraDescriptor algebra, std::vector<Matrix> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  if (blocks_.size() != algebra_.num_blocks()) {
    throw Error(ErrorKind::InvalidElement, "block count does not match the descriptor");
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const int n = algebra_.block_size(i);
    if (blocks_[i].rows() != n || blocks_[i].cols() != n) {
      std::ostringstream os;
      os << "block " << i << " has shape " << blocks_[i].rows() << "x" << blocks_[i].cols() << ", expected " << n
         << "x" << n;
      throw Error(ErrorKind::InvalidElement, os.str());
    }
    if (!blocks_[i].allFinite()) throw Error(ErrorKind::InvalidElement, "non-finite entry");
  }
}

Element::Element(std::vector<Matrix> blocks) : algebra_(infer_descriptor(blocks)), blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    if (!b.allFinite()) throw Error(ErrorKind::InvalidElement, "non-finite entry");
  }
}

Element Element::identity(const AlgebraDescriptor& algebra) { return scalar(algebra, 1.0); }

Element Element::zero(const AlgebraDescriptor& algebra) { return scalar(algebra, 0.0); }

Element Element::scalar(const AlgebraDescriptor& algebra, Complex value) {
  std::vector<Matrix> blocks;
  for (int n : algebra.block_sizes()) blocks.push_back(value * Matrix::Identity(n, n));
  return Element(algebra, std::move(blocks));
}

bool operator==(const Element& a, const Element& b) {
  if (!(a.algebra_ == b.algebra_)) return false;
  for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
    if (a.blocks_[i] != b.blocks_[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

TraceValue::TraceValue(AlgebraDescriptor algebra, std::vector<Complex> coords)
    : algebra_(std::move(algebra)), coords_(std::move(coords)) {
  if (coords_.size() != algebra_.num_blocks()) {
    throw Error(ErrorKind::DescriptorMismatch, "trace value length does not match the block count");
  }
}

TraceValue TraceValue::zero(const AlgebraDescriptor& algebra) {
  return TraceValue(algebra, std::vector<Complex>(algebra.num_blocks()));
}

TraceValue& TraceValue::operator+=(const TraceValue& other) {
  require_same(algebra_, other.algebra_);
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += other.coords_[i];
  return *this;
}

TraceValue& TraceValue::operator-=(const TraceValue& other) {
  require_same(algebra_, other.algebra_);
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= other.coords_[i];
  return *this;
}

TraceValue& TraceValue::operator*=(Complex s) {
  for (auto& c : coords_) c *= s;
  return *this;
}

TraceValue operator+(TraceValue a, const TraceValue& b) { return a += b; }
TraceValue operator-(TraceValue a, const TraceValue& b) { return a -= b; }
TraceValue operator*(Complex s, TraceValue v) { return v *= s; }

double max_abs(const TraceValue& v) {
  double m = 0.0;
  for (Complex c : v.coords()) m = std::max(m, std::abs(c));
  return m;
}

// ---------------------------------------------------------------------------

Element adjoint(const Element& x) {
  return map_blocks(x, [](const Matrix& b) -> Matrix { return b.adjoint(); });
}

Element mul(const Element& x, const Element& y) {
  return zip_blocks(x, y, [](const Matrix& a, const Matrix& b) -> Matrix { return a * b; });
}

Element add(const Element& x, const Element& y) {
  return zip_blocks(x, y, [](const Matrix& a, const Matrix& b) -> Matrix { return a + b; });
}

Element sub(const Element& x, const Element& y) {
  return zip_blocks(x, y, [](const Matrix& a, const Matrix& b) -> Matrix { return a - b; });
}

Element scale(Complex lambda, const Element& x) {
  return map_blocks(x, [lambda](const Matrix& b) -> Matrix { return lambda * b; });
}

Element inverse(const Element& x) {
  if (!is_invertible(x)) throw Error(ErrorKind::SingularInput, "element is not invertible");
  return map_blocks(x, [](const Matrix& b) -> Matrix { return b.partialPivLu().inverse(); });
}

Element commutator(const Element& x, const Element& y) {
  return zip_blocks(x, y, [](const Matrix& a, const Matrix& b) -> Matrix { return a * b - b * a; });
}

double op_norm(const Element& x) {
  double m = 0.0;
  for (const auto& b : x.blocks()) m = std::max(m, block_norm(b));
  return m;
}

double min_singular_value(const Element& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : x.blocks()) {
    Eigen::JacobiSVD<Matrix> svd(b);
    m = std::min(m, svd.singularValues()(svd.singularValues().size() - 1));
  }
  return m;
}

double unitarity_defect(const Element& x) {
  double m = 0.0;
  for (const auto& b : x.blocks()) {
    m = std::max(m, block_norm(b.adjoint() * b - Matrix::Identity(b.rows(), b.cols())));
  }
  return m;
}

bool is_self_adjoint(const Element& x, double tol) { return op_norm(x - adjoint(x)) <= tol; }

bool is_positive(const Element& x, double tol) {
  if (!is_self_adjoint(x, tol)) return false;
  for (const auto& b : x.blocks()) {
    HermitianSolver es(herm(b), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) return false;
  }
  return true;
}

bool is_positive(const Element& x) { return is_positive(x, kPositivityRelTol * op_norm(x)); }

bool is_invertible(const Element& x) {
  const double norm = op_norm(x);
  return norm > 0.0 && min_singular_value(x) > kSingularRelTol * norm;
}

std::vector<Complex> block_determinants(const Element& x) {
  std::vector<Complex> dets;
  for (const auto& b : x.blocks()) dets.push_back(b.determinant());
  return dets;
}

Polar polar(const Element& x) {
  if (!is_invertible(x)) {
    throw Error(ErrorKind::SingularInput, "polar decomposition needs an invertible element");
  }
  std::vector<Matrix> us, ps;
  for (const auto& b : x.blocks()) {
    Matrix u = polar_unitary_block(b);
    ps.push_back(herm(u.adjoint() * b));
    us.push_back(std::move(u));
  }
  return {Element(x.algebra(), std::move(us)), Element(x.algebra(), std::move(ps))};
}

Element hermitian_part(const Element& x) { return map_blocks(x, herm); }

Element exp_element(const Element& h) { return map_blocks(h, exp_block); }

Element log_positive(const Element& a) {
  const double norm = op_norm(a);
  if (!is_positive(a) || !is_invertible(a)) {
    throw Error(ErrorKind::NotPositive, "log_positive needs a positive invertible element");
  }
  const double floor = kSingularRelTol * norm;
  return map_blocks(a, [floor](const Matrix& b) {
    return hermitian_function(b, [floor](double l) { return Complex(std::log(std::max(l, floor)), 0.0); });
  });
}

Element log_unitary_principal(const Element& u, double gap) {
  constexpr double kUnitaryTol = 1e-8;
  if (unitarity_defect(u) > kUnitaryTol) throw Error(ErrorKind::NotUnitary, "log_unitary_principal needs a unitary");
  return map_blocks(u, [gap](const Matrix& b) -> Matrix {
    Eigen::ComplexSchur<Matrix> schur(b);
    const Matrix& t = schur.matrixT();
    const Matrix& q = schur.matrixU();
    Eigen::VectorXcd phases(t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const Complex lambda = t(i, i);
      if (std::abs(lambda + 1.0) <= gap) {
        throw Error(ErrorKind::BranchCut, "unitary has an eigenvalue within the branch gap of -1");
      }
      phases(i) = std::arg(lambda);
    }
    return herm(q * phases.asDiagonal() * q.adjoint());
  });
}

Element log_principal(const Element& x) {
  return map_blocks(x, [](const Matrix& b) -> Matrix {
    Eigen::ComplexEigenSolver<Matrix> es(b, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const Complex lambda = es.eigenvalues()(i);
      if (std::abs(lambda) == 0.0 ||
          (lambda.real() < 0.0 && std::abs(lambda.imag()) <= kBranchGap * std::abs(lambda))) {
        throw Error(ErrorKind::BranchCut, "spectrum touches the closed negative real axis");
      }
    }
    return b.log();
  });
}

Element sqrt_positive(const Element& a) {
  if (!is_positive(a)) throw Error(ErrorKind::NotPositive, "sqrt_positive needs a positive element");
  return map_blocks(a, [](const Matrix& b) {
    return hermitian_function(b, [](double l) { return Complex(std::sqrt(std::max(l, 0.0)), 0.0); });
  });
}

Element inv_sqrt_positive(const Element& a) {
  if (!is_positive(a) || !is_invertible(a)) {
    throw Error(ErrorKind::NotPositive, "inv_sqrt_positive needs a positive invertible element");
  }
  return map_blocks(a, [](const Matrix& b) {
    return hermitian_function(b, [](double l) { return Complex(1.0 / std::sqrt(l), 0.0); });
  });
}

TraceValue universal_trace(const Element& x) {
  std::vector<Complex> coords;
  for (const auto& b : x.blocks()) coords.push_back(b.trace());
  return TraceValue(x.algebra(), std::move(coords));
}

double quotient_norm(const TraceValue& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]) / v.algebra().block_size(i));
  return m;
}

Element project_traceless(const Element& x) {
  return map_blocks(x, [](const Matrix& b) -> Matrix {
    const Complex mean = b.trace() / static_cast<double>(b.rows());
    return b - mean * Matrix::Identity(b.rows(), b.cols());
  });
}

}  // namespace apfp
