#include "apfp/factorization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <thread>

#include "apfp/optimizer.hpp"

namespace apfp {

namespace {

constexpr double kPathTol = 1e-8;
constexpr std::size_t kMaxIntervals = std::size_t{1} << 16;

Matrix herm(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// ---------------------------------------------------------------------------
// Block product objectives. A factor is a smooth map from a real parameter
// vector to a positive matrix; the objective is a unitarily invariant norm of
// (E_1 ... E_m - X), and its gradient is pulled back factor by factor.

// E = e^H with H Hermitian: n real diagonal entries then (re, im) pairs of
// the strict upper triangle.
struct ExpFactor {
  static int dim(int n) { return n * n; }

  Matrix value;
  Matrix w;
  Eigen::VectorXd lambda;

  ExpFactor(const double* p, int n) {
    Matrix h(n, n);
    int k = 0;
    for (int a = 0; a < n; ++a) h(a, a) = p[k++];
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        h(a, b) = Complex(p[k], p[k + 1]);
        h(b, a) = std::conj(h(a, b));
        k += 2;
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    w = es.eigenvectors();
    lambda = es.eigenvalues();
    value = herm(w * lambda.array().exp().matrix().asDiagonal() * w.adjoint());
  }

  // Gradient of 2 Re <K, dE> with respect to the parameters.
  void pullback(const Matrix& k, double* grad) const {
    const int n = static_cast<int>(lambda.size());
    Matrix kt = w.adjoint() * k * w;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double la = lambda(a), lb = lambda(b);
        const double half = 0.5 * (la - lb);
        const double divided = std::abs(half) < 1e-8 ? std::exp(0.5 * (la + lb)) * (1.0 + half * half / 6.0)
                                                     : std::exp(0.5 * (la + lb)) * std::sinh(half) / half;
        kt(a, b) *= divided;
      }
    }
    const Matrix m = w * kt * w.adjoint();
    int idx = 0;
    for (int a = 0; a < n; ++a) grad[idx++] = 2.0 * m(a, a).real();
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        grad[idx++] = 2.0 * (m(a, b) + m(b, a)).real();
        grad[idx++] = 2.0 * (m(a, b).imag() - m(b, a).imag());
      }
    }
  }
};

// E = B B* with B an arbitrary complex matrix, stored column-major as
// (re, im) pairs. Allows singular factors.
struct GramFactor {
  static int dim(int n) { return 2 * n * n; }

  Matrix b;
  Matrix value;

  GramFactor(const double* p, int n) : b(n, n) {
    for (int i = 0; i < n * n; ++i) b.data()[i] = Complex(p[2 * i], p[2 * i + 1]);
    value = b * b.adjoint();
  }

  void pullback(const Matrix& k, double* grad) const {
    const Matrix m = (k + k.adjoint()) * b;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      grad[2 * i] = 2.0 * m.data()[i].real();
      grad[2 * i + 1] = 2.0 * m.data()[i].imag();
    }
  }
};

// f = tr((R* R)^p) / scale with R = E_1 ... E_m - X.
template <class Factor>
double product_objective(const Matrix& x, int m, int schatten_half, double scale, const Eigen::VectorXd& params,
                         Eigen::VectorXd& grad) {
  const int n = static_cast<int>(x.rows());
  const int d = Factor::dim(n);
  std::vector<Factor> factors;
  factors.reserve(m);
  for (int j = 0; j < m; ++j) factors.emplace_back(params.data() + j * d, n);

  std::vector<Matrix> prefix(m + 1), suffix(m + 1);
  prefix[0] = Matrix::Identity(n, n);
  for (int j = 0; j < m; ++j) prefix[j + 1] = prefix[j] * factors[j].value;
  suffix[m] = Matrix::Identity(n, n);
  for (int j = m; j-- > 0;) suffix[j] = factors[j].value * suffix[j + 1];

  const Matrix r = prefix[m] - x;
  const Matrix rr = r.adjoint() * r;
  Matrix power = Matrix::Identity(n, n);  // (R* R)^{p-1}
  for (int k = 1; k < schatten_half; ++k) power = power * rr;
  const double value = (power * rr).trace().real() / scale;
  const Matrix g = (static_cast<double>(schatten_half) / scale) * (r * power);

  grad.resize(params.size());
  for (int j = 0; j < m; ++j) {
    const Matrix k = prefix[j].adjoint() * g * suffix[j + 1].adjoint();
    factors[j].pullback(k, grad.data() + j * d);
  }
  return value;
}

// Inverse of the ExpFactor parameter layout.
void pack_hermitian(const Matrix& h, double* p) {
  const int n = static_cast<int>(h.rows());
  int k = 0;
  for (int a = 0; a < n; ++a) p[k++] = h(a, a).real();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      p[k++] = h(a, b).real();
      p[k++] = h(a, b).imag();
    }
  }
}

// Sorted eigenphases of a unitary with determinant one, shifted by multiples
// of 2 pi so they sum to zero. Returns the Schur basis reordered to match.
std::vector<double> balanced_phases(const Matrix& u, Matrix& basis) {
  const int n = static_cast<int>(u.rows());
  Eigen::ComplexSchur<Matrix> schur(u);
  const Matrix& q = schur.matrixU();
  std::vector<int> order(n);
  std::vector<double> theta(n);
  for (int j = 0; j < n; ++j) {
    order[j] = j;
    theta[j] = std::arg(schur.matrixT()(j, j));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] < theta[b]; });
  std::vector<double> sorted(n);
  basis.resize(n, n);
  for (int j = 0; j < n; ++j) {
    sorted[j] = theta[order[j]];
    basis.col(j) = q.col(order[j]);
  }
  // shift the largest ones down (or the smallest ones up) by 2 pi, then
  // spread the rounding residue
  double total = 0.0;
  for (double t : sorted) total += t;
  const long wraps = std::lround(total / (2.0 * std::numbers::pi));
  for (long k = 0; k < std::min<long>(std::abs(wraps), n); ++k) {
    if (wraps > 0) {
      sorted[n - 1 - k] -= 2.0 * std::numbers::pi;
    } else {
      sorted[k] += 2.0 * std::numbers::pi;
    }
  }
  total = 0.0;
  for (double t : sorted) total += t;
  for (double& t : sorted) t -= total / n;
  return sorted;
}

template <class Factor>
std::vector<Matrix> unpack_factors(const Eigen::VectorXd& params, int n, int m) {
  std::vector<Matrix> out;
  for (int j = 0; j < m; ++j) out.push_back(Factor(params.data() + j * Factor::dim(n), n).value);
  return out;
}

std::mt19937_64 restart_rng(std::uint64_t seed, std::size_t block, int restart, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(restart),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

struct RestartOutcome {
  Eigen::VectorXd params;
  double score = std::numeric_limits<double>::infinity();
  bool success = false;
};

// Runs restarts in index-ordered waves. The answer is the lowest-index
// successful restart, else the lowest score with index tie-break, so it does
// not depend on the wave width.
template <class Run>
RestartOutcome run_restarts(int restarts, int threads, Run&& run) {
  RestartOutcome best;
  int best_index = -1;
  const int width = worker_count(threads);
  for (int start = 0; start < restarts; start += width) {
    const int stop = std::min(restarts, start + width);
    std::vector<RestartOutcome> wave(stop - start);
    if (width == 1) {
      wave[0] = run(start);
    } else {
      std::vector<std::future<RestartOutcome>> futures;
      for (int r = start; r < stop; ++r) futures.push_back(std::async(std::launch::async, run, r));
      for (int r = start; r < stop; ++r) wave[r - start] = futures[r - start].get();
    }
    for (int r = start; r < stop; ++r) {
      RestartOutcome& o = wave[r - start];
      if (o.success) return std::move(o);
      if (best_index < 0 || o.score < best.score) {
        best = std::move(o);
        best_index = r;
      }
    }
  }
  return best;
}

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int size, double sigma) {
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = normal(rng);
  return v;
}

double matrix_norm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); }

// Best s >= 0 for op_norm(s p - x); the function is convex in s.
double best_scaled_distance(const Matrix& p, const Matrix& x) {
  auto f = [&](double s) { return matrix_norm(s * p - x); };
  const double pn = matrix_norm(p);
  double best = f(0.0);
  if (pn == 0.0) return best;
  double lo = 0.0, hi = 4.0 * matrix_norm(x) / pn + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::min({best, f(0.5 * (lo + hi)), f(1.0)});
}

}  // namespace

// ---------------------------------------------------------------------------

InvertiblePath polar_path(const Element& c, const Element& d) { return InvertiblePath::product_polar(c, d); }

Element ExponentialSplitting::product() const {
  Element out = Element::identity(logs.front().algebra());
  for (const auto& h : logs) out = out * exp_element(scale(Complex(0.0, 1.0), h));
  return out;
}

Element ExponentialSplitting::log_sum() const {
  Element out = Element::zero(logs.front().algebra());
  for (const auto& h : logs) out = out + h;
  return out;
}

ExponentialSplitting split_into_exponentials(const InvertiblePath& path, double max_step_norm) {
  const Interval domain = path.domain();
  const Element one = Element::identity(path.algebra());
  const Element start = path.evaluate(domain.lo);
  if (op_norm(start - one) > kPathTol) throw Error(ErrorKind::InvalidPath, "splitting needs a path starting at 1");
  if (unitarity_defect(path.evaluate(domain.hi)) > kPathTol) {
    throw Error(ErrorKind::NotUnitaryPath, "splitting needs a unitary-valued path");
  }

  auto step_of = [](const Element& a, const Element& b) { return inverse(a) * b; };
  auto within = [&](const Element& step) { return op_norm(step - one) <= max_step_norm; };

  struct Node {
    double lo, hi;
    Element a, b;
  };
  ExponentialSplitting out;
  out.partition.push_back(domain.lo);
  std::vector<Node> stack{{domain.lo, domain.hi, start, path.evaluate(domain.hi)}};
  std::size_t accepted = 0;
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    const double mid = 0.5 * (node.lo + node.hi);
    Element middle = path.evaluate(mid);
    const Element step = step_of(node.a, node.b);
    if (within(step) && within(step_of(node.a, middle)) && within(step_of(middle, node.b))) {
      if (++accepted > kMaxIntervals) throw Error(ErrorKind::PartitionOverflow, "partition exceeds 2^16 intervals");
      out.partition.push_back(node.hi);
      out.logs.push_back(log_unitary_principal(step));
      continue;
    }
    if (stack.size() + accepted + 2 > kMaxIntervals || node.hi - node.lo < domain.width() * 1e-12) {
      throw Error(ErrorKind::PartitionOverflow, "partition exceeds 2^16 intervals");
    }
    // right half first so the left half is processed next
    stack.push_back({mid, node.hi, middle, node.b});
    stack.push_back({node.lo, mid, std::move(node.a), std::move(middle)});
  }
  return out;
}

Element group_commutator(const Element& v, const Element& w) { return v * w * adjoint(v) * adjoint(w); }

CommutatorPair commutator_factor_su(const Element& u) {
  constexpr double kDetTol = 1e-8;
  std::vector<Matrix> vs, ws;
  for (const auto& block : u.blocks()) {
    const int n = static_cast<int>(block.rows());
    if (std::abs(block.determinant() - 1.0) > kDetTol) {
      throw Error(ErrorKind::DeterminantNotOne, "every block determinant must be 1");
    }
    Matrix basis;
    const std::vector<double> sorted = balanced_phases(block, basis);

    // D = M S M* S* with M = diag(e^{i phi_j}), phi_j the partial sums and S
    // the cyclic shift e_j -> e_{j+1}.
    Matrix m = Matrix::Zero(n, n);
    Matrix s = Matrix::Zero(n, n);
    double phi = 0.0;
    for (int j = 0; j < n; ++j) {
      phi += sorted[j];
      m(j, j) = std::polar(1.0, phi);
      s((j + 1) % n, j) = 1.0;
    }
    vs.push_back(basis * m * basis.adjoint());
    ws.push_back(basis * s * basis.adjoint());
  }
  return {Element(u.algebra(), std::move(vs)), Element(u.algebra(), std::move(ws))};
}

MembershipResult membership_test(const Element& x, double tol) {
  const Polar pd = polar(x);
  MembershipResult out{true, {}};
  for (Complex det : block_determinants(pd.unitary)) {
    const double phase = std::arg(det);
    out.block_phases.push_back(phase);
    if (std::abs(phase) > tol) out.member = false;
  }
  return out;
}

PositiveFactorization::PositiveFactorization(std::vector<Element> factors, Element target)
    : factors_(std::move(factors)), target_(std::move(target)), residual_(0.0) {
  if (factors_.empty()) throw Error(ErrorKind::InvalidElement, "a factorization needs at least one factor");
  residual_ = op_norm(product() - target_);
}

Element PositiveFactorization::product() const {
  Element p = factors_.front();
  for (std::size_t j = 1; j < factors_.size(); ++j) p = p * factors_[j];
  return p;
}

PositiveFactorization factor_positive_products(const Element& x, int m, const OptimizerConfig& opt) {
  if (m < 1) throw Error(ErrorKind::InvalidElement, "factor count must be at least 1");
  const MembershipResult membership = membership_test(x, opt.membership_tol);
  if (!membership.member) throw Error(ErrorKind::NotInClosure, "unitary polar part has nontrivial determinant phase");

  const AlgebraDescriptor& alg = x.algebra();
  if (is_positive(x)) {
    std::vector<Element> factors{x};
    for (int j = 1; j < m; ++j) factors.push_back(Element::identity(alg));
    return PositiveFactorization(std::move(factors), x);
  }

  const double target = opt.target_residual * op_norm(x);
  std::vector<std::vector<Matrix>> block_factors(m);
  bool all_converged = true;
  for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
    const Matrix& xb = x.block(i);
    const int n = static_cast<int>(xb.rows());
    const int d = ExpFactor::dim(n);

    const Element xi = Element(std::vector<Matrix>{xb});
    const Polar pd = polar(xi);
    const Matrix& ub = pd.unitary.block(0);
    const Matrix log_a = log_positive(pd.positive).block(0);

    // u = e^{i h} with tr h = 0
    Matrix basis;
    const std::vector<double> phases = balanced_phases(ub, basis);
    Eigen::VectorXd phase_vec(n);
    for (int j = 0; j < n; ++j) phase_vec(j) = phases[j];
    auto rotation = [&](double s) -> Matrix {
      return basis * (Complex(0.0, s) * phase_vec.cast<Complex>()).array().exp().matrix().asDiagonal() *
             basis.adjoint();
    };
    const double spread = (phase_vec.cwiseAbs().maxCoeff() + log_a.operatorNorm()) / m + 0.1;
    // Large initial exponents tend to strand the descent on ill-conditioned
    // plateaus; random restarts cycle through small multiples of the spread.
    constexpr std::array<double, 4> kSpreadSchedule{0.2, 0.5, 0.1, 0.35};
    constexpr int kStages = 8;
    constexpr double kMinStage = 1.0 / 512;
    constexpr double kStageTarget = 1e-14;

    LbfgsOptions lbfgs;
    lbfgs.max_iterations = opt.max_iterations;
    lbfgs.gradient_tolerance = opt.gradient_tolerance;
    // Frobenius residual well below the operator-norm target
    lbfgs.value_target = std::pow(1e-3 * opt.target_residual, 2);

    auto solve = [&](const Matrix& target, Eigen::VectorXd start, const LbfgsOptions& options,
                     double* value = nullptr) {
      const double scale = target.squaredNorm();
      auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        return product_objective<ExpFactor>(target, m, 1, scale, p, g);
      };
      LbfgsResult r = minimize_lbfgs(objective, std::move(start), options);
      if (value) *value = r.value;
      return r.x;
    };
    // Even restarts follow the targets e^{i s h} a from s = 0 (where the
    // factors a^{1/m} are exact) to s = 1, warm-starting each stage. Odd
    // restarts start from random exponents.
    auto run = [&](int restart) {
      auto rng = restart_rng(opt.seed, i, restart, 0x5eed);
      Eigen::VectorXd p;
      if (restart % 2 == 0) {
        p = gaussian_vector(rng, m * d, 0.05 * spread * (restart / 2));
        Eigen::VectorXd base(d);
        pack_hermitian(log_a / static_cast<double>(m), base.data());
        for (int j = 0; j < m; ++j) p.segment(j * d, d) += base;
        LbfgsOptions stage = lbfgs;
        stage.value_target = kStageTarget;
        double s = 0.0, ds = 1.0 / kStages;
        while (s < 1.0 && ds >= kMinStage) {
          const double next = std::min(1.0, s + ds);
          double value = 0.0;
          Eigen::VectorXd q = solve(rotation(next) * pd.positive.block(0), p, stage, &value);
          if (value <= kStageTarget) {
            p = std::move(q);
            s = next;
            ds *= 1.5;
          } else {
            ds *= 0.5;
          }
        }
      } else {
        const double sigma = spread * kSpreadSchedule[(restart / 2) % kSpreadSchedule.size()];
        p = gaussian_vector(rng, m * d, sigma);
      }
      p = solve(xb, std::move(p), lbfgs);
      RestartOutcome o;
      Matrix prod = Matrix::Identity(n, n);
      for (const Matrix& f : unpack_factors<ExpFactor>(p, n, m)) prod = prod * f;
      o.score = matrix_norm(prod - xb);
      o.success = o.score <= target;
      o.params = std::move(p);
      return o;
    };
    const RestartOutcome best = run_restarts(opt.restarts, opt.threads, run);
    all_converged = all_converged && best.success;
    std::vector<Matrix> fs = unpack_factors<ExpFactor>(best.params, n, m);
    for (int j = 0; j < m; ++j) block_factors[j].push_back(std::move(fs[j]));
  }

  std::vector<Element> factors;
  for (auto& blocks : block_factors) factors.emplace_back(alg, std::move(blocks));
  PositiveFactorization result(std::move(factors), x);
  if (!all_converged || result.residual() > target) {
    throw FactorizationNoConvergence(std::move(result), "no restart reached the target residual");
  }
  return result;
}

double best_approx_distance(const Element& x, int m, const OptimizerConfig& opt) {
  if (m < 1) throw Error(ErrorKind::InvalidElement, "factor count must be at least 1");
  if (is_positive(x)) return 0.0;

  double distance = 0.0;
  for (std::size_t i = 0; i < x.num_blocks(); ++i) {
    const Matrix& xb = x.block(i);
    const int n = static_cast<int>(xb.rows());
    const int d = GramFactor::dim(n);
    const double xnorm = std::max(matrix_norm(xb), 1e-300);
    // product of m factors b b* has size ~ sigma^{2m}
    const double sigma = std::pow(xnorm, 1.0 / (2.0 * m)) / std::sqrt(static_cast<double>(n));

    LbfgsOptions lbfgs;
    lbfgs.max_iterations = opt.max_iterations;
    lbfgs.gradient_tolerance = opt.gradient_tolerance;

    auto run = [&](int restart) {
      auto rng = restart_rng(opt.seed, i, restart, 0xd15c);
      Eigen::VectorXd p = gaussian_vector(rng, m * d, sigma);
      // Frobenius first, then a Schatten-16 norm as a smooth proxy for the
      // operator norm.
      for (int half : {1, 8}) {
        const double scale = std::pow(xnorm, 2.0 * half);
        auto objective = [&](const Eigen::VectorXd& q, Eigen::VectorXd& g) {
          return product_objective<GramFactor>(xb, m, half, scale, q, g);
        };
        p = minimize_lbfgs(objective, std::move(p), lbfgs).x;
      }
      Matrix prod = Matrix::Identity(n, n);
      for (const Matrix& f : unpack_factors<GramFactor>(p, n, m)) prod = prod * f;
      RestartOutcome o;
      o.score = best_scaled_distance(prod, xb);
      o.params = std::move(p);
      return o;
    };
    distance = std::max(distance, run_restarts(opt.restarts, opt.threads, run).score);
  }
  return distance;
}

}  // namespace apfp
