#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "apfp/algebra.hpp"
#include "test_support.hpp"

using namespace apfp;
using apfp::testing::diag;
using apfp::testing::distance;
using apfp::testing::Gen;

namespace {

const AlgebraDescriptor kM2{{2}};
const AlgebraDescriptor kM3{{3}};
const AlgebraDescriptor kM2M3{{2, 3}};

// Random-direction pattern search for min ||x - c|| over traceless c in M_2:
// six real coordinates (a, b, d complex with c = [[a, b], [d, -a]]).
double brute_force_distance_to_traceless(const Matrix& x, Gen& gen) {
  auto objective = [&](const std::array<double, 6>& p) {
    Matrix c(2, 2);
    c << Complex(p[0], p[1]), Complex(p[2], p[3]), Complex(p[4], p[5]), -Complex(p[0], p[1]);
    return Eigen::JacobiSVD<Matrix>(x - c).singularValues()(0);
  };
  double best = std::numeric_limits<double>::infinity();
  for (int start = 0; start < 4; ++start) {
    std::array<double, 6> p{};
    if (start > 0) {
      for (double& v : p) v = gen.normal();
    }
    double value = objective(p);
    double step = 1.0;
    for (int iter = 0; iter < 20000 && step > 1e-12; ++iter) {
      auto q = p;
      for (double& v : q) v += step * gen.normal();
      const double candidate = objective(q);
      if (candidate < value) {
        value = candidate;
        p = q;
        step *= 1.5;
      } else {
        step *= 0.97;
      }
    }
    best = std::min(best, value);
  }
  return best;
}

}  // namespace

TEST_CASE("descriptor and element validation") {
  CHECK_THROWS_AS(AlgebraDescriptor({}), Error);
  CHECK_THROWS_AS(AlgebraDescriptor({2, 0}), Error);
  CHECK(kM2M3.total_dimension() == 13);

  CHECK_THROWS_AS(Element(kM2, {Matrix::Identity(3, 3)}), Error);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(Element({bad}), Error);
}

TEST_CASE("star-algebra operations") {
  const Element one = Element::identity(kM2M3);
  CHECK(adjoint(one) == one);

  Gen gen(11);
  const Element x = gen.element(kM3);
  const Element y = gen.element(kM3);
  CHECK(distance(x * inverse(x), Element::identity(kM3)) < 1e-12 * op_norm(x) * op_norm(inverse(x)));

  // entrywise check of (xy)* = y* x*
  const Matrix lhs = adjoint(x * y).block(0);
  Matrix rhs(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Complex s = 0.0;
      for (int k = 0; k < 3; ++k) s += std::conj(y.block(0)(k, i)) * std::conj(x.block(0)(j, k));
      rhs(i, j) = s;
    }
  }
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);

  CHECK_THROWS_AS(mul(Element::identity(kM2), Element::identity(kM3)), Error);
  try {
    add(Element::identity(kM2), Element::identity(kM2M3));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DescriptorMismatch);
  }
}

TEST_CASE("commutator") {
  Gen gen(12);
  const Element x = gen.element(kM2M3);
  CHECK(op_norm(commutator(x, x)) == 0.0);

  Matrix n(2, 2);
  n << 0, 1, 0, 0;
  const Element c = commutator(diag({1.0, 2.0}), testing::single(n));
  Matrix expected(2, 2);
  expected << 0, -1, 0, 0;
  CHECK(c.block(0) == expected);

  for (int trial = 0; trial < 20; ++trial) {
    const Element a = gen.element(kM2M3);
    const Element b = gen.element(kM2M3);
    CHECK(max_abs(universal_trace(commutator(a, b))) <= 1e-12 * op_norm(a) * op_norm(b));
  }
}

TEST_CASE("operator norm") {
  CHECK(op_norm(Element::identity(kM3)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(op_norm(diag({3.0, -4.0})) == doctest::Approx(4.0).epsilon(1e-15));

  Gen gen(13);
  const Element x = gen.element(AlgebraDescriptor({4}));
  CHECK(std::abs(op_norm(x) - testing::power_iteration_norm(x.block(0))) < 1e-10);

  for (int trial = 0; trial < 50; ++trial) {
    const Element a = gen.element(kM2M3);
    const Element b = gen.element(kM2M3);
    CHECK(op_norm(a * b) <= op_norm(a) * op_norm(b) + 1e-12);
  }
}

TEST_CASE("positivity") {
  CHECK(is_positive(Element::identity(kM2), 0.0));
  CHECK_FALSE(is_positive(diag({1.0, -1.0}), 1e-12));
  Gen gen(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Element y = gen.element(kM2M3);
    CHECK(is_positive(adjoint(y) * y, 1e-10));
  }
  Matrix skew(2, 2);
  skew << 1, 1, -1, 1;
  CHECK_FALSE(is_positive(testing::single(skew), 1e-12));
}

TEST_CASE("polar decomposition") {
  Gen gen(15);
  const Element a = gen.positive_definite(kM3);
  const Polar pa = polar(a);
  CHECK(distance(pa.unitary, Element::identity(kM3)) < 1e-12);
  CHECK(distance(pa.positive, a) < 1e-12 * op_norm(a));

  const Polar scalar = polar(testing::single(Matrix::Constant(1, 1, -2.0)));
  CHECK(std::abs(scalar.unitary.block(0)(0, 0) - Complex(-1.0)) < 1e-15);
  CHECK(std::abs(scalar.positive.block(0)(0, 0) - Complex(2.0)) < 1e-15);

  // SVD oracle: x = V S W*, u = V W*, p = W S W*.
  const Element x = gen.element(kM3);
  const Polar px = polar(x);
  Eigen::JacobiSVD<Matrix> svd(x.block(0), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix u_oracle = svd.matrixU() * svd.matrixV().adjoint();
  const Matrix p_oracle = svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().adjoint();
  CHECK((px.unitary.block(0) - u_oracle).norm() < 1e-10);
  CHECK((px.positive.block(0) - p_oracle).norm() < 1e-10 * op_norm(x));

  for (int trial = 0; trial < 50; ++trial) {
    const Element z = gen.element(kM2M3);
    const Polar pz = polar(z);
    CHECK(distance(pz.unitary * pz.positive, z) <= 1e-10 * op_norm(z));
    CHECK(unitarity_defect(pz.unitary) <= 1e-10);
    CHECK(is_positive(pz.positive, 1e-10));
  }

  Matrix singular(2, 2);
  singular << 1, 2, 2, 4;
  try {
    polar(testing::single(singular));
    FAIL("expected SingularInput");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularInput);
  }
}

TEST_CASE("exponential and logarithms") {
  CHECK(exp_element(Element::zero(kM2M3)) == Element::identity(kM2M3));

  const Element l = log_positive(diag({std::numbers::e, 1.0}));
  CHECK(distance(l, diag({1.0, 0.0})) < 1e-15);

  Gen gen(16);
  for (int trial = 0; trial < 20; ++trial) {
    const Element a = gen.positive_definite(kM2M3);
    const Element c = log_positive(a);
    CHECK(is_self_adjoint(c, 1e-12));
    // Taylor oracle, independent of the spectral route
    CHECK(distance(testing::taylor_exp(c), a) < 1e-10 * op_norm(a));
    CHECK(distance(exp_element(c), a) < 1e-10 * op_norm(a));
  }

  for (int trial = 0; trial < 20; ++trial) {
    const Element h = gen.hermitian(kM2M3, 5.0);
    CHECK(distance(log_positive(exp_element(h)), h) < 1e-8);
    CHECK(distance(exp_element(h), testing::taylor_exp(h)) < 1e-11 * op_norm(exp_element(h)));

    const Element k = gen.hermitian(kM2M3, std::numbers::pi - 1e-3);
    const Element u = exp_element(scale(Complex(0, 1), k));
    CHECK(unitarity_defect(u) < 1e-13);
    CHECK(distance(log_unitary_principal(u), k) < 1e-10);
  }

  // a general (non-normal) exponent goes through the Pade route
  const Element g = scale(0.5, gen.element(kM3));
  CHECK(distance(exp_element(g), testing::taylor_exp(g)) < 1e-12 * op_norm(exp_element(g)));

  CHECK_THROWS_AS(log_positive(diag({1.0, -1.0})), Error);
  try {
    log_unitary_principal(diag({-1.0, 1.0}));
    FAIL("expected BranchCut");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BranchCut);
  }
  CHECK_THROWS_AS(log_unitary_principal(diag({2.0, 1.0})), Error);
}

TEST_CASE("universal trace and the commutator quotient") {
  const TraceValue t = universal_trace(Element::identity(kM2M3));
  CHECK(t[0] == Complex(2.0));
  CHECK(t[1] == Complex(3.0));

  Matrix n(2, 2);
  n << 0, 1, 0, 0;
  CHECK(universal_trace(testing::single(n))[0] == Complex(0.0));

  CHECK(quotient_norm(TraceValue::zero(kM2M3)) == 0.0);
  CHECK(quotient_norm(universal_trace(Element::identity(kM2))) == 1.0);
  CHECK(quotient_norm(TraceValue(AlgebraDescriptor({1}), {Complex(3, 4)})) == doctest::Approx(5.0));

  Gen gen(17);
  // Brute-force distance to the traceless subspace reproduces the closed form.
  // The search can only overshoot the true minimum; it must never undercut the
  // closed form, which is attained by project_traceless (checked below).
  const double at_identity = brute_force_distance_to_traceless(Matrix::Identity(2, 2), gen);
  CHECK(at_identity >= 1.0 - 1e-12);
  CHECK(at_identity <= 1.0 + 1e-9);
  for (int trial = 0; trial < 3; ++trial) {
    const Element x = gen.element(kM2);
    const double closed_form = quotient_norm(universal_trace(x));
    const double brute = brute_force_distance_to_traceless(x.block(0), gen);
    CHECK(brute >= closed_form - 1e-12);
  }

  CHECK(op_norm(project_traceless(Element::identity(kM2))) == 0.0);
  const Element traceless = project_traceless(gen.element(kM2M3));
  CHECK(distance(project_traceless(traceless), traceless) < 1e-15);

  for (int trial = 0; trial < 30; ++trial) {
    const Element x = gen.element(kM2M3);
    const Element y = gen.element(kM2M3);
    CHECK(max_abs(universal_trace(project_traceless(x))) < 1e-13);
    CHECK(distance(x, project_traceless(x)) == doctest::Approx(quotient_norm(universal_trace(x))).epsilon(1e-12));
    CHECK(quotient_norm(universal_trace(x)) <= op_norm(x) + 1e-12);
    // linearity
    const Complex s(0.3, -1.2);
    const TraceValue lhs = universal_trace(x + s * y);
    const TraceValue rhs = universal_trace(x) + s * universal_trace(y);
    CHECK(max_abs(lhs - rhs) < 1e-12 * (op_norm(x) + op_norm(y)));
  }
}
