#include "apfp/checker.hpp"

#include <cmath>
#include <random>
#include <regex>

namespace apfp {

namespace mp = boost::multiprecision;

namespace {

constexpr double kPairingTol = 1e-6;
constexpr int kProbeSamples = 100;
constexpr double kProbeEpsilon = 1e-7;

// gcd of two nonnegative rationals
Rational rational_gcd(const Rational& x, const Rational& y) {
  const mp::cpp_int p = mp::numerator(x), q = mp::denominator(x);
  const mp::cpp_int r = mp::numerator(y), s = mp::denominator(y);
  return Rational(mp::gcd(p * s, r * q), q * s);
}

Rational rational_abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }

// Nearest point of (1/n) Z to v, ties rounded up.
Rational nearest_multiple(const Rational& v, int n) {
  const Rational scaled = v * n + Rational(1, 2);
  mp::cpp_int floor = mp::numerator(scaled) / mp::denominator(scaled);
  if (scaled < 0 && floor * mp::denominator(scaled) != mp::numerator(scaled)) floor -= 1;
  return Rational(floor, n);
}

// Decimal digits with optional sign; cpp_int alone would read "025" as octal.
mp::cpp_int parse_integer(std::string digits) {
  bool negative = false;
  if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
    negative = digits[0] == '-';
    digits.erase(0, 1);
  }
  const std::size_t first = digits.find_first_not_of('0');
  const mp::cpp_int value(first == std::string::npos ? std::string("0") : digits.substr(first));
  return negative ? mp::cpp_int(-value) : value;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  static const std::regex fraction(R"(\s*([+-]?\d+)(?:/(\d+))?\s*)");
  static const std::regex decimal(R"(\s*([+-]?)(\d*)\.(\d+)\s*)");
  std::smatch m;
  if (std::regex_match(text, m, fraction)) {
    const mp::cpp_int p = parse_integer(m[1].str());
    const mp::cpp_int q = m[2].matched ? parse_integer(m[2].str()) : mp::cpp_int(1);
    if (q == 0) throw Error(ErrorKind::ParseError, "zero denominator in \"" + text + "\"");
    return Rational(p, q);
  }
  if (std::regex_match(text, m, decimal)) {
    const std::string digits = m[2].str() + m[3].str();
    mp::cpp_int q = 1;
    for (long i = 0; i < m[3].length(); ++i) q *= 10;
    Rational r(parse_integer(digits), q);
    return m[1].str() == "-" ? Rational(-r) : r;
  }
  throw Error(ErrorKind::ParseError, "not a rational number: \"" + text + "\"");
}

std::string to_string(const Rational& r) {
  if (mp::denominator(r) == 1) return mp::numerator(r).str();
  return mp::numerator(r).str() + "/" + mp::denominator(r).str();
}

Complex TraceSimplex::evaluate(std::size_t i, const Element& x) const {
  if (!(x.algebra() == alg_)) throw Error(ErrorKind::DescriptorMismatch, "element from another algebra");
  return x.block(i).trace() / static_cast<double>(alg_.block_size(i));
}

std::vector<Rational> rho_exact(const std::vector<std::int64_t>& g, const TraceSimplex& simplex) {
  if (g.size() != simplex.rank()) throw Error(ErrorKind::RankMismatch, "K_0 class has the wrong rank");
  std::vector<Rational> out;
  for (std::size_t i = 0; i < g.size(); ++i) out.emplace_back(g[i], simplex.algebra().block_size(i));
  return out;
}

AffFunction rho(const std::vector<std::int64_t>& g, const TraceSimplex& simplex) {
  AffFunction f;
  for (const Rational& r : rho_exact(g, simplex)) f.values.push_back(static_cast<double>(r));
  return f;
}

K0Data k0_data(const AlgebraDescriptor& alg) {
  K0Data out;
  out.rank = alg.num_blocks();
  for (std::size_t i = 0; i < out.rank; ++i) {
    std::vector<SymbolicReal> image(out.rank, SymbolicReal{0, 0});
    image[i].a = Rational(1, alg.block_size(i));
    out.generators.push_back(std::move(image));
  }
  return out;
}

DensityDecision decide_density(const std::vector<SymbolicReal>& values) {
  // theta is irrational, so a + b theta -> (a, b) identifies the subgroup
  // with a subgroup of Q^2; it is cyclic iff all the (a, b) are proportional.
  const SymbolicReal* base = nullptr;
  for (const auto& v : values) {
    if (v.a != 0 || v.b != 0) {
      base = &v;
      break;
    }
  }
  if (!base) return {false, SymbolicReal{0, 0}};

  Rational g = 0;
  for (const auto& v : values) {
    if (base->a * v.b != v.a * base->b) return {true, std::nullopt};
    const Rational ratio = base->a != 0 ? Rational(v.a / base->a) : Rational(v.b / base->b);
    g = g == 0 ? rational_abs(ratio) : (ratio == 0 ? g : rational_gcd(g, rational_abs(ratio)));
  }
  // sign fixed so the leading nonzero coordinate is positive
  if (base->a < 0 || (base->a == 0 && base->b < 0)) g = -g;
  return {false, SymbolicReal{g * base->a, g * base->b}};
}

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Computed:
      return "computed";
    case Source::Asserted:
      return "asserted";
    case Source::ClosedForm:
      return "closed_form";
  }
  return "unknown";
}

std::vector<std::string> ConditionReport::failing() const {
  std::vector<std::string> out;
  if (!no_findim_reps.holds) out.emplace_back("no_findim_reps");
  if (!stable_rank_one.holds) out.emplace_back("stable_rank_one");
  if (!k1_trivial.holds) out.emplace_back("k1_trivial");
  if (!rho_dense.holds) out.emplace_back("rho_dense");
  return out;
}

ConditionReport check_conditions(const AlgebraDescriptor& alg, std::uint64_t seed) {
  ConditionReport report;
  report.no_findim_reps = {false, Source::ClosedForm, "the identity representation is finite dimensional"};
  report.representation_dimension = static_cast<int>(alg.total_dimension());
  report.k1_trivial = {true, Source::ClosedForm, "K_1 of a finite direct sum of matrix algebras is 0"};

  // Singular elements x = u|x| are approximated by the invertibles x + eps u.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick_block(0, alg.num_blocks() - 1);
  StableRankProbe probe{kProbeSamples, kProbeEpsilon, 0.0, true};
  for (int sample = 0; sample < kProbeSamples; ++sample) {
    const std::size_t singular_block = pick_block(rng);
    std::vector<Matrix> xs, us;
    for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
      const int n = alg.block_size(i);
      Matrix g(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) g(a, b) = Complex(normal(rng), normal(rng));
      }
      Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Eigen::VectorXd s = svd.singularValues();
      if (i == singular_block) s(n - 1) = 0.0;
      xs.push_back(svd.matrixU() * s.cast<Complex>().asDiagonal() * svd.matrixV().adjoint());
      us.push_back(svd.matrixU() * svd.matrixV().adjoint());
    }
    const Element x(alg, std::move(xs));
    const Element nearby = x + scale(kProbeEpsilon, Element(alg, std::move(us)));
    probe.all_invertible = probe.all_invertible && !is_invertible(x) && is_invertible(nearby);
    probe.max_distance = std::max(probe.max_distance, op_norm(nearby - x));
  }
  report.stable_rank_one = {probe.all_invertible && probe.max_distance <= 1e-6, Source::Computed,
                            "random singular elements have invertibles within 1e-6"};
  report.probe = probe;

  // The image of rho is the lattice (+)(1/n_i) Z; c_i = 1/(2 n_i) is as far
  // from it as any affine function can be.
  LatticeWitness w;
  w.distance = 0;
  for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
    const int n = alg.block_size(i);
    w.function.emplace_back(1, 2 * n);
    w.nearest.push_back(nearest_multiple(w.function.back(), n));
    w.distance = std::max(w.distance, rational_abs(w.function.back() - w.nearest.back()));
  }
  report.rho_dense = {w.distance == 0, Source::Computed, "the image of rho is a discrete lattice"};
  report.lattice_witness = std::move(w);

  report.apfp_verdict = report.no_findim_reps.holds && report.stable_rank_one.holds && report.k1_trivial.holds &&
                        report.rho_dense.holds;
  return report;
}

ConditionReport check_abstract(const AbstractDescriptor& desc) {
  if (desc.k0.rank == 0) throw Error(ErrorKind::RankMismatch, "K_0 rank must be positive");
  for (const auto& image : desc.k0.generators) {
    if (image.size() != desc.k0.rank) throw Error(ErrorKind::RankMismatch, "generator image has the wrong rank");
  }

  ConditionReport report;
  report.no_findim_reps = {desc.no_findim_reps, Source::Asserted, ""};
  report.stable_rank_one = {desc.stable_rank_one, Source::Asserted, ""};
  report.k1_trivial = {desc.k1_trivial, Source::Asserted, ""};

  if (desc.k0.rank == 1) {
    std::vector<SymbolicReal> values;
    for (const auto& image : desc.k0.generators) values.push_back(image[0]);
    const DensityDecision decision = decide_density(values);
    if (desc.rho_dense && *desc.rho_dense != decision.dense) {
      throw Error(ErrorKind::InconsistentFlags, "asserted rho_dense contradicts the exact density decision");
    }
    report.rho_dense = {decision.dense, Source::Computed,
                        decision.dense ? "two generators have irrational ratio" : "the image subgroup is cyclic"};
    report.cyclic_generator = decision.generator;
  } else {
    if (!desc.rho_dense) {
      throw Error(ErrorKind::RankTooHighForDensity, "density is only decided for rank one; assert rho_dense");
    }
    report.rho_dense = {*desc.rho_dense, Source::Asserted, ""};
  }

  report.apfp_verdict = report.no_findim_reps.holds && report.stable_rank_one.holds && report.k1_trivial.holds &&
                        report.rho_dense.holds;
  return report;
}

PairingCheck pairing_consistency(const AlgebraDescriptor& alg, const InvertiblePath& loop,
                                 const QuadratureConfig& quad) {
  if (!(loop.algebra() == alg)) throw Error(ErrorKind::DescriptorMismatch, "loop lives in another algebra");
  const LoopDeterminant ld = delta_1_0(loop, quad);
  const TraceSimplex simplex(alg);

  PairingCheck out;
  out.value = ld.function;
  for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
    out.nearest.push_back(std::llround(ld.function[i] * alg.block_size(i)));
  }
  out.nearest_point = rho(out.nearest, simplex);
  for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
    out.distance = std::max(out.distance, std::abs(ld.function[i] - out.nearest_point[i]));
  }
  out.consistent = out.distance <= kPairingTol;
  return out;
}

}  // namespace apfp
