// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "apfp/checker.hpp"
#include "apfp/factorization.hpp"
#include "apfp/hs_determinant.hpp"
#include "apfp/io.hpp"
#include "cli.hpp"
#include "test_support.hpp"

using namespace apfp;
using apfp::testing::diag;
using apfp::testing::Gen;
using apfp::testing::single;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const Complex kI(0.0, 1.0);
const AlgebraDescriptor kM2M3({2, 3});

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double coord_gap(const TraceValue& a, const TraceValue& b) { return max_abs(a - b); }

// t -> e^{tK} e^{tD} e^{-tK} with e^D = 1: a loop winding by the diagonal of D / (2 pi i).
InvertiblePath conjugated_loop(const Element& k, const Element& d) {
  return InvertiblePath::pointwise_product(
      InvertiblePath::exp_line(k),
      InvertiblePath::pointwise_product(InvertiblePath::exp_line(d), InvertiblePath::exp_line(scale(-1.0, k))));
}

Element winding_generator(const AlgebraDescriptor& alg, Gen& gen) {
  std::vector<Matrix> blocks;
  for (int n : alg.block_sizes()) {
    Matrix m = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) m(j, j) = kTwoPi * kI * static_cast<double>(gen.integer(-3, 3));
    blocks.push_back(m);
  }
  return Element(alg, std::move(blocks));
}

Verdict determinant_calculus() {
  Gen gen(1001);
  double closed_form = 0.0, additivity = 0.0, loops = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Element c = gen.hermitian(kM2M3, 2.0), d = gen.hermitian(kM2M3, 2.0);
    const InvertiblePath line = InvertiblePath::exp_line(c);
    closed_form = std::max(closed_form, coord_gap(path_determinant(line), universal_trace(c)));

    const InvertiblePath polar = polar_path(c, d);
    const InvertiblePath modulus = InvertiblePath::polar_modulus(c, d);
    const TraceValue dp = path_determinant(polar), dm = path_determinant(modulus);
    additivity = std::max(additivity, coord_gap(path_determinant(InvertiblePath::concatenation(polar, modulus)),
                                                dp + dm));
    additivity =
        std::max(additivity, coord_gap(path_determinant(InvertiblePath::pointwise_product(polar, modulus)), dp + dm));
    additivity = std::max(additivity, coord_gap(path_determinant(InvertiblePath::reversal(modulus)), -1.0 * dm));

    const InvertiblePath loop = conjugated_loop(gen.hermitian(kM2M3, 1.0), winding_generator(kM2M3, gen));
    loops = std::max(loops, distance_to_lattice(path_determinant(loop)));
  }
  return {closed_form <= 1e-8 && additivity <= 2e-9 && loops <= 1e-6,
          "max |Delta(exp_line c) - T(c)| = " + fmt(closed_form) + " (<= 1e-8), additivity/reversal gap " +
              fmt(additivity) + " (<= 2e-9), loop distance to 2 pi i Z^k " + fmt(loops) + " (<= 1e-6)"};
}

Verdict forward_construction() {
  Gen gen(1002);
  double det = 0.0, trace = 0.0, endpoint = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const InvertiblePath p = polar_path(gen.hermitian(kM2M3, 2.0), gen.hermitian(kM2M3, 2.0));
    det = std::max(det, max_abs(path_determinant(p)));
    const ExponentialSplitting s = split_into_exponentials(p);
    trace = std::max(trace, quotient_norm(universal_trace(s.log_sum())));
    endpoint = std::max(endpoint, op_norm(s.product() - p.evaluate(1.0)));
  }
  return {det <= 1e-7 && trace <= 1e-7 && endpoint <= 1e-8,
          "max |Delta(polar path)| = " + fmt(det) + " (<= 1e-7), quotient norm of T(sum h) " + fmt(trace) +
              " (<= 1e-7), endpoint error " + fmt(endpoint) + " (<= 1e-8)"};
}

Verdict positive_side() {
  Gen gen(1003);
  OptimizerConfig opt;
  opt.restarts = 16;
  int successes = 0;
  bool factors_positive = true, residual_exact = true;
  double worst_success = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const AlgebraDescriptor alg({inst % 2 ? 3 : 2});
    const Element x = gen.special_unitary(alg) * gen.positive_definite(alg);
    auto audit = [&](const PositiveFactorization& f) {
      Matrix product = Matrix::Identity(x.block(0).rows(), x.block(0).cols());
      for (const auto& p : f.factors()) {
        factors_positive = factors_positive && is_positive(p, 1e-10);
        product = product * p.block(0);
      }
      residual_exact = residual_exact && op_norm(single(product) - x) == f.residual();
      return f.residual() / op_norm(x);
    };
    try {
      const double rel = audit(factor_positive_products(x, 5, opt));
      if (rel <= 1e-5) {
        ++successes;
        worst_success = std::max(worst_success, rel);
      }
    } catch (const FactorizationNoConvergence& e) {
      if (audit(e.best()) <= 1e-5) ++successes;
    }
  }
  return {successes >= 18 && factors_positive && residual_exact,
          std::to_string(successes) + "/20 instances at relative residual <= 1e-5 (need 18), worst success " +
              fmt(worst_success) + ", factors positive at 1e-10: " + (factors_positive ? "yes" : "no") +
              ", recomputed residual matches exactly: " + (residual_exact ? "yes" : "no")};
}

// First computed as 1.0 (the distance from diag(1, -1) to the matrices of
// nonnegative determinant); fixed here as a regression constant.
constexpr double kFlipDistance = 1.0;

Verdict negative_side() {
  OptimizerConfig opt;
  opt.restarts = 32;
  bool pass = true;
  std::string detail;
  for (int m : {3, 5, 8}) {
    const double flip = best_approx_distance(diag({1.0, -1.0}), m, opt);
    const double minus_one = best_approx_distance(diag({-1.0}), m, opt);
    pass = pass && flip >= 0.1 && std::abs(flip - kFlipDistance) <= 0.005 && std::abs(minus_one - 1.0) <= 1e-6;
    detail += "m=" + std::to_string(m) + ": diag(1,-1) " + fmt(flip) + ", -1 " + fmt(minus_one) + "; ";
  }
  return {pass, detail + "(need >= 0.1 and regression constant " + fmt(kFlipDistance) + " to 2 s.f.; 1 +- 1e-6)"};
}

Verdict commutator_witness() {
  Gen gen(1005);
  double worst = 0.0;
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 50; ++trial) {
      const Element u = single(gen.special_unitary(n));
      const CommutatorPair p = commutator_factor_su(u);
      worst = std::max(worst, op_norm(group_commutator(p.v, p.w) - u));
    }
  }
  return {worst <= 1e-8, "max ||v w v* w* - u|| over 250 unitaries = " + fmt(worst) + " (<= 1e-8)"};
}

Verdict k0_pairing() {
  bool pass = true;
  double worst = 0.0;
  for (int n : {2, 3}) {
    const AlgebraDescriptor alg({n});
    for (int w = 1; w <= 4; ++w) {
      Matrix g = Matrix::Zero(n, n);
      g(0, 0) = kTwoPi * kI * static_cast<double>(w);
      const PairingCheck pc = pairing_consistency(alg, InvertiblePath::exp_line(single(g)));
      pass = pass && pc.consistent && pc.nearest[0] == w;
      worst = std::max(worst, pc.distance);
    }
  }
  return {pass, "windings 1..4 in M2 and M3, max distance to rho(K0) = " + fmt(worst) + " (<= 1e-6)"};
}

Verdict checker() {
  bool pass = true;
  const std::vector<std::string> expected{"no_findim_reps", "rho_dense"};
  for (const auto& sizes : std::vector<std::vector<int>>{{1}, {2}, {2, 3}}) {
    const ConditionReport r = check_conditions(AlgebraDescriptor(sizes));
    pass = pass && !r.apfp_verdict && r.failing() == expected;
  }
  auto descriptor = [](std::vector<SymbolicReal> values) {
    AbstractDescriptor d;
    d.k0.rank = 1;
    for (auto& v : values) d.k0.generators.push_back({v});
    d.no_findim_reps = d.stable_rank_one = d.k1_trivial = true;
    return d;
  };
  const auto start = std::chrono::steady_clock::now();
  const ConditionReport theta = check_abstract(descriptor({{1, 0}, {0, 1}}));
  const ConditionReport sixth = check_abstract(descriptor({{Rational(1, 2), 0}, {Rational(1, 3), 0}}));
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  const ConditionReport again = check_abstract(descriptor({{Rational(1, 2), 0}, {Rational(1, 3), 0}}));
  pass = pass && theta.apfp_verdict && !sixth.rho_dense.holds &&
         io::to_json(sixth).dump() == io::to_json(again).dump() && ms < 50.0;
  return {pass, "M1, M2, M2+M3 fail exactly {no_findim_reps, rho_dense}; {1, theta} verdict " +
                    std::string(theta.apfp_verdict ? "true" : "false") + "; {1/2, 1/3} rho_dense " +
                    (sixth.rho_dense.holds ? "true" : "false") + "; exact decisions in " + fmt(ms) + " ms"};
}

std::string cli_payload(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  apfp::cli::run(args, out, err);
  return io::parse(out.str()).at("payload").dump();
}

Verdict determinism_and_round_trip() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("apfp_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Gen gen(1008);

  const std::string element = (dir / "x.json").string();
  std::ofstream(element) << io::to_json(gen.special_unitary(kM2M3) * gen.positive_definite(kM2M3)).dump();
  const std::string path = (dir / "p.json").string();
  std::ofstream(path) << io::to_json(polar_path(gen.hermitian(kM2M3, 2.0), gen.hermitian(kM2M3, 2.0))).dump();
  const std::string alg = (dir / "a.json").string();
  std::ofstream(alg) << R"({"block_sizes": [2, 3]})";

  const std::vector<std::vector<std::string>> runs{
      {"--seed", "5", "factor", element},
      {"--seed", "5", "det-path", path},
      {"--seed", "5", "check", alg},
      {"--seed", "5", "demo", "--name", "splitting-trace-zero"},
      {"--seed", "5", "demo", "--name", "commutator-witness"},
  };
  int identical = 0;
  for (const auto& args : runs) {
    setenv("APFP_THREADS", "1", 1);
    const std::string a = cli_payload(args);
    setenv("APFP_THREADS", "2", 1);
    const std::string b = cli_payload(args);
    unsetenv("APFP_THREADS");
    if (a == b) ++identical;
  }
  fs::remove_all(dir);

  int exact = 0, total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Element x = gen.element(kM2M3);
    const std::string ex = io::to_json(x).dump();
    exact += io::element_from_json(io::parse(ex)) == x && io::to_json(io::element_from_json(io::parse(ex))).dump() == ex;
    const InvertiblePath p = InvertiblePath::concatenation(polar_path(gen.hermitian(kM2M3, 1.0), gen.hermitian(kM2M3, 1.0)),
                                                           InvertiblePath::exp_line(gen.element(kM2M3)));
    const std::string ep = io::to_json(p).dump();
    exact += io::to_json(io::path_from_json(io::parse(ep))).dump() == ep;
    const std::string er = io::to_json(check_conditions(kM2M3, trial)).dump();
    exact += io::to_json(io::condition_report_from_json(io::parse(er))).dump() == er;
    total += 3;
  }
  return {identical == static_cast<int>(runs.size()) && exact == total,
          std::to_string(identical) + "/" + std::to_string(runs.size()) +
              " CLI payloads byte-identical across reruns and thread counts; " + std::to_string(exact) + "/" +
              std::to_string(total) + " exact round trips"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"AC1 determinant calculus", determinant_calculus},
      {"AC2 polar path and splitting", forward_construction},
      {"AC3 positive factorization", positive_side},
      {"AC4 determinant obstruction", negative_side},
      {"AC5 commutator witness", commutator_witness},
      {"AC6 K0 pairing", k0_pairing},
      {"AC7 condition checker", checker},
      {"AC8 determinism and round trip", determinism_and_round_trip},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), s);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures;
}
