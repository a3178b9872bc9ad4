#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "apfp/checker.hpp"
#include "apfp/factorization.hpp"
#include "apfp/hs_determinant.hpp"
#include "apfp/io.hpp"

namespace apfp::cli {

namespace {

using io::Json;

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::uint64_t seed = 0;
  QuadratureConfig quad;
  OptimizerConfig optimizer;
  int factors = 5;
  std::string output = "json";
  std::string out_file;
  std::map<std::string, double> tolerances{
      {"membership", 1e-8},        // determinant phase
      {"demo_determinant", 1e-7},  // coordinates of a vanishing determinant
      {"demo_trace", 1e-7},        // quotient norm of a trace-zero sum
      {"demo_endpoint", 1e-8},     // reconstruction of a path endpoint
      {"demo_commutator", 1e-8},   // commutator witness residual
      {"demo_lattice", 1e-6},      // loop determinant to the K_0 lattice
      {"diagnostic", 1e-8},        // unitary / loop / positivity probes
  };
};

// Timings are kept out of the payload so reruns compare byte for byte.
class Timer {
 public:
  template <class F>
  auto time(const std::string& name, F&& f) -> decltype(f()) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, start);
    } else {
      auto result = f();
      record(name, start);
      return result;
    }
  }
  Json json() const { return timings_; }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    timings_[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  Json timings_ = Json::object();
};

struct Outcome {
  int code = kOk;
  Json payload;
};

int thread_cap() {
  if (const char* env = std::getenv("APFP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// CSV: one header row and one value row. Element-valued entries and lists of
// [re, im] pairs flatten into block_i_re / block_i_im columns.

bool is_pair(const Json& j) { return j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(); }

bool is_pair_list(const Json& j) {
  if (!j.is_array() || j.empty()) return false;
  for (const auto& e : j) {
    if (!is_pair(e)) return false;
  }
  return true;
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& cols) {
  if (j.is_object() && j.size() == 1 && j.contains("blocks")) {
    const Json& blocks = j["blocks"];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t r = 0; r < blocks[b].size(); ++r) {
        for (std::size_t c = 0; c < blocks[b][r].size(); ++c) {
          const std::string base = join(prefix, "block_" + std::to_string(b) + "_" + std::to_string(r) + "_" +
                                                    std::to_string(c));
          cols.emplace_back(base + "_re", blocks[b][r][c][0].dump());
          cols.emplace_back(base + "_im", blocks[b][r][c][1].dump());
        }
      }
    }
  } else if (is_pair_list(j)) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      cols.emplace_back(join(prefix, "block_" + std::to_string(i) + "_re"), j[i][0].dump());
      cols.emplace_back(join(prefix, "block_" + std::to_string(i) + "_im"), j[i][1].dump());
    }
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, join(prefix, key), cols);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], join(prefix, std::to_string(i)), cols);
  } else if (j.is_string()) {
    cols.emplace_back(prefix, j.get<std::string>());
  } else {
    cols.emplace_back(prefix, j.dump());
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const Json& payload) {
  std::vector<std::pair<std::string, std::string>> cols;
  flatten(payload, "", cols);
  std::string header, values;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    header += (i ? "," : "") + csv_field(cols[i].first);
    values += (i ? "," : "") + csv_field(cols[i].second);
  }
  return header + "\n" + values + "\n";
}

// ---------------------------------------------------------------------------
// seeded inputs for demos and benchmarks

class Inputs {
 public:
  explicit Inputs(std::uint64_t seed) : rng_(seed) {}

  Element hermitian(const AlgebraDescriptor& alg, double max_norm) {
    std::vector<Matrix> blocks;
    for (int n : alg.block_sizes()) {
      const Matrix g = gaussian(n);
      Matrix h = 0.5 * (g + g.adjoint());
      h *= max_norm * std::uniform_real_distribution<double>(0.1, 1.0)(rng_) /
           Eigen::JacobiSVD<Matrix>(h).singularValues()(0);
      blocks.push_back(std::move(h));
    }
    return Element(alg, std::move(blocks));
  }

  Element special_unitary(const AlgebraDescriptor& alg) {
    std::vector<Matrix> blocks;
    for (int n : alg.block_sizes()) {
      Eigen::HouseholderQR<Matrix> qr(gaussian(n));
      Matrix q = qr.householderQ();
      const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int j = 0; j < n; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
      const Complex det = q.determinant();
      blocks.push_back(q * std::pow(std::conj(det) / std::abs(det), 1.0 / n));
    }
    return Element(alg, std::move(blocks));
  }

  Element positive(const AlgebraDescriptor& alg) {
    std::vector<Matrix> blocks;
    for (int n : alg.block_sizes()) {
      const Matrix g = gaussian(n);
      blocks.push_back(g.adjoint() * g + 0.5 * Matrix::Identity(n, n));
    }
    return Element(alg, std::move(blocks));
  }

 private:
  Matrix gaussian(int n) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(normal_(rng_), normal_(rng_));
    return m;
  }

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

// ---------------------------------------------------------------------------
// subcommands

Json membership_json(const MembershipResult& m) { return {{"member", m.member}, {"block_phases", m.block_phases}}; }

Outcome cmd_det_path(const RunConfig& cfg, const std::string& file, Timer& timer) {
  const InvertiblePath path = io::path_from_json(io::read_file(file));
  const double tol = cfg.tolerances.at("diagnostic");
  const TraceValue det = timer.time("path_determinant", [&] { return path_determinant(path, cfg.quad); });
  const LatticeQuotientValue reduced = lattice_reduce(det);

  const Interval d = path.domain();
  const Element one = Element::identity(path.algebra());
  bool unitary = true, positive = true;
  for (int k = 0; k <= 32; ++k) {
    const Element x = path.evaluate(d.lo + d.width() * k / 32.0);
    unitary = unitary && unitarity_defect(x) <= tol;
    positive = positive && is_positive(x);
  }
  const bool loop = op_norm(path.evaluate(d.lo) - one) <= tol && op_norm(path.evaluate(d.hi) - one) <= tol;

  Json payload{{"algebra", io::to_json(path.algebra())},
               {"determinant", io::to_json(det)},
               {"lattice_representative", io::to_json(reduced.representative)},
               {"distance_to_lattice", distance_to_lattice(det)},
               {"diagnostics", {{"loop_at_identity", loop}, {"unitary", unitary}, {"positive", positive}}}};
  if (loop && unitary) {
    const LoopDeterminant ld = timer.time("delta_1_0", [&] { return delta_1_0(path, cfg.quad); });
    payload["loop"] = {{"function", io::to_json(ld.function)},
                       {"h", io::to_json(ld.h)},
                       {"imaginary_residual", ld.imaginary_residual}};
  }
  return {kOk, std::move(payload)};
}

Json factor_curve(const Element& x, const RunConfig& cfg) {
  Json curve = Json::array();
  for (int m = 1; m <= cfg.factors; ++m) {
    double residual;
    bool converged = true;
    try {
      residual = factor_positive_products(x, m, cfg.optimizer).residual();
    } catch (const FactorizationNoConvergence& e) {
      residual = e.best().residual();
      converged = false;
    }
    curve.push_back({{"m", m}, {"residual", residual}, {"converged", converged}});
  }
  return curve;
}

Outcome cmd_factor(const RunConfig& cfg, const std::string& file, bool curve, Timer& timer) {
  const Element x = io::element_from_json(io::read_file(file));
  const MembershipResult m = membership_test(x, cfg.optimizer.membership_tol);
  Json payload{{"membership", membership_json(m)}, {"factors_requested", cfg.factors}};
  if (!m.member) {
    payload["distance_probe"] =
        timer.time("best_approx_distance", [&] { return best_approx_distance(x, cfg.factors, cfg.optimizer); });
    return {kNotInClosure, std::move(payload)};
  }
  if (curve) payload["residual_curve"] = timer.time("residual_curve", [&] { return factor_curve(x, cfg); });
  const double norm = op_norm(x);
  auto describe = [&](const PositiveFactorization& f) {
    payload["factorization"] = io::to_json(f);
    payload["relative_residual"] = f.residual() / norm;
  };
  try {
    const PositiveFactorization f = timer.time(
        "factor_positive_products", [&] { return factor_positive_products(x, cfg.factors, cfg.optimizer); });
    describe(f);
    payload["converged"] = true;
    return {kOk, std::move(payload)};
  } catch (const FactorizationNoConvergence& e) {
    describe(e.best());
    payload["converged"] = false;
    return {kNoConvergence, std::move(payload)};
  }
}

Outcome cmd_membership(const RunConfig& cfg, const std::string& file) {
  const Element x = io::element_from_json(io::read_file(file));
  return {kOk, membership_json(membership_test(x, cfg.optimizer.membership_tol))};
}

Outcome cmd_check(const RunConfig& cfg, const std::string& file, Timer& timer) {
  const Json j = io::read_file(file);
  if (j.is_object() && j.contains("generators")) {
    const AbstractDescriptor d = io::abstract_descriptor_from_json(j);
    const ConditionReport r = timer.time("check_abstract", [&] { return check_abstract(d); });
    return {kOk, {{"descriptor", io::to_json(d)}, {"report", io::to_json(r)}}};
  }
  const AlgebraDescriptor alg = io::algebra_from_json(j);
  const ConditionReport r = timer.time("check_conditions", [&] { return check_conditions(alg, cfg.seed); });
  return {kOk, {{"descriptor", io::to_json(alg)}, {"report", io::to_json(r)}}};
}

// Each demo fills `values` and returns whether its invariants hold.
using Demo = std::function<bool(const RunConfig&, Json&)>;

const AlgebraDescriptor kDemoAlgebra({2, 3});

bool demo_polar(const RunConfig& cfg, Json& values) {
  Inputs in(cfg.seed);
  const Element c = in.hermitian(kDemoAlgebra, 2.0), d = in.hermitian(kDemoAlgebra, 2.0);
  const InvertiblePath p = polar_path(c, d);
  const TraceValue det = path_determinant(p, cfg.quad);
  values = {{"c", io::to_json(c)},
            {"d", io::to_json(d)},
            {"endpoint", io::to_json(p.evaluate(1.0))},
            {"endpoint_unitarity_defect", unitarity_defect(p.evaluate(1.0))},
            {"determinant", io::to_json(det)},
            {"max_abs", max_abs(det)}};
  return max_abs(det) <= cfg.tolerances.at("demo_determinant");
}

bool demo_splitting(const RunConfig& cfg, Json& values) {
  Inputs in(cfg.seed);
  const Element c = in.hermitian(kDemoAlgebra, 2.0), d = in.hermitian(kDemoAlgebra, 2.0);
  const InvertiblePath p = polar_path(c, d);
  const ExponentialSplitting s = split_into_exponentials(p);
  const TraceValue sum = universal_trace(s.log_sum());
  const double endpoint_error = op_norm(s.product() - p.evaluate(1.0));
  Json logs = Json::array();
  for (const auto& h : s.logs) logs.push_back(io::to_json(h));
  values = {{"c", io::to_json(c)},
            {"d", io::to_json(d)},
            {"partition", s.partition},
            {"logs", std::move(logs)},
            {"trace_of_sum", io::to_json(sum)},
            {"quotient_norm", quotient_norm(sum)},
            {"endpoint_error", endpoint_error}};
  return quotient_norm(sum) <= cfg.tolerances.at("demo_trace") &&
         endpoint_error <= cfg.tolerances.at("demo_endpoint");
}

bool demo_commutator(const RunConfig& cfg, Json& values) {
  Inputs in(cfg.seed);
  const Element u = in.special_unitary(kDemoAlgebra);
  const CommutatorPair p = commutator_factor_su(u);
  const double residual = op_norm(group_commutator(p.v, p.w) - u);
  values = {{"u", io::to_json(u)},
            {"v", io::to_json(p.v)},
            {"w", io::to_json(p.w)},
            {"residual", residual},
            {"v_unitarity_defect", unitarity_defect(p.v)},
            {"w_unitarity_defect", unitarity_defect(p.w)}};
  return residual <= cfg.tolerances.at("demo_commutator");
}

bool demo_loop_lattice(const RunConfig& cfg, Json& values) {
  // t -> diag(e^{2 pi i k t}, 1, ...) in each block, k = 1..4
  bool pass = true;
  Json loops = Json::array();
  for (std::size_t block = 0; block < kDemoAlgebra.num_blocks(); ++block) {
    for (int k = 1; k <= 4; ++k) {
      std::vector<Matrix> gens;
      for (std::size_t i = 0; i < kDemoAlgebra.num_blocks(); ++i) {
        Matrix g = Matrix::Zero(kDemoAlgebra.block_size(i), kDemoAlgebra.block_size(i));
        if (i == block) g(0, 0) = Complex(0.0, 2.0 * std::numbers::pi * k);
        gens.push_back(g);
      }
      const InvertiblePath loop = InvertiblePath::exp_line(Element(kDemoAlgebra, std::move(gens)));
      const TraceValue det = path_determinant(loop, cfg.quad);
      const PairingCheck pc = pairing_consistency(kDemoAlgebra, loop, cfg.quad);
      const bool ok = pc.distance <= cfg.tolerances.at("demo_lattice") && distance_to_lattice(det) <= 1e-6;
      pass = pass && ok;
      loops.push_back({{"block", block},
                       {"winding", k},
                       {"determinant", io::to_json(det)},
                       {"distance_to_lattice", distance_to_lattice(det)},
                       {"delta_1_0", io::to_json(pc.value)},
                       {"nearest_class", pc.nearest},
                       {"pairing_distance", pc.distance},
                       {"pass", ok}});
    }
  }
  values = {{"loops", std::move(loops)}};
  return pass;
}

const std::map<std::string, Demo>& demos() {
  static const std::map<std::string, Demo> registry{
      {"commutator-witness", demo_commutator},
      {"loop-lattice", demo_loop_lattice},
      {"polar-path-determinant-zero", demo_polar},
      {"splitting-trace-zero", demo_splitting},
  };
  return registry;
}

Outcome cmd_demo(const RunConfig& cfg, const std::string& name, Timer& timer) {
  const auto it = demos().find(name);
  if (it == demos().end()) throw Error(ErrorKind::ParseError, "unknown demo \"" + name + "\"");
  Json values;
  const bool pass = timer.time(name, [&] { return it->second(cfg, values); });
  return {pass ? kOk : kDemoFailed, {{"name", name}, {"pass", pass}, {"values", std::move(values)}}};
}

Outcome cmd_bench(const RunConfig& cfg, int repeat, Timer& timer) {
  Inputs in(cfg.seed);
  const Element c = in.hermitian(kDemoAlgebra, 2.0), d = in.hermitian(kDemoAlgebra, 2.0);
  const Element u = in.special_unitary(kDemoAlgebra);
  const Element x = in.special_unitary(kDemoAlgebra) * in.positive(kDemoAlgebra);
  Json results;
  for (int r = 0; r < repeat; ++r) {
    const std::string suffix = "#" + std::to_string(r);
    results["exp_line_determinant"] = io::to_json(
        timer.time("exp_line_determinant" + suffix,
                   [&] { return path_determinant(InvertiblePath::exp_line(c), cfg.quad); }));
    results["polar_path_determinant"] = io::to_json(
        timer.time("polar_path_determinant" + suffix, [&] { return path_determinant(polar_path(c, d), cfg.quad); }));
    results["commutator_residual"] = timer.time("commutator" + suffix, [&] {
      const CommutatorPair p = commutator_factor_su(u);
      return op_norm(group_commutator(p.v, p.w) - u);
    });
    results["factor_residual"] = timer.time("factor" + suffix, [&] {
      try {
        return factor_positive_products(x, cfg.factors, cfg.optimizer).residual();
      } catch (const FactorizationNoConvergence& e) {
        return e.best().residual();
      }
    });
    results["check_verdict"] =
        timer.time("check" + suffix, [&] { return check_conditions(kDemoAlgebra, cfg.seed).apfp_verdict; });
  }
  return {kOk, {{"repeat", repeat}, {"results", std::move(results)}}};
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidElement:
    case ErrorKind::InvalidPath:
    case ErrorKind::DescriptorMismatch:
    case ErrorKind::RankMismatch:
    case ErrorKind::InconsistentFlags:
      return kParse;
    case ErrorKind::NotInClosure:
      return kNotInClosure;
    case ErrorKind::RankTooHighForDensity:
      return kRankTooHigh;
    default:
      return kNumeric;
  }
}

Json provenance(const RunConfig& cfg, const std::string& command, const Timer& timer) {
  return {{"tool", "apfp"},
          {"version", kVersion},
          {"command", command},
          {"seed", cfg.seed},
          {"config",
           {{"quadrature", {{"steps", cfg.quad.steps}, {"tol", cfg.quad.tol}, {"max_steps", cfg.quad.max_steps}}},
            {"optimizer",
             {{"restarts", cfg.optimizer.restarts},
              {"max_iterations", cfg.optimizer.max_iterations},
              {"gradient_tolerance", cfg.optimizer.gradient_tolerance},
              {"target_residual", cfg.optimizer.target_residual},
              {"threads", cfg.optimizer.threads}}},
            {"factors", cfg.factors},
            {"output", cfg.output}}},
          {"tolerances", cfg.tolerances},
          {"timing_ms", timer.json()}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::vector<std::string> tolerance_overrides;
  std::string file, demo_name;
  bool curve = false;
  int repeat = 3;

  CLI::App app{"Products of positive elements in finite-dimensional C*-algebras", "apfp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.add_option("--seed", cfg.seed, "Seed for every randomized step");
  app.add_option("--quad-steps", cfg.quad.steps, "Initial Simpson panels")->check(CLI::PositiveNumber);
  app.add_option("--quad-tol", cfg.quad.tol, "Quadrature agreement tolerance")->check(CLI::PositiveNumber);
  app.add_option("--quad-max-steps", cfg.quad.max_steps, "Cap on Simpson panels")->check(CLI::PositiveNumber);
  app.add_option("--restarts", cfg.optimizer.restarts, "Optimizer restarts")->check(CLI::PositiveNumber);
  app.add_option("--max-iterations", cfg.optimizer.max_iterations, "Iterations per restart")
      ->check(CLI::PositiveNumber);
  app.add_option("--gradient-tolerance", cfg.optimizer.gradient_tolerance, "Optimizer gradient tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--target-residual", cfg.optimizer.target_residual, "Success threshold relative to ||x||")
      ->check(CLI::PositiveNumber);
  app.add_option("--factors", cfg.factors, "Number of positive factors")->check(CLI::PositiveNumber);
  app.add_option("--output", cfg.output, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", cfg.out_file, "Write the report to this file");
  app.add_option("--tol", tolerance_overrides, "Tolerance override NAME=VALUE (repeatable)");

  auto* det_path = app.add_subcommand("det-path", "Determinant of a path of invertibles");
  det_path->add_option("path", file, "Path JSON")->required();
  auto* factor = app.add_subcommand("factor", "Factor an element into positive factors");
  factor->add_option("element", file, "Element JSON")->required();
  factor->add_flag("--curve", curve, "Also report residuals for m = 1..factors");
  auto* membership = app.add_subcommand("membership", "Closure membership test");
  membership->add_option("element", file, "Element JSON")->required();
  auto* check = app.add_subcommand("check", "Evaluate the four conditions");
  check->add_option("descriptor", file, "Algebra or abstract descriptor JSON")->required();
  auto* demo = app.add_subcommand("demo", "Run a bundled scenario");
  std::vector<std::string> names;
  for (const auto& [name, _] : demos()) names.push_back(name);
  demo->add_option("--name", demo_name, "Scenario")->required()->check(CLI::IsMember(names));
  auto* bench = app.add_subcommand("bench", "Time the core operations");
  bench->add_option("--repeat", repeat, "Repetitions")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "apfp: " << e.what() << "\n";
    return kParse;
  }

  for (const auto& item : tolerance_overrides) {
    const auto eq = item.find('=');
    const std::string name = item.substr(0, eq);
    if (eq == std::string::npos || !cfg.tolerances.contains(name)) {
      err << "apfp: unknown tolerance override \"" << item << "\"\n";
      return kParse;
    }
    try {
      cfg.tolerances[name] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      err << "apfp: bad tolerance value in \"" << item << "\"\n";
      return kParse;
    }
  }
  cfg.optimizer.seed = cfg.seed;
  cfg.optimizer.membership_tol = cfg.tolerances["membership"];
  cfg.optimizer.threads = thread_cap();

  const std::string command = app.get_subcommands().front()->get_name();
  Timer timer;
  Outcome outcome;
  try {
    if (*det_path) {
      outcome = cmd_det_path(cfg, file, timer);
    } else if (*factor) {
      outcome = cmd_factor(cfg, file, curve, timer);
    } else if (*membership) {
      outcome = cmd_membership(cfg, file);
    } else if (*check) {
      outcome = cmd_check(cfg, file, timer);
    } else if (*demo) {
      outcome = cmd_demo(cfg, demo_name, timer);
    } else {
      outcome = cmd_bench(cfg, repeat, timer);
    }
  } catch (const Error& e) {
    err << "apfp: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }

  std::string text;
  if (cfg.output == "csv") {
    text = to_csv(outcome.payload);
  } else {
    const Json report{{"payload", outcome.payload}, {"provenance", provenance(cfg, command, timer)}};
    text = report.dump(2) + "\n";
  }
  if (cfg.out_file.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.out_file);
    if (!f || !(f << text)) {
      err << "apfp: cannot write \"" << cfg.out_file << "\"\n";
      return kParse;
    }
  }
  return outcome.code;
}

}  // namespace apfp::cli
