#include "apfp/io.hpp"

#include <fstream>
#include <sstream>

namespace apfp::io {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) fail(std::string("expected an object with field \"") + name + "\"");
  const auto it = j.find(name);
  if (it == j.end()) fail(std::string("missing field \"") + name + "\"");
  return *it;
}

double number(const Json& j) {
  if (!j.is_number()) fail("expected a number, got " + j.dump());
  return j.get<double>();
}

bool boolean(const Json& j) {
  if (!j.is_boolean()) fail("expected a boolean, got " + j.dump());
  return j.get<bool>();
}

const Json& array(const Json& j) {
  if (!j.is_array()) fail("expected an array, got " + j.dump());
  return j;
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) fail("expected [re, im], got " + j.dump());
  return {number(j[0]), number(j[1])};
}

Json rational_json(const Rational& r) { return to_string(r); }

Rational rational_from(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (!j.is_string()) fail("expected a rational as a string, got " + j.dump());
  return parse_rational(j.get<std::string>());
}

Json symbolic_json(const SymbolicReal& s) { return {{"a", rational_json(s.a)}, {"b", rational_json(s.b)}}; }

SymbolicReal symbolic_from(const Json& j) {
  if (!j.is_object()) fail("expected {\"a\": ..., \"b\": ...}, got " + j.dump());
  SymbolicReal s{rational_from(field(j, "a")), 0};
  if (j.contains("b")) s.b = rational_from(j["b"]);
  return s;
}

Json condition_json(const Condition& c, Json witness) {
  Json out{{"holds", c.holds}, {"source", std::string(to_string(c.source))}, {"note", c.note}};
  if (!witness.is_null()) out["witness"] = std::move(witness);
  return out;
}

Condition condition_from(const Json& j) {
  Condition c;
  c.holds = boolean(field(j, "holds"));
  const std::string source = field(j, "source").get<std::string>();
  if (source == "computed") {
    c.source = Source::Computed;
  } else if (source == "asserted") {
    c.source = Source::Asserted;
  } else if (source == "closed_form") {
    c.source = Source::ClosedForm;
  } else {
    fail("unknown condition source \"" + source + "\"");
  }
  c.note = field(j, "note").get<std::string>();
  return c;
}

Json interval_json(Interval d) { return Json::array({d.lo, d.hi}); }

Interval interval_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) fail("expected a domain [lo, hi], got " + j.dump());
  return {number(j[0]), number(j[1])};
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(e.what());
  }
}

}  // namespace

Json to_json(const Element& x) {
  Json blocks = Json::array();
  for (const auto& b : x.blocks()) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < b.cols(); ++c) row.push_back(complex_json(b(r, c)));
      rows.push_back(std::move(row));
    }
    blocks.push_back(std::move(rows));
  }
  return {{"blocks", std::move(blocks)}};
}

Element element_from_json(const Json& j) {
  return guarded([&] {
    std::vector<Matrix> blocks;
    for (const Json& rows : array(field(j, "blocks"))) {
      const auto n = static_cast<Eigen::Index>(array(rows).size());
      if (n == 0) fail("empty block");
      Matrix m(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        const Json& row = array(rows[r]);
        if (static_cast<Eigen::Index>(row.size()) != n) fail("block is not square");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_from(row[c]);
      }
      blocks.push_back(std::move(m));
    }
    if (blocks.empty()) fail("an element needs at least one block");
    return Element(std::move(blocks));
  });
}

Json to_json(const InvertiblePath& p) {
  Json out = std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, path_kind::ExpLine>) {
          return {{"kind", "exp_line"}, {"c", to_json(k.c)}};
        } else if constexpr (std::is_same_v<K, path_kind::ProductPolar>) {
          return {{"kind", "product_polar"}, {"c", to_json(k.c)}, {"d", to_json(k.d)}};
        } else if constexpr (std::is_same_v<K, path_kind::PolarModulus>) {
          return {{"kind", "polar_modulus"}, {"c", to_json(k.c)}, {"d", to_json(k.d)}};
        } else if constexpr (std::is_same_v<K, path_kind::Sampled>) {
          Json samples = Json::array();
          for (const auto& s : k.samples) samples.push_back({{"t", s.t}, {"value", to_json(s.value)}});
          return {{"kind", "sampled"}, {"samples", std::move(samples)}};
        } else if constexpr (std::is_same_v<K, path_kind::PointwiseProduct>) {
          return {{"kind", "pointwise_product"}, {"first", to_json(*k.first)}, {"second", to_json(*k.second)}};
        } else if constexpr (std::is_same_v<K, path_kind::Concatenation>) {
          return {{"kind", "concatenation"}, {"first", to_json(*k.first)}, {"second", to_json(*k.second)}};
        } else {
          return {{"kind", "reversal"}, {"inner", to_json(*k.inner)}};
        }
      },
      p.kind());
  out["domain"] = interval_json(p.domain());
  return out;
}

InvertiblePath path_from_json(const Json& j) {
  return guarded([&]() -> InvertiblePath {
    const Json& kind_json = field(j, "kind");
    if (!kind_json.is_string()) fail("path kind must be a string");
    const std::string kind = kind_json.get<std::string>();
    const bool has_domain = j.contains("domain");
    const Interval domain = has_domain ? interval_from(j["domain"]) : Interval{};

    auto checked = [&](InvertiblePath p) {
      if (has_domain && !(p.domain() == domain)) {
        throw Error(ErrorKind::InvalidPath, "stated domain disagrees with the path's own domain");
      }
      return p;
    };
    if (kind == "exp_line") return InvertiblePath::exp_line(element_from_json(field(j, "c")), domain);
    if (kind == "product_polar") {
      return InvertiblePath::product_polar(element_from_json(field(j, "c")), element_from_json(field(j, "d")),
                                           domain);
    }
    if (kind == "polar_modulus") {
      return InvertiblePath::polar_modulus(element_from_json(field(j, "c")), element_from_json(field(j, "d")),
                                           domain);
    }
    if (kind == "sampled") {
      std::vector<path_kind::Sample> samples;
      for (const Json& s : array(field(j, "samples"))) {
        samples.push_back({number(field(s, "t")), element_from_json(field(s, "value"))});
      }
      return checked(InvertiblePath::sampled(std::move(samples)));
    }
    if (kind == "pointwise_product") {
      return checked(InvertiblePath::pointwise_product(path_from_json(field(j, "first")),
                                                       path_from_json(field(j, "second"))));
    }
    if (kind == "concatenation") {
      return checked(
          InvertiblePath::concatenation(path_from_json(field(j, "first")), path_from_json(field(j, "second"))));
    }
    if (kind == "reversal") return checked(InvertiblePath::reversal(path_from_json(field(j, "inner"))));
    fail("unknown path kind \"" + kind + "\"");
  });
}

Json to_json(const TraceValue& v) {
  Json out = Json::array();
  for (const Complex& z : v.coords()) out.push_back(complex_json(z));
  return out;
}

TraceValue trace_value_from_json(const Json& j, const AlgebraDescriptor& alg) {
  return guarded([&] {
    std::vector<Complex> coords;
    for (const Json& z : array(j)) coords.push_back(complex_from(z));
    return TraceValue(alg, std::move(coords));
  });
}

Json to_json(const AffFunction& f) { return f.values; }

AffFunction aff_function_from_json(const Json& j) {
  return guarded([&] {
    AffFunction f;
    for (const Json& v : array(j)) f.values.push_back(number(v));
    return f;
  });
}

Json to_json(const PositiveFactorization& f) {
  Json factors = Json::array();
  for (const auto& p : f.factors()) factors.push_back(to_json(p));
  return {{"factors", std::move(factors)}, {"target", to_json(f.target())}, {"residual", f.residual()}};
}

PositiveFactorization factorization_from_json(const Json& j) {
  return guarded([&] {
    std::vector<Element> factors;
    for (const Json& p : array(field(j, "factors"))) factors.push_back(element_from_json(p));
    PositiveFactorization f(std::move(factors), element_from_json(field(j, "target")));
    if (j.contains("residual") && number(j["residual"]) != f.residual()) {
      fail("stated residual disagrees with the recomputed one");
    }
    return f;
  });
}

Json to_json(const ConditionReport& r) {
  Json rep;
  if (r.representation_dimension) rep = {{"representation_dimension", *r.representation_dimension}};
  Json probe;
  if (r.probe) {
    probe = {{"samples", r.probe->samples},
             {"epsilon", r.probe->epsilon},
             {"max_distance", r.probe->max_distance},
             {"all_invertible", r.probe->all_invertible}};
  }
  Json density;
  if (r.lattice_witness) {
    Json function = Json::array(), nearest = Json::array();
    for (const auto& v : r.lattice_witness->function) function.push_back(rational_json(v));
    for (const auto& v : r.lattice_witness->nearest) nearest.push_back(rational_json(v));
    density["lattice"] = {{"function", std::move(function)},
                          {"nearest", std::move(nearest)},
                          {"distance", rational_json(r.lattice_witness->distance)}};
  }
  if (r.cyclic_generator) density["cyclic_generator"] = symbolic_json(*r.cyclic_generator);

  return {{"no_findim_reps", condition_json(r.no_findim_reps, std::move(rep))},
          {"stable_rank_one", condition_json(r.stable_rank_one, std::move(probe))},
          {"k1_trivial", condition_json(r.k1_trivial, nullptr)},
          {"rho_dense", condition_json(r.rho_dense, std::move(density))},
          {"apfp_verdict", r.apfp_verdict},
          {"failing", r.failing()}};
}

ConditionReport condition_report_from_json(const Json& j) {
  return guarded([&] {
    ConditionReport r;
    const Json& nf = field(j, "no_findim_reps");
    r.no_findim_reps = condition_from(nf);
    if (nf.contains("witness")) {
      r.representation_dimension = field(nf["witness"], "representation_dimension").get<int>();
    }
    const Json& sr = field(j, "stable_rank_one");
    r.stable_rank_one = condition_from(sr);
    if (sr.contains("witness")) {
      const Json& w = sr["witness"];
      r.probe = StableRankProbe{field(w, "samples").get<int>(), number(field(w, "epsilon")),
                                number(field(w, "max_distance")), boolean(field(w, "all_invertible"))};
    }
    r.k1_trivial = condition_from(field(j, "k1_trivial"));
    const Json& rd = field(j, "rho_dense");
    r.rho_dense = condition_from(rd);
    if (rd.contains("witness")) {
      const Json& w = rd["witness"];
      if (w.contains("lattice")) {
        const Json& l = w["lattice"];
        LatticeWitness lw;
        for (const Json& v : array(field(l, "function"))) lw.function.push_back(rational_from(v));
        for (const Json& v : array(field(l, "nearest"))) lw.nearest.push_back(rational_from(v));
        lw.distance = rational_from(field(l, "distance"));
        r.lattice_witness = std::move(lw);
      }
      if (w.contains("cyclic_generator")) r.cyclic_generator = symbolic_from(w["cyclic_generator"]);
    }
    r.apfp_verdict = boolean(field(j, "apfp_verdict"));
    return r;
  });
}

AbstractDescriptor abstract_descriptor_from_json(const Json& j) {
  return guarded([&] {
    AbstractDescriptor d;
    const Json& rank = field(j, "rank");
    if (!rank.is_number_integer() || rank.get<std::int64_t>() < 1) fail("rank must be a positive integer");
    d.k0.rank = rank.get<std::size_t>();
    for (const Json& g : array(field(j, "generators"))) {
      std::vector<SymbolicReal> image;
      if (g.is_object()) {
        image.push_back(symbolic_from(g));
      } else {
        for (const Json& s : array(g)) image.push_back(symbolic_from(s));
      }
      d.k0.generators.push_back(std::move(image));
    }
    const Json& flags = field(j, "flags");
    d.no_findim_reps = boolean(field(flags, "no_findim_reps"));
    d.stable_rank_one = boolean(field(flags, "stable_rank_one"));
    d.k1_trivial = boolean(field(flags, "k1_trivial"));
    if (j.contains("rho_dense") && !j["rho_dense"].is_null()) d.rho_dense = boolean(j["rho_dense"]);
    return d;
  });
}

Json to_json(const AbstractDescriptor& d) {
  Json generators = Json::array();
  for (const auto& image : d.k0.generators) {
    if (d.k0.rank == 1 && image.size() == 1) {
      generators.push_back(symbolic_json(image[0]));
    } else {
      Json list = Json::array();
      for (const auto& s : image) list.push_back(symbolic_json(s));
      generators.push_back(std::move(list));
    }
  }
  Json out{{"rank", d.k0.rank},
           {"generators", std::move(generators)},
           {"flags",
            {{"no_findim_reps", d.no_findim_reps},
             {"stable_rank_one", d.stable_rank_one},
             {"k1_trivial", d.k1_trivial}}}};
  if (d.rho_dense) out["rho_dense"] = *d.rho_dense;
  return out;
}

AlgebraDescriptor algebra_from_json(const Json& j) {
  return guarded([&] {
    std::vector<int> sizes;
    for (const Json& n : array(field(j, "block_sizes"))) {
      if (!n.is_number_integer()) fail("block sizes must be integers");
      sizes.push_back(n.get<int>());
    }
    return AlgebraDescriptor(std::move(sizes));
  });
}

Json to_json(const AlgebraDescriptor& alg) {
  const auto sizes = alg.block_sizes();
  return {{"block_sizes", std::vector<int>(sizes.begin(), sizes.end())}};
}

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(e.what());
  }
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read \"" + path + "\"");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

}  // namespace apfp::io
