#pragma once

// JSON forms of the engine's values. Doubles are written in their shortest
// round-trip form, so reading back what was written is exact. Malformed input
// raises ParseError; well-formed input with invalid content raises the error
// of the corresponding constructor.

#include <string>

#include <nlohmann/json.hpp>

#include "apfp/checker.hpp"
#include "apfp/factorization.hpp"
#include "apfp/hs_determinant.hpp"
#include "apfp/path.hpp"

namespace apfp::io {

using Json = nlohmann::json;

/// {"blocks": [B_1, ..., B_k]}, B_i a row-major array of rows of [re, im].
Json to_json(const Element& x);
Element element_from_json(const Json& j);

/// {"kind": ..., "domain": [lo, hi], ...}; see README for the payloads.
Json to_json(const InvertiblePath& p);
InvertiblePath path_from_json(const Json& j);

/// [[re, im], ...], one pair per block.
Json to_json(const TraceValue& v);
TraceValue trace_value_from_json(const Json& j, const AlgebraDescriptor& alg);

Json to_json(const AffFunction& f);
AffFunction aff_function_from_json(const Json& j);

/// {"factors": [...], "target": ..., "residual": r}; the residual is
/// recomputed on reading and must match.
Json to_json(const PositiveFactorization& f);
PositiveFactorization factorization_from_json(const Json& j);

Json to_json(const ConditionReport& r);
ConditionReport condition_report_from_json(const Json& j);

/// {"rank": 1, "generators": [{"a": "p/q", "b": "r/s"}, ...],
///  "flags": {"no_findim_reps": ..., "stable_rank_one": ..., "k1_trivial": ...},
///  "rho_dense": optional}. For rank > 1 each generator is a list of {a, b}.
AbstractDescriptor abstract_descriptor_from_json(const Json& j);
Json to_json(const AbstractDescriptor& d);

/// {"block_sizes": [n_1, ..., n_k]}.
AlgebraDescriptor algebra_from_json(const Json& j);
Json to_json(const AlgebraDescriptor& alg);

/// Parses text, converting library exceptions to ParseError.
Json parse(const std::string& text);
/// Reads and parses a file; ParseError if it cannot be read.
Json read_file(const std::string& path);

}  // namespace apfp::io
