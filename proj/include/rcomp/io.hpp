#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rcomp/expr.hpp"

namespace rcomp {

using json = nlohmann::json;

// {"rows": r, "cols": c, "data": [row-major]}; {"identity": n, "scale": s} is accepted on input
json matrix_to_json(const DenseMatrix& m);
DenseMatrix matrix_from_json(const json& j, const std::string& path = "matrix");

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& path = "vector");

json set_to_json(const ConvexSet& c);
ConvexSet set_from_json(const json& j, const std::string& path = "set");

json atom_to_json(const Atom& a);
Atom atom_from_json(const json& j, const std::string& path = "atom");

json expr_to_json(const Expr& e);
Expr expr_from_json(const json& j, const std::string& path = "expr");

// parse text, mapping syntax errors to ParseError
json parse_json_text(const std::string& text, const std::string& what);
json read_json_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);
// hash of the canonical dump (sorted keys, shortest round-trip doubles)
std::uint64_t config_hash(const json& j);
std::string hex64(std::uint64_t v);

}  // namespace rcomp
