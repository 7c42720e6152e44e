#include "rcomp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rcomp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void bad(const std::string& path, const std::string& msg) { fail(ErrorKind::ParseError, path + ": " + msg); }

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) bad(path, std::string("missing field '") + key + "'");
    return *it;
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

double num_field(const json& j, const char* key, const std::string& path) {
    return num(field(j, key, path), path + "." + key);
}

std::size_t size_field(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad(path + "." + key, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::string type_of(const json& j, const std::string& path) {
    const json& t = field(j, "type", path);
    if (!t.is_string()) bad(path + ".type", "expected a string");
    return t.get<std::string>();
}

LinearMap map_from_json(const json& j, const std::string& path) { return LinearMap(matrix_from_json(j, path)); }

std::vector<Expr::MixTerm> mix_terms(const json& j, const std::string& path) {
    const json& ts = field(j, "terms", path);
    if (!ts.is_array()) bad(path + ".terms", "expected an array");
    std::vector<Expr::MixTerm> out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::string p = path + ".terms[" + std::to_string(i) + "]";
        out.push_back({num_field(ts[i], "alpha", p), map_from_json(field(ts[i], "L", p), p + ".L"),
                       expr_from_json(field(ts[i], "B", p), p + ".B")});
    }
    return out;
}

json mix_terms_json(const std::vector<Expr::MixTerm>& terms) {
    json a = json::array();
    for (const auto& t : terms)
        a.push_back({{"alpha", t.alpha}, {"L", matrix_to_json(t.l.matrix())}, {"B", expr_to_json(t.b)}});
    return a;
}

}  // namespace

json matrix_to_json(const DenseMatrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

DenseMatrix matrix_from_json(const json& j, const std::string& path) {
    if (j.is_object() && j.contains("identity")) {
        std::size_t n = size_field(j, "identity", path);
        double s = j.contains("scale") ? num_field(j, "scale", path) : 1.0;
        return mscale(s, DenseMatrix::identity(n));
    }
    std::size_t r = size_field(j, "rows", path), c = size_field(j, "cols", path);
    Vector data = vector_from_json(field(j, "data", path), path + ".data");
    if (data.size() != r * c) bad(path, "data has " + std::to_string(data.size()) + " entries, expected rows*cols");
    return DenseMatrix(r, c, std::move(data));
}

json vector_to_json(const Vector& v) { return json(v); }

Vector vector_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of numbers");
    Vector v;
    v.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

json set_to_json(const ConvexSet& c) {
    return std::visit(
        overloaded{[](const BoxSet& s) -> json { return {{"type", "box"}, {"lo", s.lo}, {"hi", s.hi}}; },
                   [](const BallSet& s) -> json {
                       return {{"type", "ball"}, {"center", s.center}, {"radius", s.radius}};
                   },
                   [](const AffineSet& s) -> json {
                       return {{"type", "affine"}, {"basis", matrix_to_json(s.given)}, {"offset", s.offset}};
                   },
                   [](const SingletonSet& s) -> json { return {{"type", "singleton"}, {"point", s.point}}; },
                   [](const HalfspaceSet& s) -> json {
                       return {{"type", "halfspace"}, {"normal", s.normal}, {"offset", s.offset}};
                   }},
        c.variant());
}

ConvexSet set_from_json(const json& j, const std::string& path) {
    const std::string t = type_of(j, path);
    if (t == "box")
        return ConvexSet::box(vector_from_json(field(j, "lo", path), path + ".lo"),
                              vector_from_json(field(j, "hi", path), path + ".hi"));
    if (t == "ball")
        return ConvexSet::ball(vector_from_json(field(j, "center", path), path + ".center"),
                               num_field(j, "radius", path));
    if (t == "affine")
        return ConvexSet::affine(matrix_from_json(field(j, "basis", path), path + ".basis"),
                                 vector_from_json(field(j, "offset", path), path + ".offset"));
    if (t == "singleton") return ConvexSet::singleton(vector_from_json(field(j, "point", path), path + ".point"));
    if (t == "halfspace")
        return ConvexSet::halfspace(vector_from_json(field(j, "normal", path), path + ".normal"),
                                    num_field(j, "offset", path));
    bad(path, "unknown set type '" + t + "'");
}

json atom_to_json(const Atom& a) {
    return std::visit(
        overloaded{[](const ZeroAtom& z) -> json { return {{"type", "zero"}, {"dim", z.dim}}; },
                   [](const ScaledIdentityAtom& s) -> json {
                       return {{"type", "scaled_identity"}, {"alpha", s.alpha}, {"dim", s.dim}};
                   },
                   [](const LinearMonotoneAtom& l) -> json {
                       return {{"type", "linear_monotone"}, {"M", matrix_to_json(l.m)}, {"unchecked", l.unchecked}};
                   },
                   [](const NormalConeAtom& n) -> json { return {{"type", "normal_cone"}, {"set", set_to_json(n.set)}}; },
                   [](const SubdiffL1Atom& s) -> json {
                       return {{"type", "subdiff_l1"}, {"lambda", s.lambda}, {"dim", s.dim}};
                   },
                   [](const ConstantShiftAtom& c) -> json {
                       return {{"type", "constant_shift"}, {"v", c.v}, {"base", atom_to_json(*c.base)}};
                   }},
        a.variant());
}

Atom atom_from_json(const json& j, const std::string& path) {
    const std::string t = type_of(j, path);
    if (t == "zero") return Atom::zero(size_field(j, "dim", path));
    if (t == "scaled_identity") return Atom::scaled_identity(num_field(j, "alpha", path), size_field(j, "dim", path));
    if (t == "linear_monotone") {
        bool unchecked = false;
        if (j.contains("unchecked")) {
            if (!j["unchecked"].is_boolean()) bad(path + ".unchecked", "expected a boolean");
            unchecked = j["unchecked"].get<bool>();
        }
        return Atom::linear_monotone(matrix_from_json(field(j, "M", path), path + ".M"), unchecked);
    }
    if (t == "normal_cone") return Atom::normal_cone(set_from_json(field(j, "set", path), path + ".set"));
    if (t == "subdiff_l1") return Atom::subdiff_l1(num_field(j, "lambda", path), size_field(j, "dim", path));
    if (t == "constant_shift")
        return Atom::constant_shift(vector_from_json(field(j, "v", path), path + ".v"),
                                    atom_from_json(field(j, "base", path), path + ".base"));
    bad(path, "unknown atom type '" + t + "'");
}

json expr_to_json(const Expr& e) {
    return std::visit(
        overloaded{
            [](const LeafNode& n) -> json { return {{"type", "leaf"}, {"atom", atom_to_json(n.atom)}}; },
            [](const InverseNode& n) -> json { return {{"type", "inverse"}, {"arg", expr_to_json(n.arg)}}; },
            [](const ScaleLeftNode& n) -> json {
                return {{"type", "scale_left"}, {"rho", n.rho}, {"arg", expr_to_json(n.arg)}};
            },
            [](const ScaleRightNode& n) -> json {
                return {{"type", "scale_right"}, {"rho", n.rho}, {"arg", expr_to_json(n.arg)}};
            },
            [](const TranslateOutNode& n) -> json {
                return {{"type", "translate_out"}, {"z", n.z}, {"arg", expr_to_json(n.arg)}};
            },
            [](const TranslateInNode& n) -> json {
                return {{"type", "translate_in"}, {"w", n.w}, {"arg", expr_to_json(n.arg)}};
            },
            [](const AddScaledIdNode& n) -> json {
                return {{"type", "add_scaled_id"}, {"rho", n.rho}, {"arg", expr_to_json(n.arg)}};
            },
            [](const YosidaNode& n) -> json {
                return {{"type", "yosida"}, {"lambda", n.lambda}, {"arg", expr_to_json(n.arg)}};
            },
            [](const ComposeNode& n) -> json {
                return {{"type", "compose"}, {"L", matrix_to_json(n.l.matrix())}, {"gamma", n.gamma}, {"B", expr_to_json(n.b)}};
            },
            [](const CocomposeNode& n) -> json {
                return {{"type", "cocompose"}, {"L", matrix_to_json(n.l.matrix())}, {"gamma", n.gamma}, {"B", expr_to_json(n.b)}};
            },
            [](const MixtureNode& n) -> json {
                return {{"type", "mixture"}, {"gamma", n.gamma}, {"terms", mix_terms_json(n.terms)}};
            },
            [](const ComixtureNode& n) -> json {
                return {{"type", "comixture"}, {"gamma", n.gamma}, {"terms", mix_terms_json(n.terms)}};
            },
            [](const AverageNode& n) -> json {
                json a = json::array();
                for (const auto& t : n.terms) a.push_back({{"alpha", t.alpha}, {"B", expr_to_json(t.b)}});
                return {{"type", "average"}, {"gamma", n.gamma}, {"terms", a}};
            },
            [](const DouglasRachfordNode& n) -> json {
                return {{"type", "douglas_rachford"}, {"A1", expr_to_json(n.a1)}, {"A2", expr_to_json(n.a2)}};
            },
            [](const ChainNode& n) -> json {
                json a = json::array();
                for (const auto& op : n.ops) a.push_back(expr_to_json(op));
                return {{"type", "chain"}, {"gamma", n.gamma}, {"ops", a}};
            },
            [](const WeightedComposeNode& n) -> json {
                return {{"type", "weighted_compose"},
                        {"L", matrix_to_json(n.l.matrix())},
                        {"gamma", n.gamma},
                        {"B", expr_to_json(n.b)},
                        {"mode", n.mode == Expr::WeightedMode::Plain ? "plain" : "co"}};
            },
            [](const PsiLiftNode& n) -> json {
                return {{"type", "psi_lift"}, {"L", matrix_to_json(n.l.matrix())}, {"gamma", n.gamma}, {"B", expr_to_json(n.b)}};
            },
            [](const ProductNode& n) -> json {
                json a = json::array();
                for (const auto& b : n.blocks) a.push_back(expr_to_json(b));
                return {{"type", "product"}, {"blocks", a}};
            },
            [](const ParallelComposeNode& n) -> json {
                return {{"type", "parallel_compose"}, {"L", matrix_to_json(n.l.matrix())}, {"B", expr_to_json(n.b)}};
            },
            [](const StandardComposeNode& n) -> json {
                return {{"type", "standard_compose"}, {"L", matrix_to_json(n.l.matrix())}, {"B", expr_to_json(n.b)}};
            }},
        e.node().v);
}

Expr expr_from_json(const json& j, const std::string& path) {
    const std::string t = type_of(j, path);
    auto arg = [&] { return expr_from_json(field(j, "arg", path), path + ".arg"); };
    auto sub = [&](const char* k) { return expr_from_json(field(j, k, path), path + "." + k); };
    auto lmap = [&] { return map_from_json(field(j, "L", path), path + ".L"); };
    auto vec = [&](const char* k) { return vector_from_json(field(j, k, path), path + "." + k); };
    if (t == "leaf") return Expr::leaf(atom_from_json(field(j, "atom", path), path + ".atom"));
    if (t == "inverse") return Expr::inverse(arg());
    if (t == "scale_left") return Expr::scale_left(num_field(j, "rho", path), arg());
    if (t == "scale_right") return Expr::scale_right(arg(), num_field(j, "rho", path));
    if (t == "translate_out") return Expr::translate_out(arg(), vec("z"));
    if (t == "translate_in") return Expr::translate_in(arg(), vec("w"));
    if (t == "add_scaled_id") return Expr::add_scaled_id(arg(), num_field(j, "rho", path));
    if (t == "yosida") return Expr::yosida(arg(), num_field(j, "lambda", path));
    if (t == "compose") return Expr::compose(lmap(), num_field(j, "gamma", path), sub("B"));
    if (t == "cocompose") return Expr::cocompose(lmap(), num_field(j, "gamma", path), sub("B"));
    if (t == "mixture") return Expr::mixture(num_field(j, "gamma", path), mix_terms(j, path));
    if (t == "comixture") return Expr::comixture(num_field(j, "gamma", path), mix_terms(j, path));
    if (t == "average") {
        const json& ts = field(j, "terms", path);
        if (!ts.is_array()) bad(path + ".terms", "expected an array");
        std::vector<Expr::AvgTerm> terms;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            std::string p = path + ".terms[" + std::to_string(i) + "]";
            terms.push_back({num_field(ts[i], "alpha", p), expr_from_json(field(ts[i], "B", p), p + ".B")});
        }
        return Expr::average(num_field(j, "gamma", path), std::move(terms));
    }
    if (t == "douglas_rachford") return Expr::douglas_rachford(sub("A1"), sub("A2"));
    if (t == "chain" || t == "product") {
        const char* key = t == "chain" ? "ops" : "blocks";
        const json& a = field(j, key, path);
        if (!a.is_array()) bad(path + "." + key, "expected an array");
        std::vector<Expr> ops;
        for (std::size_t i = 0; i < a.size(); ++i)
            ops.push_back(expr_from_json(a[i], path + "." + key + "[" + std::to_string(i) + "]"));
        if (t == "chain") return Expr::chain(num_field(j, "gamma", path), std::move(ops));
        return Expr::product(std::move(ops));
    }
    if (t == "weighted_compose") {
        const json& m = field(j, "mode", path);
        if (!m.is_string() || (m != "plain" && m != "co")) bad(path + ".mode", "expected \"plain\" or \"co\"");
        return Expr::weighted_compose(lmap(), num_field(j, "gamma", path), sub("B"),
                                      m == "plain" ? Expr::WeightedMode::Plain : Expr::WeightedMode::Co);
    }
    if (t == "psi_lift") return Expr::psi_lift(lmap(), num_field(j, "gamma", path), sub("B"));
    if (t == "parallel_compose") return Expr::parallel_compose(lmap(), sub("B"));
    if (t == "standard_compose") return Expr::standard_compose(lmap(), sub("B"));
    bad(path, "unknown expression type '" + t + "'");
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::ParseError, what + ": " + e.what());
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ParseError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_hash(const json& j) { return fnv1a64(j.dump()); }

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace rcomp
