#include "rcomp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rcomp/oracle.hpp"
#include "rcomp/parallel.hpp"
#include "rcomp/rng.hpp"

namespace rcomp {

namespace fs = std::filesystem;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---- config access; every failure names the offending field ----

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
    fail(ErrorKind::ConfigInvalid, "field '" + field + "': " + msg);
}

bool has(const json& j, const char* k) { return j.is_object() && j.contains(k) && !j[k].is_null(); }

double cfg_num(const json& j, const char* k, std::optional<double> def = std::nullopt) {
    if (!has(j, k)) {
        if (def) return *def;
        invalid(k, "missing");
    }
    if (!j[k].is_number()) invalid(k, "expected a number");
    double v = j[k].get<double>();
    if (!std::isfinite(v)) invalid(k, "must be finite");
    return v;
}

double cfg_pos(const json& j, const char* k, std::optional<double> def = std::nullopt) {
    double v = cfg_num(j, k, def);
    if (!(v > 0.0)) invalid(k, "must be positive");
    return v;
}

std::size_t cfg_count(const json& j, const char* k, std::size_t def) {
    if (!has(j, k)) return def;
    if (!j[k].is_number_integer() || j[k].get<long long>() < 2) invalid(k, "expected an integer >= 2");
    return j[k].get<std::size_t>();
}

bool cfg_bool(const json& j, const char* k, bool def) {
    if (!has(j, k)) return def;
    if (!j[k].is_boolean()) invalid(k, "expected a boolean");
    return j[k].get<bool>();
}

std::string cfg_str(const json& j, const char* k, std::optional<std::string> def = std::nullopt) {
    if (!has(j, k)) {
        if (def) return *def;
        invalid(k, "missing");
    }
    if (!j[k].is_string()) invalid(k, "expected a string");
    return j[k].get<std::string>();
}

// parse errors inside nested values are reported against the field
template <class F>
auto in_field(const char* k, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        invalid(k, e.what());
    }
}

Expr cfg_expr(const json& j, const char* k) {
    if (!has(j, k)) invalid(k, "missing");
    return in_field(k, [&] { return expr_from_json(j[k], k); });
}

std::optional<Expr> cfg_opt_expr(const json& j, const char* k) {
    if (!has(j, k)) return std::nullopt;
    return cfg_expr(j, k);
}

LinearMap cfg_map(const json& j, const char* k, std::size_t default_dim) {
    if (!has(j, k)) return LinearMap::identity(default_dim);
    return in_field(k, [&] { return LinearMap(matrix_from_json(j[k], k)); });
}

Vector cfg_vec(const json& j, const char* k) {
    if (!has(j, k)) invalid(k, "missing");
    return in_field(k, [&] { return vector_from_json(j[k], k); });
}

std::vector<double> cfg_grid(const json& j, const char* k) {
    Vector g = cfg_vec(j, k);
    if (g.empty()) invalid(k, "grid is empty");
    for (double v : g)
        if (!(v > 0.0)) invalid(k, "grid entries must be positive");
    return g;
}

const json& cfg_array(const json& j, const char* k) {
    if (!has(j, k) || !j[k].is_array() || j[k].empty()) invalid(k, "expected a nonempty array");
    return j[k];
}

// ---- output ----

std::string vec_text(const Vector& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    return s;
}

struct Outputs {
    fs::path dir;
    std::string name;
    std::vector<std::string> files;

    void write(const std::string& suffix, const std::string& text) {
        fs::create_directories(dir);
        std::string file = name + suffix;
        std::ofstream out(dir / file, std::ios::binary);
        if (!out) fail(ErrorKind::ExperimentFailed, "cannot write " + (dir / file).string());
        out << text;
        files.push_back(file);
    }
};

std::uint64_t case_seed(std::uint64_t seed, std::size_t i) { return seed + (i + 1) * SplitMix64::kGolden; }

std::vector<Vector> ball(std::size_t dim, double radius, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> pts(n);
    for (auto& p : pts) p = rng.in_ball(dim, radius);
    return pts;
}

double max_abs(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

// ---------------------------------------------------------------- identity suite

std::vector<IdentityResult> identity_suite(std::size_t samples, std::uint64_t seed, int threads) {
    const double g = 0.8;
    const LinearMap l(DenseMatrix::from_rows({{0.6, 0.2}, {-0.3, 0.5}, {0.4, -0.1}}));
    const LinearMap s(DenseMatrix::from_rows({{0.9, -0.2}, {0.3, 0.7}}));
    const std::vector<Expr> bs = {
        Expr::leaf(Atom::subdiff_l1(0.7, 3)),
        Expr::leaf(Atom::linear_monotone(DenseMatrix::from_rows({{1.0, 0.5, 0.0}, {-0.5, 0.3, 0.0}, {0.0, 0.0, 0.2}}))),
        Expr::leaf(Atom::normal_cone(ConvexSet::box({-0.5, -1.0, 0.0}, {0.5, 1.0, 2.0}))),
    };
    using Pair = std::function<double(const Vector&, const Expr&)>;
    struct Check {
        std::string name;
        Pair residual;
    };
    std::vector<Check> checks;
    checks.push_back({"compose_equals_inverse_of_cocompose_of_inverse", [&](const Vector& x, const Expr& b) {
                          Expr lhs = Expr::compose(l, g, b);
                          Expr rhs = Expr::inverse(Expr::cocompose(l, 1.0 / g, Expr::inverse(b)));
                          return max_abs(resolvent(lhs, g, x), resolvent(rhs, g, x));
                      }});
    for (double rho : {0.5, 2.0}) {
        std::string tag = rho == 0.5 ? "0.5" : "2";
        checks.push_back({"scaling_compose_rho_" + tag, [&, rho](const Vector& x, const Expr& b) {
                              Expr lhs = Expr::scale_left(rho, Expr::compose(l, g, b));
                              Expr rhs = Expr::compose(l, g / rho, Expr::scale_left(rho, b));
                              return max_abs(resolvent(lhs, g / rho, x), resolvent(rhs, g / rho, x));
                          }});
        checks.push_back({"scaling_cocompose_rho_" + tag, [&, rho](const Vector& x, const Expr& b) {
                              Expr lhs = Expr::scale_left(rho, Expr::cocompose(l, g, b));
                              Expr rhs = Expr::cocompose(l, g / rho, Expr::scale_left(rho, b));
                              return max_abs(resolvent(lhs, g / rho, x), resolvent(rhs, g / rho, x));
                          }});
    }
    checks.push_back({"compose_associativity", [&](const Vector& x, const Expr& b) {
                          Expr lhs = Expr::compose(s, g, Expr::compose(l, g, b));
                          Expr rhs = Expr::compose(compose_maps(l, s), g, b);
                          return max_abs(resolvent(lhs, g, x), resolvent(rhs, g, x));
                      }});
    checks.push_back({"cocompose_associativity", [&](const Vector& x, const Expr& b) {
                          Expr lhs = Expr::cocompose(s, g, Expr::cocompose(l, g, b));
                          Expr rhs = Expr::cocompose(compose_maps(l, s), g, b);
                          return max_abs(resolvent(lhs, g, x), resolvent(rhs, g, x));
                      }});
    const double rho = 0.6;
    checks.push_back({"identity_shift_through_compose", [&](const Vector& x, const Expr& b) {
                          const double beta = g / (1.0 + rho * g);
                          Expr lhs = Expr::compose(l, g, Expr::add_scaled_id(b, rho));
                          Expr rhs = Expr::add_scaled_id(Expr::compose(l, beta, b), rho);
                          return max_abs(resolvent(lhs, g, x), resolvent(rhs, g, x));
                      }});
    checks.push_back({"yosida_of_cocompose", [&](const Vector& x, const Expr& b) {
                          Vector lhs = yosida_value(Expr::cocompose(l, g, b), g, x);
                          Vector rhs = apply_adjoint(l, yosida_value(b, g, rcomp::apply(l, x)));
                          return max_abs(lhs, rhs);
                      }});

    std::vector<IdentityResult> out(checks.size());
    parallel_for(checks.size(), threads, [&](std::size_t c) {
        IdentityResult& r = out[c];
        r.name = checks[c].name;
        for (std::size_t bi = 0; bi < bs.size(); ++bi) {
            auto pts = ball(2, 3.0, samples, case_seed(seed, c * 16 + bi));
            for (const auto& x : pts) r.max_residual = std::max(r.max_residual, checks[c].residual(x, bs[bi]));
            r.samples += pts.size();
        }
    });
    return out;
}

// ---------------------------------------------------------------- describe

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string map_text(const LinearMap& l) {
    std::string s = "L " + std::to_string(l.rows()) + "x" + std::to_string(l.cols()) + " |L|=" +
                    num(operator_norm(l));
    if (l.is_identity(l.class_tol())) s += " identity";
    if (l.is_isometry()) s += " isometry";
    if (l.is_coisometry()) s += " coisometry";
    return s;
}

void describe_rec(const Expr& e, int depth, std::ostringstream& os) {
    const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
    os << pad << e.kind() << " dim=" << e.dim();
    if (auto g = e.native_gamma()) os << " native_gamma=" << num(*g);
    std::visit(
        overloaded{
            [&](const LeafNode& n) { os << " atom=" << n.atom.kind() << '\n'; },
            [&](const InverseNode& n) {
                os << '\n';
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const ScaleLeftNode& n) {
                os << " rho=" << num(n.rho) << '\n';
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const ScaleRightNode& n) {
                os << " rho=" << num(n.rho) << '\n';
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const TranslateOutNode& n) {
                os << " z=[" << vec_text(n.z) << "]\n";
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const TranslateInNode& n) {
                os << " w=[" << vec_text(n.w) << "]\n";
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const AddScaledIdNode& n) {
                os << " rho=" << num(n.rho) << '\n';
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const YosidaNode& n) {
                os << " lambda=" << num(n.lambda) << '\n';
                describe_rec(n.arg, depth + 1, os);
            },
            [&](const ComposeNode& n) {
                os << ' ' << map_text(n.l) << '\n';
                if (n.l.is_identity(n.l.class_tol()))
                    os << pad << "  note: L = Id, resolvent is J_{gamma B}\n";
                else if (n.l.is_coisometry())
                    os << pad << "  note: coisometry, equals the parallel composition L^* |> B\n";
                describe_rec(n.b, depth + 1, os);
            },
            [&](const CocomposeNode& n) {
                os << ' ' << map_text(n.l) << '\n';
                if (n.l.is_identity(n.l.class_tol()))
                    os << pad << "  note: L = Id, resolvent is J_{gamma B}\n";
                else if (n.l.is_coisometry())
                    os << pad << "  note: coisometry, equals the standard composition L^* B L\n";
                describe_rec(n.b, depth + 1, os);
            },
            [&](const MixtureNode& n) {
                os << " terms=" << n.terms.size() << '\n';
                for (const auto& t : n.terms) {
                    os << pad << "  alpha=" << num(t.alpha) << ' ' << map_text(t.l) << '\n';
                    describe_rec(t.b, depth + 2, os);
                }
            },
            [&](const ComixtureNode& n) {
                os << " terms=" << n.terms.size() << '\n';
                for (const auto& t : n.terms) {
                    os << pad << "  alpha=" << num(t.alpha) << ' ' << map_text(t.l) << '\n';
                    describe_rec(t.b, depth + 2, os);
                }
            },
            [&](const AverageNode& n) {
                os << " terms=" << n.terms.size() << '\n';
                for (const auto& t : n.terms) {
                    os << pad << "  alpha=" << num(t.alpha) << '\n';
                    describe_rec(t.b, depth + 2, os);
                }
            },
            [&](const DouglasRachfordNode& n) {
                os << '\n';
                describe_rec(n.a1, depth + 1, os);
                describe_rec(n.a2, depth + 1, os);
            },
            [&](const ChainNode& n) {
                os << " p=" << n.ops.size() << ' ' << map_text(n.l) << '\n';
                for (const auto& a : n.ops) describe_rec(a, depth + 1, os);
            },
            [&](const WeightedComposeNode& n) {
                os << " mode=" << (n.mode == Expr::WeightedMode::Plain ? "plain" : "co") << ' ' << map_text(n.l)
                   << '\n';
                describe_rec(n.b, depth + 1, os);
            },
            [&](const PsiLiftNode& n) {
                double nl = operator_norm(n.l);
                const DenseMatrix& m = n.lifted.matrix();
                double resid = max_abs_diff(matmul(m, m.transpose()), DenseMatrix::identity(m.rows()));
                os << ' ' << map_text(n.l) << '\n';
                os << pad << "  check: |L| = " << num(nl) << " < 1\n";
                os << pad << "  check: max|L_Psi L_Psi^T - I| = " << num(resid) << '\n';
                describe_rec(n.b, depth + 1, os);
            },
            [&](const ProductNode& n) {
                os << " blocks=" << n.blocks.size() << '\n';
                for (const auto& b : n.blocks) describe_rec(b, depth + 1, os);
            },
            [&](const ParallelComposeNode& n) {
                os << ' ' << map_text(n.l) << '\n';
                describe_rec(n.b, depth + 1, os);
            },
            [&](const StandardComposeNode& n) {
                os << ' ' << map_text(n.l);
                if (n.mu > 0.0) os << " LL^*=" << num(n.mu) << "Id";
                os << '\n';
                describe_rec(n.b, depth + 1, os);
            }},
        e.node().v);
}

}  // namespace

std::string describe(const Expr& e) {
    std::ostringstream os;
    describe_rec(e, 0, os);
    return os.str();
}

// ---------------------------------------------------------------- experiment kinds

json RunManifest::to_json() const {
    return {{"name", name},
            {"experiment", experiment},
            {"config_hash", config_hash},
            {"artifact_version", kArtifactVersion},
            {"status", status},
            {"outputs", outputs}};
}

namespace {

struct Ctx {
    const json& cfg;
    std::uint64_t seed;
    int threads;
    Outputs& out;
    json report = json::object();
    std::vector<std::string> failures;
};

void run_identity_suite(Ctx& c) {
    std::size_t n = cfg_count(c.cfg, "samples", 1000);
    double tol = cfg_pos(c.cfg, "tol", 1e-9);
    auto res = identity_suite(n, c.seed, c.threads);
    std::ostringstream os;
    os << "identity,max_residual,samples,tol,pass\n";
    for (auto& r : res) {
        r.tol = tol;
        os << r.name << ',' << format_double(r.max_residual) << ',' << r.samples << ',' << format_double(tol) << ','
           << (r.pass() ? "true" : "false") << '\n';
        if (!r.pass()) c.failures.push_back(r.name);
    }
    c.out.write(".csv", os.str());
}

SweepSpec parse_sweep(const json& j) {
    SweepSpec sp;
    sp.kind = in_field("sweep", [&] { return parse_sweep_kind(cfg_str(j, "sweep")); });
    sp.gammas = cfg_grid(j, "gammas");
    sp.gamma_fixed = cfg_pos(j, "gamma_fixed", 1.0);
    sp.delta = cfg_pos(j, "delta", 1.0);
    sp.rho = cfg_pos(j, "rho", 1.0);
    sp.samples = cfg_count(j, "samples", 500);
    sp.b = cfg_expr(j, "B");
    sp.l = cfg_map(j, "L", sp.b.dim());
    if (auto lim = cfg_opt_expr(j, "limit")) sp.limit = *lim;
    sp.cocompose = cfg_bool(j, "cocompose", false);
    sp.constant = cfg_bool(j, "constant", false);
    sp.base_gamma = cfg_pos(j, "base_gamma", 1.0);
    sp.hausdorff = cfg_bool(j, "hausdorff", false);
    if (sp.kind != SweepKind::YosidaLimit && sp.l.rows() != sp.b.dim()) invalid("L", "rows must match dim of B");
    return sp;
}

void run_sweep(Ctx& c, SweepSpec sp) {
    sp.seed = c.seed;
    sp.threads = c.threads;
    SweepReport rep = gamma_sweep(sp);
    rep.config_hash = config_hash(c.cfg);
    std::ostringstream os;
    write_csv(os, rep);
    c.out.write(".csv", os.str());
    json rows = json::array();
    for (const auto& r : rep.rows) {
        json row = {{"gamma", r.m.gamma}, {"delta", r.m.delta}, {"rho", r.m.rho}, {"d", r.m.d}};
        if (!std::isnan(r.m.haus_lower)) {
            row["haus_lower"] = r.m.haus_lower;
            row["haus_upper"] = r.m.haus_upper;
        }
        if (!std::isnan(r.bound)) {
            row["bound"] = r.bound;
            row["y_bound"] = r.y_bound;
            row["within_bound"] = r.m.d <= r.bound + 1e-6;
        }
        rows.push_back(row);
    }
    c.report = {{"sweep", rep.experiment},
                {"samples", sp.samples},
                {"graph_norm", "product"},
                {"truncation", "product-space ball"},
                {"rows", rows}};
}

void run_hausdorff(Ctx& c) {
    Expr a1 = cfg_expr(c.cfg, "A1"), a2 = cfg_expr(c.cfg, "A2");
    if (a1.dim() != a2.dim()) invalid("A2", "dimension differs from A1");
    double rho = cfg_pos(c.cfg, "rho", 1.0);
    double gp = cfg_pos(c.cfg, "gamma_probe", 1.0);
    std::size_t n = cfg_count(c.cfg, "samples", 400);
    MetricRecord m = hausdorff_estimate(a1, a2, rho, gp, n, c.seed, c.threads);
    std::ostringstream os;
    write_csv(os, std::vector<MetricRecord>{m});
    c.out.write(".csv", os.str());
    c.report = {{"samples", n}, {"graph_norm", "product"}, {"truncation", "product-space ball"},
                {"haus_lower_is", "sampled excess, nearest neighbour plus local refinement"}};
}

void run_dr_demo(Ctx& c) {
    Expr a1 = cfg_expr(c.cfg, "A1"), a2 = cfg_expr(c.cfg, "A2");
    if (a1.dim() != a2.dim()) invalid("A2", "dimension differs from A1");
    std::size_t n = cfg_count(c.cfg, "samples", 1000);
    double radius = cfg_pos(c.cfg, "radius", 5.0);
    Expr dr = Expr::douglas_rachford(a1, a2);
    auto pts = ball(a1.dim(), radius, n, c.seed);
    std::vector<double> diff(n);
    parallel_for(n, c.threads, [&](std::size_t i) {
        const Vector& x = pts[i];
        // x/2 + (2 J_{A2} - Id)(2 J_{A1} - Id) x / 2
        Vector r1 = axpy(scale(-1.0, x), 2.0, resolvent(a1, 1.0, x));
        Vector r2 = axpy(scale(-1.0, r1), 2.0, resolvent(a2, 1.0, r1));
        Vector formula = scale(0.5, add(x, r2));
        diff[i] = max_abs(resolvent(dr, 1.0, x), formula);
    });
    double m = 0.0;
    for (double d : diff) m = std::max(m, d);
    std::ostringstream os;
    os << "A1,A2,samples,max_abs_diff\n" << a1.kind() << ',' << a2.kind() << ',' << n << ',' << format_double(m) << '\n';
    c.out.write(".csv", os.str());
}

void run_sample_graph(Ctx& c) {
    Expr a = cfg_expr(c.cfg, "A");
    double g = cfg_pos(c.cfg, "gamma", 1.0);
    double radius = cfg_pos(c.cfg, "radius", 1.0);
    std::size_t n = cfg_count(c.cfg, "samples", 100);
    GraphSample s = minty_sample(a, g, radius, n, c.seed, c.threads);
    const std::size_t d = a.dim();
    std::ostringstream os;
    for (const char* p : {"y", "x", "xstar"})
        for (std::size_t k = 0; k < d; ++k) os << (p[0] == 'y' && k == 0 ? "" : ",") << p << '_' << k;
    os << '\n';
    double recon = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (const Vector* v : {&s.y[i], &s.x[i], &s.xstar[i]})
            for (std::size_t k = 0; k < d; ++k) os << (v == &s.y[i] && k == 0 ? "" : ",") << format_double((*v)[k]);
        os << '\n';
        recon = std::max(recon, max_abs(axpy(s.x[i], g, s.xstar[i]), s.y[i]));
    }
    c.out.write(".csv", os.str());
    c.report = {{"gamma", g}, {"radius", radius}, {"samples", n}, {"minty_reconstruction_error", recon}};
}

void run_modulus(Ctx& c) {
    const json& cases = cfg_array(c.cfg, "cases");
    double radius = cfg_pos(c.cfg, "radius", 3.0);
    std::size_t n = cfg_count(c.cfg, "samples", 142);
    std::ostringstream os;
    os << "case,gamma,beta_hat,beta_formula,pairs,skipped,fne_margin\n";
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const json& cj = cases[i];
        Expr a = cfg_expr(cj, "A");
        double g = cfg_pos(cj, "gamma", a.native_gamma().value_or(1.0));
        InnerProduct ip = InnerProduct::standard(a.dim());
        if (has(cj, "weighted")) ip = InnerProduct::weighted(cfg_map(cj, "weighted", a.dim()));
        const std::uint64_t sd = case_seed(c.seed, i);
        GraphSample s = minty_sample(a, g, radius, n, sd, c.threads);
        ModulusReport m = modulus_estimate(s, ip);
        double fne = firm_nonexpansive_margin(a, g, radius, n, sd ^ 0x9e37ULL);
        os << cfg_str(cj, "name", "case" + std::to_string(i)) << ',' << format_double(g) << ','
           << format_double(m.beta_hat) << ',' << format_double(has(cj, "beta_formula") ? cfg_num(cj, "beta_formula") : kNaN)
           << ',' << m.pair_count << ',' << m.skipped << ',' << format_double(fne) << '\n';
    }
    c.out.write(".csv", os.str());
}

void run_oracle_check(Ctx& c) {
    const json& cases = cfg_array(c.cfg, "cases");
    std::size_t probes = cfg_count(c.cfg, "probes", 20);
    double radius = cfg_pos(c.cfg, "radius", 3.0);
    std::ostringstream os;
    os << "case,probe,gamma,resolvent,oracle,max_abs_diff,oracle_residual\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const json& cj = cases[i];
        Expr e = cfg_expr(cj, "expr");
        double g = cfg_pos(cj, "gamma", e.native_gamma().value_or(1.0));
        std::vector<Vector> pts;
        if (has(cj, "points")) {
            for (const auto& p : cj["points"]) pts.push_back(in_field("points", [&] { return vector_from_json(p); }));
        } else {
            pts = ball(e.dim(), radius, probes, case_seed(c.seed, i));
        }
        std::vector<Vector> rv(pts.size());
        std::vector<OracleResult> ov(pts.size());
        parallel_for(pts.size(), c.threads, [&](std::size_t k) {
            rv[k] = resolvent(e, g, pts[k]);
            ov[k] = inclusion_oracle_detailed(e, g, pts[k]);
        });
        std::string name = cfg_str(cj, "name", "case" + std::to_string(i));
        for (std::size_t k = 0; k < pts.size(); ++k) {
            double d = max_abs(rv[k], ov[k].point);
            worst = std::max(worst, d);
            os << name << ',' << k << ',' << format_double(g) << ',' << vec_text(rv[k]) << ',' << vec_text(ov[k].point)
               << ',' << format_double(d) << ',' << format_double(ov[k].residual) << '\n';
        }
    }
    c.out.write(".csv", os.str());
    c.report = {{"max_abs_diff", worst}};
}

void run_mixture_check(Ctx& c) {
    const json& cases = cfg_array(c.cfg, "cases");
    std::size_t n = cfg_count(c.cfg, "samples", 1000);
    double radius = cfg_pos(c.cfg, "radius", 3.0);
    std::ostringstream os;
    os << "case,kind,samples,max_abs_diff\n";
    for (std::size_t i = 0; i < cases.size(); ++i) {
        Expr e = in_field("cases", [&] { return expr_from_json(cases[i], "cases[" + std::to_string(i) + "]"); });
        Expr lifted = in_field("cases", [&] { return lift_mixture(e); });
        const double g = *e.native_gamma();
        auto pts = ball(e.dim(), radius, n, case_seed(c.seed, i));
        std::vector<double> d(n);
        parallel_for(n, c.threads, [&](std::size_t k) { d[k] = max_abs(resolvent(e, g, pts[k]), resolvent(lifted, g, pts[k])); });
        double m = 0.0;
        for (double v : d) m = std::max(m, v);
        os << "case" << i << ',' << e.kind() << ',' << n << ',' << format_double(m) << '\n';
    }
    c.out.write(".csv", os.str());
}

void run_fitzpatrick(Ctx& c) {
    const json& cases = cfg_array(c.cfg, "cases");
    std::size_t n = cfg_count(c.cfg, "samples", 1000);
    double radius = cfg_pos(c.cfg, "radius", 5.0);
    std::ostringstream os;
    os << "case,min_slack,max_inner,bound,samples\n";
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const json& cj = cases[i];
        Vector x = cfg_vec(cj, "x"), xs = cfg_vec(cj, "xstar");
        FitzpatrickReport r;
        const std::uint64_t sd = case_seed(c.seed, i);
        if (has(cj, "average")) {
            r = fitzpatrick_average_check(cfg_expr(cj, "average"), x, xs, n, sd, radius);
        } else {
            Expr b = cfg_expr(cj, "B");
            LinearMap l = cfg_map(cj, "L", b.dim());
            std::string mode = cfg_str(cj, "mode", "compose");
            if (mode != "compose" && mode != "cocompose") invalid("mode", "expected compose or cocompose");
            r = fitzpatrick_check(l, b, cfg_pos(cj, "gamma", 1.0), x, xs, n, sd, radius,
                                  mode == "compose" ? FitzMode::Compose : FitzMode::Cocompose);
        }
        os << cfg_str(cj, "name", "case" + std::to_string(i)) << ',' << format_double(r.min_slack) << ','
           << format_double(r.max_inner) << ',' << format_double(r.bound) << ',' << r.samples << '\n';
    }
    c.out.write(".csv", os.str());
}

const std::vector<std::string>& kinds() {
    static const std::vector<std::string> k = {"identity-suite", "sweep",        "hausdorff",     "dr-demo",
                                               "sample-graph",   "modulus",      "oracle-check",  "mixture-check",
                                               "fitzpatrick"};
    return k;
}

}  // namespace

RunManifest run_config(const json& config_in, const RunOptions& opts) {
    if (!config_in.is_object()) fail(ErrorKind::ConfigInvalid, "config must be a JSON object");
    json config = config_in;
    if (opts.seed) config["seed"] = *opts.seed;
    if (!has(config, "seed")) invalid("seed", "missing (no default seed)");
    if (!config["seed"].is_number_unsigned() && !(config["seed"].is_number_integer() && config["seed"].get<long long>() >= 0))
        invalid("seed", "expected an unsigned 64-bit integer");
    const std::string kind = cfg_str(config, "experiment");
    if (std::find(kinds().begin(), kinds().end(), kind) == kinds().end())
        invalid("experiment", "unknown kind '" + kind + "'");
    if (has(config, "samples")) cfg_count(config, "samples", 2);

    RunManifest man;
    man.experiment = kind;
    man.name = cfg_str(config, "name", kind);
    man.config_hash = hex64(config_hash(config));
    Outputs out{fs::path(opts.out_dir), man.name, {}};
    Ctx ctx{config, config["seed"].get<std::uint64_t>(), opts.threads, out, json::object(), {}};

    std::optional<SweepSpec> sweep;
    if (kind == "sweep") sweep = parse_sweep(config);
    try {
        if (kind == "identity-suite") run_identity_suite(ctx);
        else if (kind == "sweep") run_sweep(ctx, *sweep);
        else if (kind == "hausdorff") run_hausdorff(ctx);
        else if (kind == "dr-demo") run_dr_demo(ctx);
        else if (kind == "sample-graph") run_sample_graph(ctx);
        else if (kind == "modulus") run_modulus(ctx);
        else if (kind == "oracle-check") run_oracle_check(ctx);
        else if (kind == "mixture-check") run_mixture_check(ctx);
        else run_fitzpatrick(ctx);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigInvalid || e.kind() == ErrorKind::ParseError) throw;
        fail(ErrorKind::ExperimentFailed, man.name + ": " + e.what());
    }
    ctx.report["config_hash"] = man.config_hash;
    ctx.report["experiment"] = kind;
    ctx.report["seed"] = ctx.seed;
    out.write(".json", ctx.report.dump(2) + "\n");
    man.status = ctx.failures.empty() ? "ok" : "failed";
    man.outputs = out.files;
    out.write(".manifest.json", man.to_json().dump(2) + "\n");
    if (!ctx.failures.empty()) {
        std::string msg = man.name + ": failed checks";
        for (const auto& f : ctx.failures) msg += " " + f;
        fail(ErrorKind::ExperimentFailed, msg);
    }
    return man;
}

// ---------------------------------------------------------------- canned repro configs

namespace {

json leaf(const Atom& a) { return expr_to_json(Expr::leaf(a)); }
Expr eleaf(const Atom& a) { return Expr::leaf(a); }

LinearMap rotation(double t, double s = 1.0) {
    return LinearMap(DenseMatrix::from_rows({{s * std::cos(t), -s * std::sin(t)}, {s * std::sin(t), s * std::cos(t)}}));
}

json base(const std::string& kind, const std::string& name, std::uint64_t seed) {
    return {{"experiment", kind}, {"name", name}, {"seed", seed}};
}

std::vector<json> repro_c1() {
    const double r = 1.0 / std::sqrt(2.0);
    struct LCase {
        const char* name;
        LinearMap l;
    };
    std::vector<LCase> ls = {{"id", LinearMap::identity(2)},
                             {"half_id", LinearMap::scaled_identity(2, r)},
                             {"row", LinearMap(DenseMatrix::from_rows({{r, r}}))}};
    const double gammas[] = {0.5, 1.0, 2.0, 0.7, 1.5, 0.3};
    json cases = json::array();
    std::size_t idx = 0;
    for (const auto& lc : ls) {
        const std::size_t m = lc.l.rows();
        std::vector<std::pair<const char*, Atom>> bs = {
            {"zero", Atom::zero(m)},
            {"scaled_identity", Atom::scaled_identity(2.0, m)},
            {"box_cone", Atom::normal_cone(ConvexSet::box(Vector(m, -0.5), Vector(m, 1.0)))},
            {"l1", Atom::subdiff_l1(0.5, m)}};
        for (const auto& [bn, atom] : bs) {
            const double g = gammas[idx++ % 6];
            for (bool co : {false, true}) {
                Expr e = co ? Expr::cocompose(lc.l, g, eleaf(atom)) : Expr::compose(lc.l, g, eleaf(atom));
                cases.push_back({{"name", std::string(co ? "co_" : "") + lc.name + "_" + bn}, {"expr", expr_to_json(e)}});
            }
        }
    }
    json c = base("oracle-check", "resolvent_vs_oracle", 101);
    c["cases"] = cases;
    c["probes"] = 20;
    c["radius"] = 3.0;
    return {c};
}

std::vector<json> repro_c3() {
    json cases = json::array();
    for (double alpha : {0.0, 1.0, 2.0})
        for (double g : {0.5, 1.0, 2.0})
            for (double s : {0.5, 0.8, 1.0}) {
                Expr a = Expr::compose(rotation(0.3, s), g, eleaf(Atom::scaled_identity(alpha, 2)));
                char name[64];
                std::snprintf(name, sizeof name, "a%g_g%g_s%g", alpha, g, s);
                cases.push_back({{"name", name},
                                 {"A", expr_to_json(a)},
                                 {"beta_formula", (alpha + 1.0 / g) / (s * s) - 1.0 / g}});
            }
    // monotonicity of both compositions for nonlinear atoms
    Expr box = eleaf(Atom::normal_cone(ConvexSet::box({-0.5, 0.0}, {1.0, 2.0})));
    Expr l1 = eleaf(Atom::subdiff_l1(0.4, 2));
    cases.push_back({{"name", "compose_box"}, {"A", expr_to_json(Expr::compose(rotation(0.7, 0.9), 0.8, box))}});
    cases.push_back({{"name", "cocompose_box"}, {"A", expr_to_json(Expr::cocompose(rotation(0.7, 0.9), 0.8, box))}});
    cases.push_back({{"name", "compose_l1"}, {"A", expr_to_json(Expr::compose(rotation(-0.4, 0.6), 1.3, l1))}});
    cases.push_back({{"name", "cocompose_l1"}, {"A", expr_to_json(Expr::cocompose(rotation(-0.4, 0.6), 1.3, l1))}});
    json c = base("modulus", "monotonicity", 303);
    c["cases"] = cases;
    c["samples"] = 142;
    c["radius"] = 3.0;
    return {c};
}

std::vector<json> repro_c4() {
    json a = base("dr-demo", "dr_box_identity", 404);
    a["A1"] = leaf(Atom::normal_cone(ConvexSet::box({0.0}, {1.0})));
    a["A2"] = leaf(Atom::scaled_identity(1.0, 1));
    a["samples"] = 1000;
    json b = base("dr-demo", "dr_point_zero", 405);
    b["A1"] = leaf(Atom::normal_cone(ConvexSet::singleton({0.0})));
    b["A2"] = leaf(Atom::zero(1));
    b["samples"] = 1000;
    return {a, b};
}

Expr yosida_example(double gamma) {
    // L = Id/2, B = 2A(2 Id) with A = Id, node parameter gamma/3
    Expr b = Expr::scale_left(2.0, Expr::scale_right(eleaf(Atom::scaled_identity(1.0, 1)), 2.0));
    return Expr::cocompose(LinearMap::scaled_identity(1, 0.5), gamma / 3.0, b);
}

std::vector<json> repro_c5() {
    json c = base("oracle-check", "yosida_example", 505);
    c["cases"] = json::array({{{"name", "half_id_cocompose"}, {"expr", expr_to_json(yosida_example(1.0))},
                               {"gamma", 1.0 / 3.0}, {"points", json::array({json::array({1.0})})}}});
    return {c};
}

std::vector<json> repro_c6() {
    std::vector<json> out;
    json cone01 = leaf(Atom::normal_cone(ConvexSet::box({0.0}, {1.0})));
    json y = base("sweep", "yosida_limit", 601);
    y["sweep"] = "yosida-limit";
    y["gammas"] = {1.0, 0.1, 0.01, 0.001};
    y["gamma_fixed"] = 1.0;
    y["delta"] = 2.0;
    y["samples"] = 2000;
    y["B"] = cone01;
    out.push_back(y);

    json h = base("hausdorff", "yosida_hausdorff", 602);
    h["A1"] = expr_to_json(Expr::yosida(Expr::leaf(Atom::normal_cone(ConvexSet::box({0.0}, {1.0}))), 0.01));
    h["A2"] = cone01;
    h["rho"] = 1.0;
    h["gamma_probe"] = 1.0;
    h["samples"] = 300;
    out.push_back(h);

    json p = base("sweep", "cocompose_limit", 603);
    p["sweep"] = "cocompose-limit";
    p["gammas"] = {0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
    p["rho"] = 1.0;
    p["samples"] = 500;
    p["L"] = matrix_to_json(rotation(0.4, 0.8).matrix());
    p["B"] = leaf(Atom::normal_cone(ConvexSet::ball({0.0, 0.0}, 1.0)));
    out.push_back(p);

    const LinearMap l(DenseMatrix::from_rows({{0.8, 0.3}, {-0.2, 0.7}}));
    json small = base("sweep", "vanishing_scale", 604);
    small["sweep"] = "vanishing-scale";
    small["gammas"] = {1.0, 0.1, 0.01, 0.001};
    small["delta"] = 2.0;
    small["samples"] = 500;
    small["L"] = matrix_to_json(l.matrix());
    small["B"] = leaf(Atom::subdiff_l1(1.0, 2));
    small["limit"] = leaf(Atom::zero(2));  // normal cone of the whole space
    out.push_back(small);

    json large = small;
    large["name"] = "exploding_scale";
    large["seed"] = 605;
    large["sweep"] = "exploding-scale";
    large["gammas"] = {1.0, 10.0, 100.0, 1000.0};
    large["limit"] = leaf(Atom::normal_cone(ConvexSet::singleton({0.0, 0.0})));  // zeros of the l1 subdifferential
    out.push_back(large);
    return out;
}

std::vector<json> repro_c7() {
    auto terms = [] {
        return std::vector<Expr::MixTerm>{
            {0.5, LinearMap(DenseMatrix::from_rows({{0.9, 0.1}, {-0.3, 0.6}})),
             eleaf(Atom::normal_cone(ConvexSet::box({-0.4, 0.0}, {0.6, 1.5})))},
            {1.2, LinearMap(DenseMatrix::from_rows({{0.5, -0.7}})), eleaf(Atom::subdiff_l1(0.8, 1))},
            {0.3, LinearMap(DenseMatrix::from_rows({{0.2, 0.4}, {1.0, 0.0}, {-0.6, 0.3}})),
             eleaf(Atom::linear_monotone(DenseMatrix::from_rows({{1.0, 0.4, 0.0}, {-0.4, 0.5, 0.1}, {0.0, -0.1, 0.3}})))}};
    };
    json c = base("mixture-check", "mixture_lifting", 707);
    c["cases"] = json::array({expr_to_json(Expr::mixture(0.9, terms())), expr_to_json(Expr::comixture(0.9, terms())),
                              expr_to_json(Expr::average(1.4, {{0.2, eleaf(Atom::scaled_identity(2.0, 2))},
                                                               {0.5, eleaf(Atom::subdiff_l1(0.3, 2))},
                                                               {0.3, eleaf(Atom::normal_cone(ConvexSet::ball({0.5, 0.0}, 1.0)))}}))});
    c["samples"] = 1000;
    return {c};
}

std::vector<json> repro_c8() {
    Expr cone = eleaf(Atom::normal_cone(ConvexSet::box({0.0}, {1.0})));
    Expr l1 = eleaf(Atom::subdiff_l1(0.5, 1));
    json cases = json::array();
    cases.push_back({{"name", "p2_cone_l1"}, {"expr", expr_to_json(Expr::chain(1.0, {cone, l1}))}});
    cases.push_back({{"name", "p2_l1_cone"}, {"expr", expr_to_json(Expr::chain(0.5, {l1, cone}))}});
    cases.push_back({{"name", "p3_cone_l1_cone"}, {"expr", expr_to_json(Expr::chain(1.0, {cone, l1, cone}))}});
    cases.push_back({{"name", "p3_l1_cone_l1"}, {"expr", expr_to_json(Expr::chain(0.7, {l1, cone, l1}))}});
    json c = base("oracle-check", "chain_vs_oracle", 808);
    c["cases"] = cases;
    c["probes"] = 8;
    c["radius"] = 2.0;
    return {c};
}

std::vector<json> repro_c9() {
    json cases = json::array();
    json id = matrix_to_json(DenseMatrix::identity(2));
    cases.push_back({{"name", "identity_map_identity_op"}, {"L", id}, {"B", leaf(Atom::scaled_identity(1.0, 2))},
                     {"gamma", 1.0}, {"x", {0.3, -0.5}}, {"xstar", {1.0, 0.2}}});
    cases.push_back({{"name", "origin"}, {"L", id}, {"B", leaf(Atom::scaled_identity(1.0, 2))}, {"gamma", 1.0},
                     {"x", {0.0, 0.0}}, {"xstar", {0.0, 0.0}}});
    const double r = 1.0 / std::sqrt(2.0);
    json iso = matrix_to_json(DenseMatrix::from_rows({{r, 0.0}, {r, 0.0}, {0.0, 1.0}}));
    cases.push_back({{"name", "isometry_scaled_identity"}, {"L", iso}, {"B", leaf(Atom::scaled_identity(2.0, 3))},
                     {"gamma", 0.7}, {"x", {0.4, 1.1}}, {"xstar", {-0.6, 0.3}}});
    cases.push_back({{"name", "isometry_cocompose"}, {"L", iso}, {"B", leaf(Atom::scaled_identity(0.5, 3))},
                     {"gamma", 1.5}, {"x", {0.2, -0.9}}, {"xstar", {0.8, 0.1}}, {"mode", "cocompose"}});
    Expr avg = Expr::average(1.0, {{0.3, eleaf(Atom::scaled_identity(1.0, 2))}, {0.7, eleaf(Atom::scaled_identity(3.0, 2))}});
    cases.push_back({{"name", "average_two_scaled_identities"}, {"average", expr_to_json(avg)}, {"x", {0.5, -0.2}},
                     {"xstar", {0.1, 0.9}}});
    json c = base("fitzpatrick", "fitzpatrick", 909);
    c["cases"] = cases;
    c["samples"] = 1000;
    return {c};
}

}  // namespace

std::vector<std::string> repro_ids() { return {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10"}; }

std::vector<json> repro_configs(const std::string& id) {
    if (id == "c1") return repro_c1();
    if (id == "c2") {
        json c = base("identity-suite", "identity_suite", 202);
        c["samples"] = 1000;
        return {c};
    }
    if (id == "c3") return repro_c3();
    if (id == "c4") return repro_c4();
    if (id == "c5") return repro_c5();
    if (id == "c6") return repro_c6();
    if (id == "c7") return repro_c7();
    if (id == "c8") return repro_c8();
    if (id == "c9") return repro_c9();
    if (id == "c10") return {};
    fail(ErrorKind::ConfigInvalid, "unknown criterion id '" + id + "'");
}

namespace {

std::vector<RunManifest> run_ids(const std::vector<std::string>& ids, const RunOptions& opts) {
    std::vector<RunManifest> all;
    for (const auto& id : ids) {
        RunOptions o = opts;
        o.out_dir = (fs::path(opts.out_dir) / id).string();
        for (const auto& cfg : repro_configs(id)) all.push_back(run_config(cfg, o));
    }
    return all;
}

std::vector<std::pair<std::string, std::string>> read_tree(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            files.emplace_back(fs::relative(e.path(), root).generic_string(), ss.str());
        }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

std::vector<RunManifest> run_repro(const std::string& id, const RunOptions& opts) {
    std::vector<std::string> base_ids = repro_ids();
    base_ids.pop_back();
    if (id == "all") return run_ids(base_ids, opts);
    if (id != "c10") return run_ids({id}, opts);
    // determinism: the whole tree twice, compared byte for byte
    const fs::path root = fs::path(opts.out_dir) / "c10";
    fs::remove_all(root / "run_a");
    fs::remove_all(root / "run_b");
    RunOptions a = opts, b = opts;
    a.out_dir = (root / "run_a").string();
    b.out_dir = (root / "run_b").string();
    run_ids(base_ids, a);
    run_ids(base_ids, b);
    auto ta = read_tree(root / "run_a"), tb = read_tree(root / "run_b");
    std::ostringstream os;
    os << "file,identical\n";
    bool same = ta.size() == tb.size();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        bool eq = i < tb.size() && ta[i] == tb[i];
        same = same && eq;
        os << ta[i].first << ',' << (eq ? "true" : "false") << '\n';
    }
    fs::create_directories(root);
    std::ofstream(root / "determinism.csv", std::ios::binary) << os.str();
    RunManifest m;
    m.name = "determinism";
    m.experiment = "determinism";
    m.status = same ? "ok" : "failed";
    m.outputs = {"determinism.csv"};
    std::ofstream(root / "determinism.manifest.json", std::ios::binary) << m.to_json().dump(2) << "\n";
    if (!same) fail(ErrorKind::ExperimentFailed, "repro trees differ");
    return {m};
}

}  // namespace rcomp
