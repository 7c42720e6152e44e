// Acceptance gate: runs `rcomp repro all` twice through the CLI, checks each criterion
// against tolerances and test-side closed forms, and prints one line per criterion.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include <json.hpp>

#include "rcomp/experiments.hpp"
#include "rcomp/rng.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using testutil::Csv;
using testutil::read_csv;

namespace {

const fs::path kRoot = "acceptance_out";

struct Outcome {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
double soft(double v, double t) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); }

using Vec = std::vector<double>;
using Map = std::vector<Vec>;  // rows

Vec mv(const Map& l, const Vec& x) {
    Vec y(l.size(), 0.0);
    for (std::size_t i = 0; i < l.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += l[i][j] * x[j];
    return y;
}
Vec mtv(const Map& l, const Vec& y, std::size_t n) {
    Vec x(n, 0.0);
    for (std::size_t i = 0; i < l.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) x[j] += l[i][j] * y[i];
    return x;
}

// criterion 1: closed forms of the four atoms and the two resolvent formulas, written out here
Vec expected_c1(const std::string& name, double g, const Vec& x) {
    const double r = 1.0 / std::sqrt(2.0);
    bool co = name.rfind("co_", 0) == 0;
    std::string rest = co ? name.substr(3) : name;
    Map l;
    if (rest.rfind("id_", 0) == 0) l = {{1, 0}, {0, 1}};
    else if (rest.rfind("half_id_", 0) == 0) l = {{r, 0}, {0, r}};
    else l = {{r, r}};
    std::function<double(double)> jb;
    if (rest.find("zero") != std::string::npos) jb = [](double v) { return v; };
    else if (rest.find("scaled_identity") != std::string::npos) jb = [g](double v) { return v / (1.0 + 2.0 * g); };
    else if (rest.find("box_cone") != std::string::npos) jb = [](double v) { return clamp(v, -0.5, 1.0); };
    else jb = [g](double v) { return soft(v, 0.5 * g); };
    Vec lx = mv(l, x), j(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) j[i] = co ? lx[i] - jb(lx[i]) : jb(lx[i]);
    Vec back = mtv(l, j, x.size());
    if (!co) return back;
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - back[i];
    return out;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

double vmax(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Outcome check_c1() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c1/resolvent_vs_oracle.csv");
    o.require(c.rows.size() == 24 * 20, "expected 24 cases x 20 probes, got " + std::to_string(c.rows.size()));
    double worst = 0.0, closed = 0.0;
    for (std::size_t i = 0; i < c.rows.size(); ++i) worst = std::max(worst, c.num(i, "max_abs_diff"));
    // closed forms against the library on fresh probes, for the same case list
    for (const auto& cfg : rcomp::repro_configs("c1"))
        for (const auto& cj : cfg["cases"]) {
            rcomp::Expr e = rcomp::expr_from_json(cj["expr"]);
            double g = *e.native_gamma();
            rcomp::Rng rng(17);
            for (int k = 0; k < 20; ++k) {
                Vec x = rng.in_ball(2, 3.0);
                closed = std::max(closed, vmax(rcomp::resolvent(e, g, x), expected_c1(cj["name"], g, x)));
            }
        }
    o.require(worst <= 1e-5, "oracle gap " + sci(worst));
    o.require(closed <= 1e-12, "closed-form gap " + std::to_string(closed));
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |resolvent - oracle| = %.2e (tol 1e-5), closed forms %.2e", worst, closed);
    if (o.ok) o.detail = buf;
    return o;
}

Outcome check_c2() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c2/identity_suite.csv");
    o.require(c.rows.size() >= 6, "too few identities");
    double worst = 0.0;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        worst = std::max(worst, c.num(i, "max_residual"));
        o.require(c.num(i, "samples") >= 1000, c.rows[i]["identity"] + " has fewer than 1000 samples");
    }
    o.require(worst <= 1e-9, "residual " + sci(worst));
    if (o.ok) o.detail = std::to_string(c.rows.size()) + " identities, max residual " + sci(worst);
    return o;
}

Outcome check_c3() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c3/monotonicity.csv");
    std::size_t grid = 0;
    double worst_beta = 0.0, worst_fne = INFINITY;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        worst_fne = std::min(worst_fne, c.num(i, "fne_margin"));
        o.require(c.num(i, "pairs") + c.num(i, "skipped") >= 1e4, "fewer than 1e4 pairs");
        o.require(c.num(i, "beta_hat") >= -1e-9, c.rows[i]["case"] + " not monotone");
        double a, g, s;
        if (std::sscanf(c.rows[i]["case"].c_str(), "a%lf_g%lf_s%lf", &a, &g, &s) == 3) {
            ++grid;
            double beta = (a + 1.0 / g) / (s * s) - 1.0 / g;
            worst_beta = std::max(worst_beta, std::abs(c.num(i, "beta_hat") - beta));
        }
    }
    o.require(grid == 27, "grid is not 3x3x3");
    o.require(worst_fne >= -1e-10, "fne margin " + std::to_string(worst_fne));
    o.require(worst_beta <= 1e-6, "beta gap " + std::to_string(worst_beta));
    char buf[128];
    std::snprintf(buf, sizeof buf, "min fne margin %.2e, max |beta_hat - beta| %.2e over 27 grid points", worst_fne,
                  worst_beta);
    if (o.ok) o.detail = buf;
    return o;
}

Outcome check_c4() {
    Outcome o;
    double worst = 0.0;
    for (const char* f : {"dr_box_identity.csv", "dr_point_zero.csv"}) {
        Csv c = read_csv(kRoot / "run_a/c4" / f);
        o.require(c.rows.size() == 1 && c.num(0, "samples") >= 1000, std::string(f) + " malformed");
        if (!c.rows.empty()) worst = std::max(worst, c.num(0, "max_abs_diff"));
    }
    // reflection formula with hand-written atom resolvents
    using rcomp::Atom;
    using rcomp::ConvexSet;
    using rcomp::Expr;
    Expr d1 = Expr::douglas_rachford(Expr::leaf(Atom::normal_cone(ConvexSet::box({0.0}, {1.0}))),
                                     Expr::leaf(Atom::scaled_identity(1.0, 1)));
    Expr d2 = Expr::douglas_rachford(Expr::leaf(Atom::normal_cone(ConvexSet::singleton({0.0}))),
                                     Expr::leaf(Atom::zero(1)));
    for (int k = 0; k <= 1000; ++k) {
        double x = -5.0 + 0.01 * k;
        double r1 = 2.0 * clamp(x, 0.0, 1.0) - x;
        double f1 = 0.5 * x + 0.5 * (2.0 * (r1 / 2.0) - r1);
        double f2 = 0.5 * x + 0.5 * (-x);
        worst = std::max(worst, std::abs(rcomp::resolvent(d1, 1.0, {x})[0] - f1));
        worst = std::max(worst, std::abs(rcomp::resolvent(d2, 1.0, {x})[0] - f2));
    }
    o.require(worst <= 1e-12, "gap " + sci(worst));
    if (o.ok) o.detail = "max gap to reflection formula " + sci(worst);
    return o;
}

Outcome check_c5() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c5/yosida_example.csv");
    o.require(c.rows.size() == 1, "expected one row");
    if (!o.ok) return o;
    const double g = 1.0, want = (3.0 + 3.0 * g) / (3.0 + 4.0 * g);
    double res = std::stod(c.rows[0]["resolvent"]), orc = std::stod(c.rows[0]["oracle"]);
    o.require(std::abs(want - 6.0 / 7.0) < 1e-15, "hand algebra");
    o.require(std::abs(res - want) <= 1e-10, "resolvent " + std::to_string(res));
    o.require(std::abs(orc - want) <= 1e-10, "oracle " + std::to_string(orc));
    char buf[128];
    std::snprintf(buf, sizeof buf, "resolvent %.15f, oracle %.15f, closed form 6/7", res, orc);
    if (o.ok) o.detail = buf;
    return o;
}

Outcome check_c6() {
    Outcome o;
    Csv y = read_csv(kRoot / "run_a/c6/yosida_limit.csv");
    o.require(y.rows.size() == 4, "yosida sweep rows");
    for (std::size_t i = 1; i < y.rows.size(); ++i) o.require(y.num(i, "d") < y.num(i - 1, "d"), "not decreasing");
    if (!y.rows.empty()) o.require(y.num(y.rows.size() - 1, "d") <= 0.05, "final yosida gap too large");
    // closed form: the gap |x| gamma/(1+gamma) on x < 0 peaks at x = -2, so d_{1,2} = 2 gamma/(1+gamma)
    for (std::size_t i = 0; i < y.rows.size(); ++i) {
        double g = y.num(i, "gamma"), exact = 2.0 * g / (1.0 + g), d = y.num(i, "d");
        o.require(d <= exact + 1e-12 && d >= 0.95 * exact, "yosida gap off its closed form");
    }

    auto rep = nlohmann::json::parse(testutil::slurp(kRoot / "run_a/c6/cocompose_limit.json"));
    // L = 0.8 R, L L^T = 0.64 Id, J_{L^*BL} 0 = 0: delta = 2 rho, eta = |(LL^T)^{-1}| |L| (2 rho + delta)
    const double rho = 1.0, delta = 2.0 * rho, eta = (1.0 / 0.64) * 0.8 * (2.0 * rho + delta);
    std::size_t checked = 0;
    for (const auto& r : rep["rows"]) {
        double g = r["gamma"];
        if (g > 0.5) continue;
        double a = g / (2.0 * (1.0 - g)) * (2.0 * rho + delta);
        double bound = std::sqrt(a * a + g / (4.0 * (1.0 - g)) * eta * eta) + a;
        o.require(std::abs(double(r["bound"]) - bound) <= 1e-9 * bound, "bound mismatch");
        o.require(double(r["d"]) <= bound + 1e-6, "bound violated");
        ++checked;
    }
    o.require(checked >= 3, "too few cocompose-limit rows");
    Csv v = read_csv(kRoot / "run_a/c6/vanishing_scale.csv"), e = read_csv(kRoot / "run_a/c6/exploding_scale.csv");
    o.require(!v.rows.empty() && v.num(v.rows.size() - 1, "d") <= 0.02, "vanishing-scale gap");
    o.require(!e.rows.empty() && e.num(e.rows.size() - 1, "d") <= 0.02, "exploding-scale gap");
    char buf[160];
    if (o.ok) {
        std::snprintf(buf, sizeof buf, "yosida final %.3g, bound holds at %zu rows, scale limits %.3g / %.3g",
                      y.num(3, "d"), checked, v.num(v.rows.size() - 1, "d"), e.num(e.rows.size() - 1, "d"));
        o.detail = buf;
    }
    return o;
}

Outcome check_c7() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c7/mixture_lifting.csv");
    o.require(c.rows.size() == 3, "expected mixture, comixture, average");
    double worst = 0.0;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        worst = std::max(worst, c.num(i, "max_abs_diff"));
        o.require(c.num(i, "samples") >= 1000, "samples");
    }
    for (const auto& cfg : rcomp::repro_configs("c7"))
        for (const auto& e : cfg["cases"]) o.require(e["terms"].size() == 3, "p != 3");
    o.require(worst <= 1e-10, "gap " + sci(worst));
    if (o.ok) o.detail = "max direct vs lifted gap " + sci(worst);
    return o;
}

Outcome check_c8() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c8/chain_vs_oracle.csv");
    double worst = 0.0;
    bool p2 = false, p3 = false;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        worst = std::max(worst, c.num(i, "max_abs_diff"));
        p2 = p2 || c.rows[i]["case"].rfind("p2", 0) == 0;
        p3 = p3 || c.rows[i]["case"].rfind("p3", 0) == 0;
    }
    o.require(p2 && p3, "missing p = 2 or p = 3");
    o.require(worst <= 1e-5, "gap " + sci(worst));
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |chain - oracle| = %.2e over %zu probes", worst, c.rows.size());
    if (o.ok) o.detail = buf;
    return o;
}

Outcome check_c9() {
    Outcome o;
    Csv c = read_csv(kRoot / "run_a/c9/fitzpatrick.csv");
    double worst = INFINITY;
    for (std::size_t i = 0; i < c.rows.size(); ++i) worst = std::min(worst, c.num(i, "min_slack"));
    o.require(worst >= -1e-8, "slack " + sci(worst));
    auto row = [&](const std::string& n) -> std::size_t {
        for (std::size_t i = 0; i < c.rows.size(); ++i)
            if (c.rows[i]["case"] == n) return i;
        return c.rows.size();
    };
    // F of Id at (u, u*) = |u + u*|^2 / 4 by completing the square
    std::size_t k = row("identity_map_identity_op");
    o.require(k < c.rows.size() && std::abs(c.num(k, "bound") - (1.3 * 1.3 + 0.3 * 0.3) / 4.0) <= 1e-12,
              "identity closed form");
    k = row("origin");
    o.require(k < c.rows.size() && c.num(k, "bound") == 0.0, "origin bound");
    // average of a = 1 and a = 3 with weights 0.3, 0.7: resolvent average is c Id with 1/(1+c) = 0.3/2 + 0.7/4
    k = row("average_two_scaled_identities");
    if (k < c.rows.size()) {
        const double x0 = 0.5, x1 = -0.2, s0 = 0.1, s1 = 0.9;
        auto fid = [&](double a) { return ((s0 + a * x0) * (s0 + a * x0) + (s1 + a * x1) * (s1 + a * x1)) / (4 * a); };
        double cav = 1.0 / (0.3 / 2.0 + 0.7 / 4.0) - 1.0;
        double rhs = 0.3 * fid(1.0) + 0.7 * fid(3.0);
        o.require(std::abs(c.num(k, "bound") - rhs) <= 1e-12, "average right side");
        o.require(fid(cav) <= rhs, "average corollary fails in closed form");
        o.require(c.num(k, "max_inner") <= fid(cav) + 1e-8, "sampled F above closed form");
    } else {
        o.require(false, "average case missing");
    }
    if (o.ok) o.detail = "min slack " + sci(worst) + ", closed forms match";
    return o;
}

Outcome check_c10(bool trees_equal, std::size_t files) {
    Outcome o;
    o.require(files > 0, "empty output tree");
    o.require(trees_equal, "trees differ");
    if (o.ok) o.detail = std::to_string(files) + " files byte-identical";
    return o;
}

std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).generic_string(), testutil::slurp(e.path()));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

int main() {
    fs::remove_all(kRoot);
    const std::string cli = RCOMP_CLI_PATH;
    int rc_a = testutil::run("\"" + cli + "\" repro all --out " + (kRoot / "run_a").string() + " > /dev/null");
    int rc_b = testutil::run("\"" + cli + "\" repro all --out " + (kRoot / "run_b").string() + " > /dev/null");
    auto ta = tree(kRoot / "run_a"), tb = tree(kRoot / "run_b");

    const char* names[] = {"resolvent formulas match the inclusion oracle",
                           "operator identity suite",
                           "monotonicity and strong monotonicity modulus",
                           "Douglas-Rachford resolvent equals reflection formula",
                           "Yosida example closed form",
                           "convergence sweeps",
                           "mixture direct vs product-space lifting",
                           "chain operator matches the inclusion oracle",
                           "Fitzpatrick inequalities",
                           "determinism of repro all"};
    std::vector<std::function<Outcome()>> checks = {check_c1, check_c2, check_c3, check_c4, check_c5,
                                                    check_c6, check_c7, check_c8, check_c9,
                                                    [&] { return check_c10(ta == tb, ta.size()); }};
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Outcome o;
        if (rc_a != 0 && i < 9) {
            o.ok = false;
            o.detail = "repro all exited with " + std::to_string(rc_a);
        } else {
            try {
                o = checks[i]();
            } catch (const std::exception& e) {
                o.ok = false;
                o.detail = e.what();
            }
        }
        if (i == 9 && rc_b != 0) o = {false, "second run exited with " + std::to_string(rc_b)};
        std::cout << "[" << (i + 1) << "] " << names[i] << ": " << (o.ok ? "PASS" : "FAIL") << " (" << o.detail
                  << ")\n";
        failed += o.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
