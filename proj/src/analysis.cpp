#include "rcomp/analysis.hpp"

#include <algorithm>
#include <cstdio>

#include "rcomp/parallel.hpp"
#include "rcomp/rng.hpp"

namespace rcomp {

namespace {

std::uint64_t row_seed(std::uint64_t seed, std::size_t i) { return seed + static_cast<std::uint64_t>(i) * SplitMix64::kGolden; }

std::vector<Vector> ball_points(std::size_t dim, double radius, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> pts(n);
    for (auto& p : pts) p = rng.in_ball(dim, radius);
    return pts;
}

double graph_dist(const Vector& x, const Vector& xs, const Vector& gx, const Vector& gxs) {
    double a = dist(x, gx), b = dist(xs, gxs);
    return std::sqrt(a * a + b * b);
}

// distance from (x, x*) to gra D, minimizing over the Minty parameter of D at gamma = 1
double dist_to_graph(const Expr& d, const Vector& x, const Vector& xs, const GraphSample& dsample) {
    auto f = [&](const Vector& y) {
        Vector jy = resolvent(d, 1.0, y);
        return graph_dist(x, xs, jy, sub(y, jy));
    };
    Vector best = add(x, xs);
    double fb = f(best);
    for (std::size_t i = 0; i < dsample.size(); ++i) {
        double g = graph_dist(x, xs, dsample.x[i], dsample.xstar[i]);
        if (g < fb) {
            fb = g;
            best = dsample.y[i];
        }
    }
    double step = 0.25 * (1.0 + norm_inf(best));
    int iters = 0;
    while (step > 1e-10 * (1.0 + norm_inf(best)) && iters < 5000) {
        ++iters;
        bool moved = false;
        for (std::size_t j = 0; j < best.size() && !moved; ++j) {
            for (double sgn : {1.0, -1.0}) {
                Vector t = best;
                t[j] += sgn * step;
                double ft = f(t);
                if (ft < fb) {
                    fb = ft;
                    best = std::move(t);
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) step *= 0.5;
    }
    return fb;
}

// sup over sampled points of C_rho of their distance to gra D
double excess(const GraphSample& c, double rho, const Expr& d, const GraphSample& dsample, int threads) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (std::hypot(norm(c.x[i]), norm(c.xstar[i])) <= rho) keep.push_back(i);
    std::vector<double> out(keep.size(), 0.0);
    parallel_for(keep.size(), threads, [&](std::size_t k) {
        std::size_t i = keep[k];
        out[k] = dist_to_graph(d, c.x[i], c.xstar[i], dsample);
    });
    double e = 0.0;
    for (double v : out) e = std::max(e, v);
    return e;
}

const Atom* leaf_atom(const Expr& e) {
    const auto* leaf = std::get_if<LeafNode>(&e.node().v);
    return leaf ? &leaf->atom : nullptr;
}

// closed-form Fitzpatrick function of gamma*B for scaled-identity or zero atoms
std::optional<double> exact_fitzpatrick(const Expr& b, double gamma, const Vector& u, const Vector& us) {
    const Atom* a = leaf_atom(b);
    if (!a) return std::nullopt;
    if (const auto* si = std::get_if<ScaledIdentityAtom>(&a->variant()))
        return fitzpatrick_scaled_identity(gamma * si->alpha, u, us);
    if (std::holds_alternative<ZeroAtom>(a->variant())) return fitzpatrick_scaled_identity(0.0, u, us);
    return std::nullopt;
}

}  // namespace

GraphSample minty_sample(const Expr& a, double gamma, double radius, std::size_t n, std::uint64_t seed, int threads) {
    check_gamma(gamma, "minty_sample");
    if (n < 2) fail(ErrorKind::InvalidArgument, "minty_sample needs n >= 2");
    if (!(radius > 0.0)) fail(ErrorKind::InvalidArgument, "minty_sample radius must be positive");
    GraphSample s;
    s.gamma = gamma;
    s.radius = radius;
    s.seed = seed;
    s.y = ball_points(a.dim(), radius, n, seed);
    s.x.resize(n);
    s.xstar.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        s.x[i] = resolvent(a, gamma, s.y[i]);
        s.xstar[i] = scale(1.0 / gamma, sub(s.y[i], s.x[i]));
    });
    return s;
}

ModulusReport modulus_estimate(const GraphSample& s, const InnerProduct& ip, double eps_pair) {
    if (s.size() < 2) fail(ErrorKind::InvalidArgument, "modulus_estimate needs two points");
    ModulusReport r;
    r.inner_product = ip;
    r.beta_hat = INFINITY;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            Vector dx = sub(s.x[i], s.x[j]);
            double nn = weighted_dot(ip, dx, dx);
            if (std::sqrt(nn) <= eps_pair) {
                ++r.skipped;
                continue;
            }
            double q = weighted_dot(ip, dx, sub(s.xstar[i], s.xstar[j])) / nn;
            r.beta_hat = std::min(r.beta_hat, q);
            ++r.pair_count;
        }
    if (r.pair_count == 0)
        fail(ErrorKind::AllPairsDegenerate, "all " + std::to_string(r.skipped) + " pairs within eps_pair");
    return r;
}

ModulusReport modulus_estimate(const GraphSample& s, const InnerProduct& ip) {
    return modulus_estimate(s, ip, 1e-8 * s.radius);
}

double firm_nonexpansive_margin(const Expr& a, double gamma, double radius, std::size_t n, std::uint64_t seed) {
    auto pts = ball_points(a.dim(), radius, n, seed);
    std::vector<Vector> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = resolvent(a, gamma, pts[i]);
    double m = INFINITY;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            Vector dt = sub(t[i], t[j]);
            m = std::min(m, dot(dt, sub(pts[i], pts[j])) - dot(dt, dt));
        }
    return m;
}

double GapSample::max_gap() const {
    double m = 0.0;
    for (double g : gaps) m = std::max(m, g);
    return m;
}

GapSample gap_sample(const Expr& a1, const Expr& a2, double gamma, double delta, std::size_t n, std::uint64_t seed,
                     int threads) {
    check_gamma(gamma, "d_gamma_delta");
    if (a1.dim() != a2.dim()) fail(ErrorKind::DimensionMismatch, "d_gamma_delta operators on different spaces");
    if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "d_gamma_delta needs delta > 0");
    GapSample g;
    g.points = ball_points(a1.dim(), delta, n, seed);
    g.gaps.assign(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        g.gaps[i] = dist(resolvent(a1, gamma, g.points[i]), resolvent(a2, gamma, g.points[i]));
    });
    return g;
}

double d_gamma_delta(const Expr& a1, const Expr& a2, double gamma, double delta, std::size_t n, std::uint64_t seed,
                     int threads) {
    return gap_sample(a1, a2, gamma, delta, n, seed, threads).max_gap();
}

MetricRecord hausdorff_estimate(const Expr& a1, const Expr& a2, double rho, double gamma_probe, std::size_t n,
                                std::uint64_t seed, int threads) {
    if (!(rho > 0.0)) fail(ErrorKind::InvalidArgument, "hausdorff_estimate needs rho > 0");
    check_gamma(gamma_probe, "hausdorff_estimate");
    // |(x, x*)| <= rho forces |x + x*| <= sqrt(2) rho
    const double r = std::sqrt(2.0) * rho;
    GraphSample s1 = minty_sample(a1, 1.0, r, n, row_seed(seed, 0), threads);
    GraphSample s2 = minty_sample(a2, 1.0, r, n, row_seed(seed, 1), threads);
    GraphSample w1 = minty_sample(a1, 1.0, 2.0 * r, n, row_seed(seed, 2), threads);
    GraphSample w2 = minty_sample(a2, 1.0, 2.0 * r, n, row_seed(seed, 3), threads);
    MetricRecord m;
    m.gamma = gamma_probe;
    m.rho = rho;
    m.delta = (1.0 + gamma_probe) * rho;
    m.haus_lower = std::max(excess(s1, rho, a2, w2, threads), excess(s2, rho, a1, w1, threads));
    m.d = d_gamma_delta(a1, a2, gamma_probe, m.delta, n, row_seed(seed, 4), threads);
    m.haus_upper = std::max(1.0, 1.0 / gamma_probe) * m.d;
    return m;
}

double hausdorff_rho_for_delta(const Expr& a1, double gamma, double delta) {
    double t = delta + norm(resolvent(a1, gamma, zeros(a1.dim())));
    return std::max(t, t / gamma);
}

double fitzpatrick_scaled_identity(double c, const Vector& u, const Vector& ustar) {
    if (c == 0.0) return norm(ustar) == 0.0 ? 0.0 : INFINITY;
    Vector w = axpy(ustar, c, u);
    return dot(w, w) / (4.0 * c);
}

double fitzpatrick_inner(const Vector& x, const Vector& xstar, const Vector& y, const Vector& jy) {
    Vector r = sub(y, jy);
    return dot(x, r) + dot(jy, xstar) - dot(jy, r);
}

FitzpatrickReport fitzpatrick_check(const LinearMap& l, const Expr& b, double gamma, const Vector& x,
                                    const Vector& xstar, std::size_t n, std::uint64_t seed, double radius,
                                    FitzMode mode) {
    check_gamma(gamma, "fitzpatrick_check");
    if (x.size() != l.cols() || xstar.size() != l.cols() || b.dim() != l.rows())
        fail(ErrorKind::DimensionMismatch, "fitzpatrick_check dims");
    if (operator_norm(l) > 1.0 + 1e-12) fail(ErrorKind::InvalidArgument, "fitzpatrick_check needs ||L|| <= 1");
    const Vector& kv = mode == FitzMode::Compose ? x : xstar;
    double defect = dist(kv, apply_adjoint(l, rcomp::apply(l, kv)));
    if (defect > 1e-9 * (1.0 + norm(kv)))
        fail(ErrorKind::KernelViolation, "point off ker(Id - L^*L), defect " + std::to_string(defect));
    const Expr a = mode == FitzMode::Compose ? Expr::compose(l, gamma, b) : Expr::cocompose(l, gamma, b);
    const Vector lx = rcomp::apply(l, x), lxs = rcomp::apply(l, xstar);
    FitzpatrickReport rep;
    auto exact = exact_fitzpatrick(b, gamma, lx, lxs);
    if (exact) {
        rep.bound = *exact;
        rep.bound_exact = true;
    }
    rep.min_slack = INFINITY;
    rep.max_inner = -INFINITY;
    auto pts = ball_points(l.cols(), radius, n, seed);
    for (const auto& y : pts) {
        double phi = fitzpatrick_inner(x, xstar, y, resolvent(a, gamma, y));
        Vector ly = rcomp::apply(l, y);
        Vector jb = resolvent(b, gamma, ly);
        // same objective one level down, in G
        double psi = mode == FitzMode::Compose ? fitzpatrick_inner(lx, lxs, ly, jb)
                                               : fitzpatrick_inner(lxs, lx, ly, sub(ly, jb));
        double slack = psi - phi;
        if (exact) slack = std::min({slack, *exact - phi, *exact - psi});
        rep.min_slack = std::min(rep.min_slack, slack);
        rep.max_inner = std::max(rep.max_inner, phi);
        ++rep.samples;
    }
    return rep;
}

FitzpatrickReport fitzpatrick_average_check(const Expr& average, const Vector& x, const Vector& xstar,
                                            std::size_t n, std::uint64_t seed, double radius) {
    const auto* avg = std::get_if<AverageNode>(&average.node().v);
    if (!avg) fail(ErrorKind::InvalidArgument, "fitzpatrick_average_check needs an average node");
    const double g = avg->gamma;
    double bound = 0.0, inv = 0.0;
    for (const auto& t : avg->terms) {
        const Atom* a = leaf_atom(t.b);
        const auto* si = a ? std::get_if<ScaledIdentityAtom>(&a->variant()) : nullptr;
        if (!si) fail(ErrorKind::BoundUnavailable, "average check needs scaled-identity terms");
        bound += t.alpha * fitzpatrick_scaled_identity(g * si->alpha, x, xstar);
        inv += t.alpha / (1.0 + g * si->alpha);
    }
    // gamma times the average is c Id with 1/(1 + c) the averaged resolvent factor
    const double c = 1.0 / inv - 1.0;
    FitzpatrickReport rep;
    rep.bound = bound;
    rep.bound_exact = true;
    rep.min_slack = bound - fitzpatrick_scaled_identity(c, x, xstar);
    rep.max_inner = -INFINITY;
    auto pts = ball_points(x.size(), radius, n, seed);
    for (const auto& y : pts) {
        double phi = fitzpatrick_inner(x, xstar, y, resolvent(average, g, y));
        rep.min_slack = std::min(rep.min_slack, bound - phi);
        rep.max_inner = std::max(rep.max_inner, phi);
        ++rep.samples;
    }
    return rep;
}

std::string sweep_kind_name(SweepKind k) {
    switch (k) {
        case SweepKind::CocomposeLimit: return "cocompose-limit";
        case SweepKind::VanishingScale: return "vanishing-scale";
        case SweepKind::ExplodingScale: return "exploding-scale";
        case SweepKind::YosidaLimit: return "yosida-limit";
        case SweepKind::Perturbation: return "perturbation";
    }
    return "?";
}

SweepKind parse_sweep_kind(const std::string& s) {
    for (auto k : {SweepKind::CocomposeLimit, SweepKind::VanishingScale, SweepKind::ExplodingScale, SweepKind::YosidaLimit, SweepKind::Perturbation})
        if (sweep_kind_name(k) == s) return k;
    fail(ErrorKind::ConfigInvalid, "unknown sweep kind '" + s + "'");
}

double cocompose_limit_bound(double gamma, double rho, double delta, double eta) {
    if (!(gamma > 0.0 && gamma < 1.0)) return kNaN;
    const double s = 2.0 * rho + delta;
    const double a = gamma / (2.0 * (1.0 - gamma)) * s;
    return std::sqrt(a * a + gamma / (4.0 * (1.0 - gamma)) * eta * eta) + a;
}

namespace {

Expr link(const LinearMap& l, double g, const Expr& b, bool co) {
    return co ? Expr::cocompose(l, g, b) : Expr::compose(l, g, b);
}

// bound on |y| with x - p = L^* y and y in B(Lp), |x| <= 2 rho, |p| <= delta
double cocompose_limit_eta(const LinearMap& l, const Expr& b, double rho, double delta) {
    if (const Atom* a = leaf_atom(b)) {
        double r = a->range_bound();
        if (r >= 0.0) return r;
    }
    // S = L: S L^* = L L^* invertible gives |y| <= |(L L^*)^{-1}| |L| |x - p|
    DenseMatrix llt = matmul(l.matrix(), l.matrix().transpose());
    try {
        DenseMatrix inv = inverse(llt);
        return operator_norm(LinearMap(inv)) * operator_norm(l) * (2.0 * rho + delta);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Singular) throw;
    }
    fail(ErrorKind::BoundUnavailable, "ran(B o L) unbounded and L L^* singular");
}

}  // namespace

SweepReport gamma_sweep(const SweepSpec& sp) {
    if (sp.gammas.empty()) fail(ErrorKind::ConfigInvalid, "gamma grid is empty");
    for (double g : sp.gammas)
        if (!(g > 0.0) || !std::isfinite(g)) fail(ErrorKind::ConfigInvalid, "gamma grid entries must be positive");
    if (sp.gammas.size() > 1) {
        bool inc = sp.gammas[1] > sp.gammas[0];
        for (std::size_t i = 1; i < sp.gammas.size(); ++i)
            if ((sp.gammas[i] > sp.gammas[i - 1]) != inc || sp.gammas[i] == sp.gammas[i - 1])
                fail(ErrorKind::ConfigInvalid, "gamma grid must be strictly monotone");
    }
    if (!sp.b.valid()) fail(ErrorKind::ConfigInvalid, "sweep needs operator 'B'");
    SweepReport rep;
    rep.experiment = sweep_kind_name(sp.kind);
    rep.rows.resize(sp.gammas.size());

    // fixed pieces shared by all rows
    Expr limit;
    double delta = sp.delta, eta = kNaN;
    switch (sp.kind) {
        case SweepKind::CocomposeLimit: {
            if (operator_norm(sp.l) > 1.0 + 1e-12) fail(ErrorKind::ConfigInvalid, "cocompose-limit sweep needs ||L|| <= 1");
            limit = sp.limit.valid() ? sp.limit : Expr::standard_compose(sp.l, sp.b);
            if (const auto* sc = std::get_if<StandardComposeNode>(&limit.node().v); sc && sc->mu == 0.0)
                fail(ErrorKind::ConfigInvalid, "cocompose-limit sweep needs L L^* = mu Id or a declared limit");
            delta = 2.0 * sp.rho + norm(resolvent(limit, 1.0, zeros(limit.dim())));
            eta = cocompose_limit_eta(sp.l, sp.b, sp.rho, delta);
            break;
        }
        case SweepKind::VanishingScale:
        case SweepKind::ExplodingScale:
            if (!sp.limit.valid()) fail(ErrorKind::ConfigInvalid, "sweep needs the declared limit operator");
            limit = link(sp.l, 1.0, sp.limit, sp.cocompose);
            break;
        case SweepKind::YosidaLimit:
            limit = sp.b;
            break;
        case SweepKind::Perturbation:
            limit = link(sp.l, sp.base_gamma, sp.b, sp.cocompose);
            break;
    }

    parallel_for(sp.gammas.size(), sp.threads, [&](std::size_t i) {
        const double g = sp.gammas[i];
        SweepRow& row = rep.rows[i];
        row.m.gamma = g;
        row.m.rho = sp.rho;
        row.m.delta = delta;
        const std::uint64_t seed = row_seed(sp.seed, i);
        Expr a;
        double mgamma = sp.gamma_fixed;
        double radius = delta;
        switch (sp.kind) {
            case SweepKind::CocomposeLimit:
                a = Expr::cocompose(sp.l, g, sp.b);
                mgamma = 1.0;
                radius = 2.0 * sp.rho;
                row.y_bound = eta;
                row.bound = cocompose_limit_bound(g, sp.rho, delta, eta);
                break;
            case SweepKind::VanishingScale:
            case SweepKind::ExplodingScale:
                a = link(sp.l, 1.0, Expr::scale_left(g, sp.b), sp.cocompose);
                break;
            case SweepKind::YosidaLimit:
                a = Expr::yosida(sp.b, g);
                break;
            case SweepKind::Perturbation: {
                if (sp.constant) {
                    a = limit;
                    break;
                }
                const double t = std::abs(g - sp.base_gamma) / sp.base_gamma;
                a = link(LinearMap(mscale(1.0 / (1.0 + t), sp.l.matrix())), g, Expr::add_scaled_id(sp.b, t),
                         sp.cocompose);
                break;
            }
        }
        row.m.d = d_gamma_delta(a, limit, mgamma, radius, sp.samples, seed);
        if (sp.hausdorff) {
            MetricRecord h = hausdorff_estimate(a, limit, sp.rho, mgamma, sp.samples, seed ^ 0x5bd1e995ULL);
            row.m.haus_lower = h.haus_lower;
            row.m.haus_upper = h.haus_upper;
        }
    });
    return rep;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& os, const std::vector<MetricRecord>& rows) {
    os << "gamma,delta,rho,d,haus_lower,haus_upper,beta_hat\n";
    for (const auto& r : rows)
        os << format_double(r.gamma) << ',' << format_double(r.delta) << ',' << format_double(r.rho) << ','
           << format_double(r.d) << ',' << format_double(r.haus_lower) << ',' << format_double(r.haus_upper) << ','
           << format_double(r.beta_hat) << '\n';
}

void write_csv(std::ostream& os, const SweepReport& r) {
    std::vector<MetricRecord> rows;
    for (const auto& row : r.rows) rows.push_back(row.m);
    write_csv(os, rows);
}

}  // namespace rcomp
