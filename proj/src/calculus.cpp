#include "rcomp/calculus.hpp"

#include <cmath>

#include "rcomp/rng.hpp"

namespace rcomp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool same_gamma(double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(a, b); }

Vector inverse_resolvent(const Expr& a, double g, const Vector& x, const ReparamOptions& o) {
    // J_{g A^{-1}} x = x - g J_{A/g}(x/g)
    return axpy(x, -g, resolvent(a, 1.0 / g, scale(1.0 / g, x), o));
}

// Lx - J_{g B}(Lx) folded back through the adjoint
Vector co_step(const DenseMatrix& l, const DenseMatrix& adj, const Expr& b, double g, const Vector& x,
               const ReparamOptions& o) {
    Vector lx = matvec(l, x);
    return matvec(adj, sub(lx, resolvent(b, g, lx, o)));
}

Vector chain_resolvent(const ChainNode& n, const Vector& z, const ReparamOptions& o) {
    const std::size_t p = n.ops.size();
    const std::size_t k = n.ops.front().dim();
    auto zb = [&](std::size_t i) { return slice(z, i * k, k); };
    std::vector<Vector> x(p);
    x[0] = resolvent(n.ops[0], 1.0, zb(0), o);
    for (std::size_t i = 1; i + 1 < p; ++i) x[i] = resolvent(n.ops[i], 1.0, add(zb(i), sub(x[i - 1], zb(i - 1))), o);
    x[p - 1] = resolvent(n.ops[p - 1], 1.0, add(x[0], sub(x[p - 2], zb(p - 2))), o);
    Vector out = z;
    const double g2 = n.gamma * n.gamma;
    for (std::size_t i = 0; i + 1 < p; ++i)
        for (std::size_t j = 0; j < k; ++j) out[i * k + j] += g2 * (x[i + 1][j] - x[i][j]);
    return out;
}

Vector native_resolvent(const Expr& e, const Vector& x, const ReparamOptions& o) {
    return std::visit(
        overloaded{
            [&](const ComposeNode& n) {
                return apply_adjoint(n.l, resolvent(n.b, n.gamma, rcomp::apply(n.l, x), o));
            },
            [&](const CocomposeNode& n) {
                return sub(x, co_step(n.l.matrix(), n.l.matrix().transpose(), n.b, n.gamma, x, o));
            },
            [&](const MixtureNode& n) {
                Vector r = zeros(x.size());
                for (const auto& t : n.terms)
                    r = axpy(r, t.alpha, apply_adjoint(t.l, resolvent(t.b, n.gamma, rcomp::apply(t.l, x), o)));
                return r;
            },
            [&](const ComixtureNode& n) {
                Vector r = x;
                for (const auto& t : n.terms)
                    r = axpy(r, -t.alpha, co_step(t.l.matrix(), t.l.matrix().transpose(), t.b, n.gamma, x, o));
                return r;
            },
            [&](const AverageNode& n) {
                Vector r = zeros(x.size());
                for (const auto& t : n.terms) r = axpy(r, t.alpha, resolvent(t.b, n.gamma, x, o));
                return r;
            },
            [&](const DouglasRachfordNode& n) {
                // L^* J_B(x, -x) with J_B(u, v) = (J_{A1} u, J_{A2^{-1}}(v + 2 J_{A1} u))
                Vector a = resolvent(n.a1, 1.0, x, o);
                Vector b = inverse_resolvent(n.a2, 1.0, axpy(scale(-1.0, x), 2.0, a), o);
                return sub(a, b);
            },
            [&](const ChainNode& n) { return chain_resolvent(n, x, o); },
            [&](const WeightedComposeNode& n) {
                Vector lx = rcomp::apply(n.l, x);
                Vector j = resolvent(n.b, n.gamma, lx, o);
                if (n.mode == Expr::WeightedMode::Plain) return matvec(n.pinv, j);
                return sub(x, matvec(n.pinv, sub(lx, j)));
            },
            [&](const PsiLiftNode& n) {
                return sub(x, co_step(n.lifted.matrix(), n.lifted.matrix().transpose(), n.b, n.gamma, x, o));
            },
            [&](const auto&) -> Vector { fail(ErrorKind::InvalidArgument, "node has no native parameter"); }},
        e.node().v);
}

}  // namespace

Vector resolvent(const Expr& e, double g, const Vector& x, const ReparamOptions& o) {
    check_gamma(g, "resolvent");
    if (x.size() != e.dim())
        fail(ErrorKind::DimensionMismatch, "resolvent of " + e.kind() + ": point dim " + std::to_string(x.size()) +
                                               ", operator dim " + std::to_string(e.dim()));
    if (auto g0 = e.native_gamma()) {
        if (same_gamma(*g0, g)) return native_resolvent(e, x, o);
        return reparam_resolvent([&](const Vector& y) { return native_resolvent(e, y, o); }, *g0, g, x, o);
    }
    return std::visit(
        overloaded{
            [&](const LeafNode& n) { return atom_resolvent(n.atom, g, x); },
            [&](const InverseNode& n) { return inverse_resolvent(n.arg, g, x, o); },
            [&](const ScaleLeftNode& n) { return resolvent(n.arg, g * n.rho, x, o); },
            [&](const ScaleRightNode& n) { return scale(1.0 / n.rho, resolvent(n.arg, g * n.rho, scale(n.rho, x), o)); },
            [&](const TranslateOutNode& n) { return resolvent(n.arg, g, axpy(x, g, n.z), o); },
            [&](const TranslateInNode& n) { return add(n.w, resolvent(n.arg, g, sub(x, n.w), o)); },
            [&](const AddScaledIdNode& n) {
                double s = 1.0 + g * n.rho;
                return resolvent(n.arg, g / s, scale(1.0 / s, x), o);
            },
            [&](const YosidaNode& n) {
                // Inverse(AddScaledId(Inverse(A), lambda)) unrolled
                double beta = 1.0 / g;
                double s = 1.0 + beta * n.lambda;
                double beta2 = beta / s;
                Vector w = scale(1.0 / (g * s), x);
                Vector inner = axpy(w, -beta2, resolvent(n.arg, 1.0 / beta2, scale(1.0 / beta2, w), o));
                return axpy(x, -g, inner);
            },
            [&](const ProductNode& n) {
                Vector r;
                r.reserve(x.size());
                std::size_t off = 0;
                for (const auto& b : n.blocks) {
                    Vector rb = resolvent(b, g, slice(x, off, b.dim()), o);
                    r.insert(r.end(), rb.begin(), rb.end());
                    off += b.dim();
                }
                return r;
            },
            [&](const ParallelComposeNode& n) {
                if (!n.l.is_coisometry())
                    fail(ErrorKind::NotCoisometry, "parallel_compose resolvent needs a coisometry");
                return apply_adjoint(n.l, resolvent(n.b, g, rcomp::apply(n.l, x), o));
            },
            [&](const StandardComposeNode& n) {
                if (n.mu == 0.0) fail(ErrorKind::NotCoisometry, "standard_compose resolvent needs L L^* = mu Id");
                Vector lx = rcomp::apply(n.l, x);
                return axpy(x, -1.0 / n.mu, apply_adjoint(n.l, sub(lx, resolvent(n.b, n.mu * g, lx, o))));
            },
            [&](const auto&) -> Vector { fail(ErrorKind::InvalidArgument, "unhandled node " + e.kind()); }},
        e.node().v);
}

Vector yosida_value(const Expr& e, double g, const Vector& x, const ReparamOptions& o) {
    return scale(1.0 / g, sub(x, resolvent(e, g, x, o)));
}

Vector reparam_resolvent(const NativeResolvent& native, double g0, double mu, const Vector& x,
                         const ReparamOptions& o) {
    check_gamma(mu, "reparam_resolvent");
    if (same_gamma(g0, mu)) return native(x);
    const bool direct = mu > g0 / 2.0;
    const double c = direct ? std::abs(1.0 - g0 / mu) : 1.0 - mu / g0;
    // a-posteriori bound: error <= c/(1-c) * step
    const double factor = std::max(1.0, c / (1.0 - c));
    Vector p = direct ? native(x) : x;
    for (int it = 0; it < o.max_iter; ++it) {
        Vector next = direct ? native(axpy(scale(g0 / mu, x), 1.0 - g0 / mu, p))
                             : axpy(x, 1.0 - mu / g0, sub(p, native(p)));
        double step = dist(next, p);
        p = std::move(next);
        if (step * factor <= o.tol) return direct ? p : native(p);
    }
    fail(ErrorKind::ReparamDivergence, "no convergence from gamma0=" + std::to_string(g0) + " to mu=" +
                                           std::to_string(mu) + " in " + std::to_string(o.max_iter) + " iterations");
}

Expr lift_mixture(const Expr& e) {
    auto lift = [](double gamma, const std::vector<Expr::MixTerm>& terms, bool co) {
        DenseMatrix stacked;
        std::vector<Expr> blocks;
        for (const auto& t : terms) {
            double r = std::sqrt(t.alpha);
            DenseMatrix part = mscale(r, t.l.matrix());
            stacked = stacked.rows() == 0 ? part : vcat(stacked, part);
            blocks.push_back(Expr::scale_left(r, Expr::scale_right(t.b, 1.0 / r)));
        }
        LinearMap l(std::move(stacked));
        Expr b = Expr::product(std::move(blocks));
        return co ? Expr::cocompose(std::move(l), gamma, std::move(b)) : Expr::compose(std::move(l), gamma, std::move(b));
    };
    return std::visit(overloaded{[&](const MixtureNode& n) { return lift(n.gamma, n.terms, false); },
                                 [&](const ComixtureNode& n) { return lift(n.gamma, n.terms, true); },
                                 [&](const AverageNode& n) {
                                     std::vector<Expr::MixTerm> terms;
                                     for (const auto& t : n.terms)
                                         terms.push_back({t.alpha, LinearMap::identity(t.b.dim()), t.b});
                                     return lift(n.gamma, terms, false);
                                 },
                                 [&](const auto&) -> Expr {
                                     fail(ErrorKind::InvalidArgument, "lift_mixture needs a mixture-type node");
                                 }},
                      e.node().v);
}

ParallelCheckReport parallel_composition_check(const LinearMap& l, const Expr& b, double gamma,
                                               std::size_t samples, std::uint64_t seed, double radius) {
    check_gamma(gamma, "parallel_composition_check");
    const auto* leaf = std::get_if<LeafNode>(&b.node().v);
    if (!leaf) fail(ErrorKind::InvalidArgument, "parallel_composition_check needs an atom B");
    if (l.rows() != b.dim()) fail(ErrorKind::DimensionMismatch, "parallel_composition_check L rows vs B");
    const DenseMatrix& m = l.matrix();
    DenseMatrix psi = msub(DenseMatrix::identity(m.rows()), matmul(m, m.transpose()));
    Rng rng(seed);
    ParallelCheckReport rep;
    for (std::size_t i = 0; i < samples; ++i) {
        Vector y = rng.in_ball(l.cols(), radius);
        Vector v = atom_resolvent(leaf->atom, gamma, rcomp::apply(l, y));
        Vector p = apply_adjoint(l, v);
        Vector ps = scale(1.0 / gamma, sub(y, p));
        // (p, p*) in gra L^* |> C iff p = L^* v and L p* in C v, C = B + Psi/gamma
        Vector vs = axpy(rcomp::apply(l, ps), -1.0 / gamma, matvec(psi, v));
        double r = dist(p, apply_adjoint(l, v)) + inclusion_residual(leaf->atom, v, vs);
        rep.max_residual = std::max(rep.max_residual, r);
        ++rep.samples;
    }
    return rep;
}

std::pair<Expr, Expr> coisometry_collapse(const LinearMap& l, const Expr& b, double gamma) {
    check_gamma(gamma, "coisometry_collapse");
    if (!l.is_coisometry())
        fail(ErrorKind::NotCoisometry, "||L L^* - I||_max = " + std::to_string(l.coisometry_defect()));
    return {Expr::parallel_compose(l, b), Expr::standard_compose(l, b)};
}

}  // namespace rcomp
