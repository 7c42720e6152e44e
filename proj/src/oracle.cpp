#include "rcomp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

namespace rcomp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Definitional form of an operator: graph membership through atom residuals and
// the composition definitions, with witnesses v supplied as auxiliary variables.
struct Def {
    enum Kind { AtomK, AffineK, ComposeK, CocomposeK, ParallelK, StandardK, ProductK, DrbK, ChainBK };
    Kind kind = AtomK;
    std::size_t dim = 0;
    std::size_t aux = 0;  // aux variables of the whole subtree
    std::size_t vdim = 0;
    std::optional<Atom> atom;
    // affine: (x, x*) -> (a x + b x* + c, d x + e x* + f)
    double a = 1, b = 0, d = 0, e = 1;
    Vector c, f;
    DenseMatrix m, madj;
    double g0 = 1.0;
    double cg = 1.0;  // chain scale
    std::size_t p = 0, k = 0;
    std::vector<Def> kids;
};

Def make_atom(const Atom& a) {
    Def d;
    d.kind = Def::AtomK;
    d.dim = a.dim();
    d.atom = a;
    return d;
}

Def make_affine(Def child, double a, double b, double dd, double e, Vector c, Vector f) {
    Def d;
    d.kind = Def::AffineK;
    d.dim = child.dim;
    d.aux = child.aux;
    d.a = a;
    d.b = b;
    d.d = dd;
    d.e = e;
    d.c = c.empty() ? zeros(child.dim) : std::move(c);
    d.f = f.empty() ? zeros(child.dim) : std::move(f);
    d.kids.push_back(std::move(child));
    return d;
}

Def make_link(Def::Kind kind, const DenseMatrix& m, const DenseMatrix& madj, double g0, Def child) {
    Def d;
    d.kind = kind;
    d.dim = m.cols();
    d.vdim = m.rows();
    d.aux = d.vdim + child.aux;
    d.m = m;
    d.madj = madj;
    d.g0 = g0;
    d.kids.push_back(std::move(child));
    return d;
}

Def make_product(std::vector<Def> kids) {
    Def d;
    d.kind = Def::ProductK;
    for (const auto& k : kids) {
        d.dim += k.dim;
        d.aux += k.aux;
    }
    d.kids = std::move(kids);
    return d;
}

Def compile(const Expr& e);

Def compile_mix(double gamma, const std::vector<Expr::MixTerm>& terms, bool co) {
    // lifted L = (sqrt(a_k) L_k), B = x_k sqrt(a_k) B_k(. / sqrt(a_k))
    DenseMatrix stacked;
    std::vector<Def> blocks;
    for (const auto& t : terms) {
        double r = std::sqrt(t.alpha);
        DenseMatrix part = mscale(r, t.l.matrix());
        stacked = stacked.rows() == 0 ? part : vcat(stacked, part);
        // (y, y*) in gra r B(. / r)  iff  (y / r, y* / r) in gra B
        blocks.push_back(make_affine(compile(t.b), 1.0 / r, 0.0, 0.0, 1.0 / r, {}, {}));
    }
    return make_link(co ? Def::CocomposeK : Def::ComposeK, stacked, stacked.transpose(), gamma,
                     make_product(std::move(blocks)));
}

Def compile(const Expr& ex) {
    return std::visit(
        overloaded{
            [](const LeafNode& n) { return make_atom(n.atom); },
            [](const InverseNode& n) { return make_affine(compile(n.arg), 0, 1, 1, 0, {}, {}); },
            [](const ScaleLeftNode& n) { return make_affine(compile(n.arg), 1, 0, 0, 1.0 / n.rho, {}, {}); },
            [](const ScaleRightNode& n) { return make_affine(compile(n.arg), n.rho, 0, 0, 1, {}, {}); },
            [](const TranslateOutNode& n) { return make_affine(compile(n.arg), 1, 0, 0, 1, {}, n.z); },
            [](const TranslateInNode& n) { return make_affine(compile(n.arg), 1, 0, 0, 1, scale(-1.0, n.w), {}); },
            [](const AddScaledIdNode& n) { return make_affine(compile(n.arg), 1, 0, -n.rho, 1, {}, {}); },
            // (A^{-1} + lambda Id)^{-1}: (x, x*) in gra iff (x - lambda x*, x*) in gra A
            [](const YosidaNode& n) { return make_affine(compile(n.arg), 1, -n.lambda, 0, 1, {}, {}); },
            [](const ComposeNode& n) {
                return make_link(Def::ComposeK, n.l.matrix(), n.l.matrix().transpose(), n.gamma, compile(n.b));
            },
            [](const CocomposeNode& n) {
                return make_link(Def::CocomposeK, n.l.matrix(), n.l.matrix().transpose(), n.gamma, compile(n.b));
            },
            [](const MixtureNode& n) { return compile_mix(n.gamma, n.terms, false); },
            [](const ComixtureNode& n) { return compile_mix(n.gamma, n.terms, true); },
            [](const AverageNode& n) {
                std::vector<Expr::MixTerm> terms;
                for (const auto& t : n.terms) terms.push_back({t.alpha, LinearMap::identity(t.b.dim()), t.b});
                return compile_mix(n.gamma, terms, false);
            },
            [](const DouglasRachfordNode& n) {
                const std::size_t k = n.a1.dim();
                DenseMatrix l = vcat(DenseMatrix::identity(k), mscale(-1.0, DenseMatrix::identity(k)));
                Def drb;
                drb.kind = Def::DrbK;
                drb.dim = 2 * k;
                drb.kids.push_back(compile(n.a1));
                drb.kids.push_back(compile(n.a2));
                drb.aux = drb.kids[0].aux + drb.kids[1].aux;
                return make_link(Def::ComposeK, l, l.transpose(), 1.0, std::move(drb));
            },
            [](const ChainNode& n) {
                Def cb;
                cb.kind = Def::ChainBK;
                cb.p = n.ops.size();
                cb.k = n.ops.front().dim();
                cb.dim = cb.p * cb.k;
                cb.cg = n.gamma;
                for (const auto& a : n.ops) {
                    cb.kids.push_back(compile(a));
                    cb.aux += cb.kids.back().aux;
                }
                // (gamma L) cocomposed at gamma with B^{-1}
                DenseMatrix gl = mscale(n.gamma, n.l.matrix());
                return make_link(Def::CocomposeK, gl, gl.transpose(), n.gamma,
                                 make_affine(std::move(cb), 0, 1, 1, 0, {}, {}));
            },
            [](const WeightedComposeNode& n) {
                // adjoint of L in the weighted space is the pseudo-inverse
                auto kind = n.mode == Expr::WeightedMode::Plain ? Def::ComposeK : Def::CocomposeK;
                return make_link(kind, n.l.matrix(), n.pinv, n.gamma, compile(n.b));
            },
            [](const PsiLiftNode& n) {
                return make_link(Def::CocomposeK, n.lifted.matrix(), n.lifted.matrix().transpose(), n.gamma,
                                 compile(n.b));
            },
            [](const ProductNode& n) {
                std::vector<Def> kids;
                for (const auto& b : n.blocks) kids.push_back(compile(b));
                return make_product(std::move(kids));
            },
            [](const ParallelComposeNode& n) {
                return make_link(Def::ParallelK, n.l.matrix(), n.l.matrix().transpose(), 1.0, compile(n.b));
            },
            [](const StandardComposeNode& n) {
                return make_link(Def::StandardK, n.l.matrix(), n.l.matrix().transpose(), 1.0, compile(n.b));
            }},
        ex.node().v);
}

Vector lin(double a, const Vector& x, double b, const Vector& y, const Vector& c) {
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + b * y[i] + c[i];
    return r;
}

double residual(const Def& d, const Vector& x, const Vector& xs, const double* aux) {
    switch (d.kind) {
        case Def::AtomK:
            return inclusion_residual(*d.atom, x, xs);
        case Def::AffineK:
            return residual(d.kids[0], lin(d.a, x, d.b, xs, d.c), lin(d.d, x, d.e, xs, d.f), aux);
        case Def::ComposeK: {
            // x* in (L^* |> (B + Id/g0))(x) - x/g0: x = L^* v, L(x* + x/g0) in (B + Id/g0) v
            Vector v(aux, aux + d.vdim);
            Vector u = axpy(xs, 1.0 / d.g0, x);
            Vector vs = axpy(matvec(d.m, u), -1.0 / d.g0, v);
            return dist(x, matvec(d.madj, v)) + residual(d.kids[0], v, vs, aux + d.vdim);
        }
        case Def::CocomposeK: {
            // inverse of L compose_{1/g0} B^{-1}: x* = L^* v, v in B(L(x + g0 x*) - g0 v)
            Vector v(aux, aux + d.vdim);
            Vector w = axpy(matvec(d.m, axpy(x, d.g0, xs)), -d.g0, v);
            return dist(xs, matvec(d.madj, v)) + residual(d.kids[0], w, v, aux + d.vdim);
        }
        case Def::ParallelK: {
            Vector v(aux, aux + d.vdim);
            return dist(x, matvec(d.madj, v)) + residual(d.kids[0], v, matvec(d.m, xs), aux + d.vdim);
        }
        case Def::StandardK: {
            Vector v(aux, aux + d.vdim);
            return dist(xs, matvec(d.madj, v)) + residual(d.kids[0], matvec(d.m, x), v, aux + d.vdim);
        }
        case Def::ProductK: {
            double r = 0.0;
            std::size_t off = 0;
            for (const auto& k : d.kids) {
                r += residual(k, slice(x, off, k.dim), slice(xs, off, k.dim), aux);
                off += k.dim;
                aux += k.aux;
            }
            return r;
        }
        case Def::DrbK: {
            // B(u, w) = A1 u x (A2^{-1} w - 2u)
            const std::size_t k = d.dim / 2;
            Vector u = slice(x, 0, k), w = slice(x, k, k);
            Vector us = slice(xs, 0, k), ws = slice(xs, k, k);
            return residual(d.kids[0], u, us, aux) + residual(d.kids[1], axpy(ws, 2.0, u), w, aux + d.kids[0].aux);
        }
        case Def::ChainBK: {
            // B x = g (A_1 x_1, A_k x_k - x_{k-1}, ..., A_p x_p - x_1 - x_{p-1})
            double r = 0.0;
            const std::size_t k = d.k, p = d.p;
            for (std::size_t i = 0; i < p; ++i) {
                Vector xi = slice(x, i * k, k);
                Vector si = scale(1.0 / d.cg, slice(xs, i * k, k));
                if (i > 0) si = add(si, slice(x, (i - 1) * k, k));
                if (i == p - 1) si = add(si, slice(x, 0, k));
                r += residual(d.kids[i], xi, si, aux);
                aux += d.kids[i].aux;
            }
            return r;
        }
    }
    return 0.0;
}

using Objective = std::function<double(const Vector&)>;

struct Grid {
    std::size_t dim;
    std::size_t n;
    std::size_t total;
};

std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= b;
    return r;
}

void grid_index(std::size_t flat, std::size_t n, std::size_t dim, std::vector<std::size_t>& idx) {
    for (std::size_t j = 0; j < dim; ++j) {
        idx[j] = flat % n;
        flat /= n;
    }
}

struct Candidate {
    Vector theta;
    double f;
};

// moving-window zoom: shrink only when the best point is interior
Candidate refine(const Objective& f, Vector c, double h, double final_h, int points, std::size_t& evals) {
    const std::size_t dim = c.size();
    const std::size_t n = static_cast<std::size_t>(points);
    const std::size_t half = n / 2;
    const std::size_t total = ipow(n, dim);
    double fc = f(c);
    ++evals;
    std::vector<std::size_t> idx(dim);
    Vector t(dim);
    int stalls = 0;
    while (h > final_h * (1.0 + norm_inf(c)) && stalls < 200) {
        std::size_t best = total;
        double fbest = fc;
        for (std::size_t flat = 0; flat < total; ++flat) {
            grid_index(flat, n, dim, idx);
            for (std::size_t j = 0; j < dim; ++j)
                t[j] = c[j] + h * (static_cast<double>(idx[j]) - static_cast<double>(half));
            double ft = f(t);
            ++evals;
            if (ft < fbest) {
                fbest = ft;
                best = flat;
            }
        }
        if (best == total) {
            h *= 0.5;
            continue;
        }
        grid_index(best, n, dim, idx);
        bool edge = false;
        for (std::size_t j = 0; j < dim; ++j) {
            c[j] += h * (static_cast<double>(idx[j]) - static_cast<double>(half));
            if (idx[j] == 0 || idx[j] == n - 1) edge = true;
        }
        fc = fbest;
        if (edge)
            ++stalls;
        else
            h *= 0.5;
    }
    return {c, fc};
}

std::vector<Candidate> coarse_candidates(const Objective& f, const Vector& center, double hw, int points,
                                         int max_candidates, std::size_t& evals, bool& on_boundary) {
    const std::size_t dim = center.size();
    const std::size_t n = static_cast<std::size_t>(points);
    const std::size_t total = ipow(n, dim);
    const double h = 2.0 * hw / static_cast<double>(n - 1);
    std::vector<double> vals(total);
    std::vector<std::size_t> idx(dim);
    Vector t(dim);
    for (std::size_t flat = 0; flat < total; ++flat) {
        grid_index(flat, n, dim, idx);
        for (std::size_t j = 0; j < dim; ++j) t[j] = center[j] - hw + h * static_cast<double>(idx[j]);
        vals[flat] = f(t);
        ++evals;
    }
    // discrete local minima over the full 3^d neighbourhood
    std::vector<std::size_t> minima;
    std::vector<std::size_t> nidx(dim);
    const std::size_t nb = ipow(3, dim);
    for (std::size_t flat = 0; flat < total; ++flat) {
        grid_index(flat, n, dim, idx);
        bool is_min = true;
        for (std::size_t o = 0; o < nb && is_min; ++o) {
            std::size_t rem = o, nf = 0, mul = 1;
            bool inside = true, self = true;
            for (std::size_t j = 0; j < dim; ++j) {
                long off = static_cast<long>(rem % 3) - 1;
                rem /= 3;
                if (off != 0) self = false;
                long q = static_cast<long>(idx[j]) + off;
                if (q < 0 || q >= static_cast<long>(n)) {
                    inside = false;
                    break;
                }
                nf += static_cast<std::size_t>(q) * mul;
                mul *= n;
            }
            if (!inside || self) continue;
            // strict on one side of the tie so plateaus yield a single representative
            if (vals[nf] < vals[flat] || (vals[nf] == vals[flat] && nf < flat)) is_min = false;
        }
        if (is_min) minima.push_back(flat);
    }
    std::sort(minima.begin(), minima.end(), [&](std::size_t x, std::size_t y) {
        return vals[x] < vals[y] || (vals[x] == vals[y] && x < y);
    });
    std::vector<Candidate> out;
    on_boundary = false;
    if (minima.empty()) return out;
    double fbest = vals[minima.front()];
    for (std::size_t i = 0; i < minima.size() && static_cast<int>(out.size()) < max_candidates; ++i) {
        if (i > 0 && vals[minima[i]] > 3.0 * fbest + 1e-12) break;
        grid_index(minima[i], n, dim, idx);
        for (std::size_t j = 0; j < dim; ++j) t[j] = center[j] - hw + h * static_cast<double>(idx[j]);
        if (i == 0)
            for (std::size_t j = 0; j < dim; ++j)
                if (idx[j] == 0 || idx[j] == n - 1) on_boundary = true;
        out.push_back({t, vals[minima[i]]});
    }
    return out;
}

int default_coarse_points(std::size_t dim) {
    switch (dim) {
        case 1: return 201;
        case 2: return 41;
        case 3: return 21;
        case 4: return 13;
        default: return 7;
    }
}

}  // namespace

std::size_t definitional_aux_dim(const Expr& e) { return compile(e).aux; }

OracleResult inclusion_oracle_detailed(const Expr& ex, double gamma, const Vector& z, const GridSpec& spec) {
    check_gamma(gamma, "inclusion_oracle");
    if (z.size() != ex.dim()) fail(ErrorKind::DimensionMismatch, "inclusion_oracle point dim");
    if (ex.dim() > 3) fail(ErrorKind::InvalidArgument, "inclusion_oracle supports dim <= 3");
    const Def root = compile(ex);
    const std::size_t n = root.dim;
    const bool linked = root.kind == Def::ComposeK || root.kind == Def::CocomposeK || root.kind == Def::ParallelK ||
                        root.kind == Def::StandardK;
    // for linked roots p follows from the witness v, otherwise p is searched directly
    const std::size_t sdim = linked ? root.aux : n + root.aux;
    auto decode = [&](const Vector& th) -> Vector {
        if (!linked) return Vector(th.begin(), th.begin() + static_cast<std::ptrdiff_t>(n));
        Vector v(th.begin(), th.begin() + static_cast<std::ptrdiff_t>(root.vdim));
        Vector w = matvec(root.madj, v);
        if (root.kind == Def::ComposeK || root.kind == Def::ParallelK) return w;
        return axpy(z, -gamma, w);
    };
    const double zscale = 1.0 + norm_inf(z);
    const double accept = spec.accept_tol * zscale;
    // coarse grid points that already solve the inclusion; two far apart means a plateau of solutions
    bool coarse = true, tie = false;
    std::optional<Vector> first_hit;
    Objective f = [&](const Vector& th) {
        Vector p = decode(th);
        Vector ps = scale(1.0 / gamma, sub(z, p));
        const double* aux = th.data() + (linked ? 0 : n);
        double r = residual(root, p, ps, aux);
        if (coarse && r <= accept) {
            if (!first_hit) first_hit = p;
            else if (dist(p, *first_hit) > spec.distinct_tol * zscale) tie = true;
        }
        return r;
    };

    OracleResult res;
    res.search_dim = sdim;
    Vector center(sdim, 0.0);
    if (!linked)
        for (std::size_t i = 0; i < n; ++i) center[i] = z[i];
    double hw = spec.half_width > 0.0 ? spec.half_width : 2.0 * zscale * std::max(1.0, 1.0 / gamma);
    const int cp = spec.coarse_points > 0 ? spec.coarse_points : default_coarse_points(sdim);

    std::vector<Candidate> cands;
    for (int expand = 0;; ++expand) {
        bool boundary = false;
        cands = coarse_candidates(f, center, hw, cp, spec.max_candidates, res.evaluations, boundary);
        if (!boundary || expand >= spec.max_expand) break;
        center = cands.front().theta;
        hw *= 2.0;
    }
    coarse = false;
    if (tie) fail(ErrorKind::OracleAmbiguous, "distinct grid points solve the inclusion exactly");
    const double h0 = 2.0 * hw / static_cast<double>(cp - 1);
    std::vector<Candidate> solved;
    for (const auto& c : cands) {
        Candidate r = refine(f, c.theta, h0, spec.final_cell, spec.refine_points, res.evaluations);
        if (r.f <= accept) solved.push_back(r);
    }
    if (solved.empty()) {
        double best = cands.empty() ? INFINITY : cands.front().f;
        fail(ErrorKind::OracleUnresolved, "no grid minimum reached residual " + std::to_string(accept) +
                                              " (best coarse " + std::to_string(best) + ")");
    }
    std::sort(solved.begin(), solved.end(), [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
    Vector p0 = decode(solved.front().theta);
    for (std::size_t i = 1; i < solved.size(); ++i)
        if (dist(decode(solved[i].theta), p0) > spec.distinct_tol * zscale)
            fail(ErrorKind::OracleAmbiguous, "two grid minima tie below resolution");
    res.point = p0;
    res.residual = solved.front().f;
    return res;
}

Vector inclusion_oracle(const Expr& e, double gamma, const Vector& x, const GridSpec& spec) {
    return inclusion_oracle_detailed(e, gamma, x, spec).point;
}

}  // namespace rcomp
