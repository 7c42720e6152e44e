#include "rcomp/operators.hpp"

#include <algorithm>
#include <cmath>

namespace rcomp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        fail(ErrorKind::DimensionMismatch,
             std::string(what) + ": got dim " + std::to_string(got) + ", expected " + std::to_string(want));
}

void check_space_dim(std::size_t n) {
    if (n == 0 || n > kMaxDim) fail(ErrorKind::InvalidArgument, "dimension must be in [1, 64]");
}

double soft(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

}  // namespace

ConvexSet ConvexSet::box(Vector lo, Vector hi) {
    check_dim(hi.size(), lo.size(), "box bounds");
    check_space_dim(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            fail(ErrorKind::InvalidArgument, "box needs finite lo <= hi");
    return ConvexSet(BoxSet{std::move(lo), std::move(hi)});
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
    check_space_dim(center.size());
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::InvalidArgument, "ball radius must be positive");
    if (!all_finite(center)) fail(ErrorKind::InvalidArgument, "ball center must be finite");
    return ConvexSet(BallSet{std::move(center), radius});
}

ConvexSet ConvexSet::affine(const DenseMatrix& basis, Vector offset) {
    check_space_dim(offset.size());
    check_dim(basis.rows(), offset.size(), "affine basis rows");
    if (!all_finite(offset)) fail(ErrorKind::InvalidArgument, "affine offset must be finite");
    // modified Gram-Schmidt, dependent columns dropped
    std::vector<Vector> q;
    double ref = std::max(1.0, basis.max_abs());
    for (std::size_t j = 0; j < basis.cols(); ++j) {
        Vector c = basis.column(j);
        for (const auto& e : q) c = axpy(c, -dot(e, c), e);
        double nc = norm(c);
        if (nc > 1e-10 * ref) q.push_back(scale(1.0 / nc, c));
    }
    DenseMatrix qm(offset.size(), q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        for (std::size_t i = 0; i < offset.size(); ++i) qm(i, j) = q[j][i];
    return ConvexSet(AffineSet{std::move(qm), std::move(offset), basis});
}

ConvexSet ConvexSet::singleton(Vector point) {
    check_space_dim(point.size());
    if (!all_finite(point)) fail(ErrorKind::InvalidArgument, "singleton point must be finite");
    return ConvexSet(SingletonSet{std::move(point)});
}

ConvexSet ConvexSet::halfspace(Vector normal, double offset) {
    check_space_dim(normal.size());
    if (norm(normal) == 0.0) fail(ErrorKind::InvalidArgument, "halfspace normal must be nonzero");
    if (!all_finite(normal) || !std::isfinite(offset)) fail(ErrorKind::InvalidArgument, "halfspace must be finite");
    return ConvexSet(HalfspaceSet{std::move(normal), offset});
}

std::size_t ConvexSet::dim() const {
    return std::visit(overloaded{[](const BoxSet& s) { return s.lo.size(); },
                                 [](const BallSet& s) { return s.center.size(); },
                                 [](const AffineSet& s) { return s.offset.size(); },
                                 [](const SingletonSet& s) { return s.point.size(); },
                                 [](const HalfspaceSet& s) { return s.normal.size(); }},
                      v_);
}

std::string ConvexSet::kind() const {
    return std::visit(overloaded{[](const BoxSet&) { return "box"; }, [](const BallSet&) { return "ball"; },
                                 [](const AffineSet&) { return "affine"; },
                                 [](const SingletonSet&) { return "singleton"; },
                                 [](const HalfspaceSet&) { return "halfspace"; }},
                      v_);
}

Vector project(const ConvexSet& c, const Vector& x) {
    check_dim(x.size(), c.dim(), "project");
    return std::visit(
        overloaded{[&](const BoxSet& s) {
                       Vector p(x.size());
                       for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::clamp(x[i], s.lo[i], s.hi[i]);
                       return p;
                   },
                   [&](const BallSet& s) {
                       Vector d = sub(x, s.center);
                       double nd = norm(d);
                       if (nd <= s.radius) return x;
                       return axpy(s.center, s.radius / nd, d);
                   },
                   [&](const AffineSet& s) {
                       Vector d = sub(x, s.offset);
                       return add(s.offset, matvec(s.basis, matvec_t(s.basis, d)));
                   },
                   [&](const SingletonSet& s) { return s.point; },
                   [&](const HalfspaceSet& s) {
                       double excess = dot(s.normal, x) - s.offset;
                       if (excess <= 0.0) return x;
                       return axpy(x, -excess / dot(s.normal, s.normal), s.normal);
                   }},
        c.variant());
}

Atom Atom::zero(std::size_t dim) {
    check_space_dim(dim);
    return Atom(ZeroAtom{dim});
}

Atom Atom::scaled_identity(double alpha, std::size_t dim) {
    check_space_dim(dim);
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "scaled identity needs alpha >= 0");
    return Atom(ScaledIdentityAtom{alpha, dim});
}

Atom Atom::linear_monotone(DenseMatrix m, bool unchecked) {
    if (m.rows() != m.cols()) fail(ErrorKind::DimensionMismatch, "linear monotone atom needs a square matrix");
    check_space_dim(m.rows());
    if (!unchecked) {
        DenseMatrix sym = mscale(0.5, madd(m, m.transpose()));
        auto eig = symmetric_eigen(sym);
        double lmin = *std::min_element(eig.values.begin(), eig.values.end());
        if (lmin < -kPsdTol * std::max(1.0, m.max_abs()))
            fail(ErrorKind::NotMonotone, "symmetric part has eigenvalue " + std::to_string(lmin));
    }
    return Atom(LinearMonotoneAtom{std::move(m), unchecked});
}

Atom Atom::normal_cone(ConvexSet set) { return Atom(NormalConeAtom{std::move(set)}); }

Atom Atom::subdiff_l1(double lambda, std::size_t dim) {
    check_space_dim(dim);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::InvalidArgument, "subdiff_l1 needs lambda > 0");
    return Atom(SubdiffL1Atom{lambda, dim});
}

Atom Atom::constant_shift(Vector v, Atom base) {
    check_dim(v.size(), base.dim(), "constant shift");
    if (!all_finite(v)) fail(ErrorKind::InvalidArgument, "shift must be finite");
    return Atom(ConstantShiftAtom{std::move(v), std::make_shared<const Atom>(std::move(base))});
}

std::size_t Atom::dim() const {
    return std::visit(overloaded{[](const ZeroAtom& a) { return a.dim; },
                                 [](const ScaledIdentityAtom& a) { return a.dim; },
                                 [](const LinearMonotoneAtom& a) { return a.m.rows(); },
                                 [](const NormalConeAtom& a) { return a.set.dim(); },
                                 [](const SubdiffL1Atom& a) { return a.dim; },
                                 [](const ConstantShiftAtom& a) { return a.v.size(); }},
                      v_);
}

std::string Atom::kind() const {
    return std::visit(overloaded{[](const ZeroAtom&) { return "zero"; },
                                 [](const ScaledIdentityAtom&) { return "scaled_identity"; },
                                 [](const LinearMonotoneAtom&) { return "linear_monotone"; },
                                 [](const NormalConeAtom&) { return "normal_cone"; },
                                 [](const SubdiffL1Atom&) { return "subdiff_l1"; },
                                 [](const ConstantShiftAtom&) { return "constant_shift"; }},
                      v_);
}

bool Atom::monotone() const {
    return std::visit(overloaded{[](const LinearMonotoneAtom& a) { return !a.unchecked; },
                                 [](const ConstantShiftAtom& a) { return a.base->monotone(); },
                                 [](const auto&) { return true; }},
                      v_);
}

double Atom::range_bound() const {
    return std::visit(overloaded{[](const ZeroAtom&) { return 0.0; },
                                 [](const ScaledIdentityAtom& a) { return a.alpha == 0.0 ? 0.0 : -1.0; },
                                 [](const LinearMonotoneAtom& a) { return a.m.max_abs() == 0.0 ? 0.0 : -1.0; },
                                 [](const NormalConeAtom&) { return -1.0; },
                                 [](const SubdiffL1Atom& a) {
                                     return a.lambda * std::sqrt(static_cast<double>(a.dim));
                                 },
                                 [](const ConstantShiftAtom& a) {
                                     double b = a.base->range_bound();
                                     return b < 0.0 ? -1.0 : b + norm(a.v);
                                 }},
                      v_);
}

Vector atom_resolvent(const Atom& a, const ResolventQuery& q) {
    const double g = q.gamma;
    const Vector& x = q.point;
    if (!(g > 0.0) || !std::isfinite(g)) fail(ErrorKind::InvalidGamma, "resolvent parameter must be positive");
    check_dim(x.size(), a.dim(), "atom resolvent");
    return std::visit(overloaded{[&](const ZeroAtom&) { return x; },
                                 [&](const ScaledIdentityAtom& s) { return scale(1.0 / (1.0 + g * s.alpha), x); },
                                 [&](const LinearMonotoneAtom& s) {
                                     DenseMatrix m = mscale(g, s.m);
                                     for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
                                     return solve(m, x);
                                 },
                                 [&](const NormalConeAtom& s) { return project(s.set, x); },
                                 [&](const SubdiffL1Atom& s) {
                                     Vector p(x.size());
                                     for (std::size_t i = 0; i < x.size(); ++i) p[i] = soft(x[i], g * s.lambda);
                                     return p;
                                 },
                                 [&](const ConstantShiftAtom& s) {
                                     return atom_resolvent(*s.base, g, axpy(x, -g, s.v));
                                 }},
                      a.variant());
}

namespace {

// complementarity residual for 0 <= a, 0 <= b, a*b = 0
double comp(double a, double b) { return std::abs(std::min(a, b)); }

double normal_cone_residual(const ConvexSet& c, const Vector& x, const Vector& xs) {
    return std::visit(
        overloaded{[&](const BoxSet& s) {
                       double r = 0.0;
                       for (std::size_t i = 0; i < x.size(); ++i) {
                           r += std::max({0.0, s.lo[i] - x[i], x[i] - s.hi[i]});
                           r += comp(std::max(xs[i], 0.0), std::max(s.hi[i] - x[i], 0.0));
                           r += comp(std::max(-xs[i], 0.0), std::max(x[i] - s.lo[i], 0.0));
                       }
                       return r;
                   },
                   [&](const BallSet& s) {
                       Vector d = sub(x, s.center);
                       double nd = norm(d);
                       if (nd == 0.0) return norm(xs);
                       double mu = dot(xs, d) / nd;
                       double tang = norm(axpy(xs, -mu / nd, d));
                       return tang + std::max(0.0, -mu) + comp(std::max(mu, 0.0), std::max(s.radius - nd, 0.0)) +
                              std::max(0.0, nd - s.radius);
                   },
                   [&](const AffineSet& s) {
                       Vector d = sub(x, s.offset);
                       Vector dpar = matvec(s.basis, matvec_t(s.basis, d));
                       Vector spar = matvec(s.basis, matvec_t(s.basis, xs));
                       return norm(sub(d, dpar)) + norm(spar);
                   },
                   [&](const SingletonSet& s) { return dist(x, s.point); },
                   [&](const HalfspaceSet& s) {
                       double na = norm(s.normal);
                       double mu = dot(xs, s.normal) / (na * na);
                       double tang = norm(axpy(xs, -mu, s.normal));
                       double slack = (s.offset - dot(s.normal, x)) / na;
                       return tang + std::max(0.0, -mu) * na + comp(std::max(mu, 0.0) * na, std::max(slack, 0.0)) +
                              std::max(0.0, -slack);
                   }},
        c.variant());
}

}  // namespace

double inclusion_residual(const Atom& a, const Vector& x, const Vector& xstar, double tol) {
    check_dim(x.size(), a.dim(), "inclusion_residual x");
    check_dim(xstar.size(), a.dim(), "inclusion_residual x*");
    double r = std::visit(
        overloaded{[&](const ZeroAtom&) { return norm(xstar); },
                   [&](const ScaledIdentityAtom& s) { return norm(axpy(xstar, -s.alpha, x)); },
                   [&](const LinearMonotoneAtom& s) { return norm(sub(xstar, matvec(s.m, x))); },
                   [&](const NormalConeAtom& s) { return normal_cone_residual(s.set, x, xstar); },
                   [&](const SubdiffL1Atom& s) {
                       double r = 0.0;
                       for (std::size_t i = 0; i < x.size(); ++i) {
                           double xp = std::max(x[i], 0.0), xm = std::max(-x[i], 0.0);
                           r += std::max(0.0, std::abs(xstar[i]) - s.lambda);
                           r += comp(xp, std::max(s.lambda - xstar[i], 0.0));
                           r += comp(xm, std::max(s.lambda + xstar[i], 0.0));
                       }
                       return r;
                   },
                   [&](const ConstantShiftAtom& s) { return inclusion_residual(*s.base, x, sub(xstar, s.v), 0.0); }},
        a.variant());
    return r <= tol ? 0.0 : r;
}

}  // namespace rcomp
