#pragma once

#include <memory>
#include <string>
#include <variant>

#include "rcomp/linalg.hpp"

namespace rcomp {

struct BoxSet {
    Vector lo, hi;
};
struct BallSet {
    Vector center;
    double radius;
};
// offset + span(basis columns); columns orthonormal after construction
struct AffineSet {
    DenseMatrix basis;  // orthonormal columns
    Vector offset;
    DenseMatrix given;  // spanning columns as supplied
};
struct SingletonSet {
    Vector point;
};
// { x : <normal, x> <= offset }
struct HalfspaceSet {
    Vector normal;
    double offset;
};

class ConvexSet {
public:
    using Variant = std::variant<BoxSet, BallSet, AffineSet, SingletonSet, HalfspaceSet>;

    static ConvexSet box(Vector lo, Vector hi);
    static ConvexSet ball(Vector center, double radius);
    static ConvexSet affine(const DenseMatrix& basis, Vector offset);
    static ConvexSet singleton(Vector point);
    static ConvexSet halfspace(Vector normal, double offset);

    const Variant& variant() const { return v_; }
    std::size_t dim() const;
    std::string kind() const;

private:
    explicit ConvexSet(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

Vector project(const ConvexSet& c, const Vector& x);

class Atom;

struct ZeroAtom {
    std::size_t dim;
};
struct ScaledIdentityAtom {
    double alpha;
    std::size_t dim;
};
struct LinearMonotoneAtom {
    DenseMatrix m;
    bool unchecked;
};
struct NormalConeAtom {
    ConvexSet set;
};
struct SubdiffL1Atom {
    double lambda;
    std::size_t dim;
};
// v + base
struct ConstantShiftAtom {
    Vector v;
    std::shared_ptr<const Atom> base;
};

class Atom {
public:
    using Variant =
        std::variant<ZeroAtom, ScaledIdentityAtom, LinearMonotoneAtom, NormalConeAtom, SubdiffL1Atom, ConstantShiftAtom>;

    static constexpr double kPsdTol = 1e-10;

    static Atom zero(std::size_t dim);
    static Atom scaled_identity(double alpha, std::size_t dim);
    // rejects M whose symmetric part has an eigenvalue below -kPsdTol unless unchecked
    static Atom linear_monotone(DenseMatrix m, bool unchecked = false);
    static Atom normal_cone(ConvexSet set);
    static Atom subdiff_l1(double lambda, std::size_t dim);
    static Atom constant_shift(Vector v, Atom base);

    const Variant& variant() const { return v_; }
    std::size_t dim() const;
    std::string kind() const;
    // true when every atom in the chain is monotone by construction
    bool monotone() const;
    // sup of ||x*|| over the graph, or a negative value when unbounded
    double range_bound() const;

private:
    explicit Atom(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

struct ResolventQuery {
    double gamma;
    Vector point;
};

Vector atom_resolvent(const Atom& a, const ResolventQuery& q);
inline Vector atom_resolvent(const Atom& a, double gamma, const Vector& x) {
    return atom_resolvent(a, ResolventQuery{gamma, x});
}

// KKT-style score, zero exactly on gra a; values <= tol are reported as 0
double inclusion_residual(const Atom& a, const Vector& x, const Vector& xstar, double tol = 0.0);

}  // namespace rcomp
