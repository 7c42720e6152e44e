#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "rcomp/expr.hpp"

namespace rcomp {

struct ReparamOptions {
    double tol = 1e-10;
    int max_iter = 10000;
};

// J_{gamma A} x by structural recursion over the tree
Vector resolvent(const Expr& e, double gamma, const Vector& x, const ReparamOptions& opts = {});

// (x - J_{gamma A} x) / gamma, the Yosida approximation of index gamma at x
Vector yosida_value(const Expr& e, double gamma, const Vector& x, const ReparamOptions& opts = {});

using NativeResolvent = std::function<Vector(const Vector&)>;

// J_{mu A} x from a resolvent known only at gamma0.
// mu > gamma0/2: p <- J_{gamma0 A}((gamma0/mu) x + (1 - gamma0/mu) p)
// mu <= gamma0/2: y <- x + (1 - mu/gamma0)(y - J_{gamma0 A} y), then p = J_{gamma0 A} y
Vector reparam_resolvent(const NativeResolvent& native, double gamma0, double mu, const Vector& x,
                         const ReparamOptions& opts = {});

// Product-space form of a mixture, comixture or average node (compose/cocompose over a product).
Expr lift_mixture(const Expr& e);

struct ParallelCheckReport {
    double max_residual = 0.0;
    std::size_t samples = 0;
};

// Samples (L^* J_{gamma B} L y, ...) and checks them against the graph of L^* |> (B + Psi/gamma).
ParallelCheckReport parallel_composition_check(const LinearMap& l, const Expr& b, double gamma,
                                               std::size_t samples, std::uint64_t seed, double radius = 5.0);

// (L^* |> B, L^* o B o L), valid for a coisometry L
std::pair<Expr, Expr> coisometry_collapse(const LinearMap& l, const Expr& b, double gamma);

}  // namespace rcomp
