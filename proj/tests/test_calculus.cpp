#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcomp/calculus.hpp"
#include "rcomp/oracle.hpp"
#include "rcomp/rng.hpp"

using namespace rcomp;

namespace {

Expr leaf(Atom a) { return Expr::leaf(std::move(a)); }

double max_gap(const Expr& a, double ga, const Expr& b, double gb, std::size_t dim, int n, std::uint64_t seed,
               double radius = 3.0) {
    Rng rng(seed);
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        Vector x = rng.in_ball(dim, radius);
        m = std::max(m, norm_inf(sub(resolvent(a, ga, x), resolvent(b, gb, x))));
    }
    return m;
}

const double kR = 1.0 / std::sqrt(2.0);

}  // namespace

TEST_CASE("compose with identity map is the plain resolvent") {
    Expr b = leaf(Atom::subdiff_l1(0.6, 2));
    CHECK(max_gap(Expr::compose(LinearMap::identity(2), 0.7, b), 0.7, b, 0.7, 2, 200, 1) <= 1e-15);
}

TEST_CASE("Douglas-Rachford node on point and zero") {
    Expr dr = Expr::douglas_rachford(leaf(Atom::normal_cone(ConvexSet::singleton({0}))), leaf(Atom::zero(1)));
    CHECK(resolvent(dr, 1.0, {5})[0] == doctest::Approx(0.0));
}

TEST_CASE("average of identical operators is the operator") {
    Expr b = leaf(Atom::normal_cone(ConvexSet::ball({0.2, 0}, 1.0)));
    for (double g : {0.3, 1.0, 4.0}) {
        Expr avg = Expr::average(g, {{0.5, b}, {0.5, b}});
        CHECK(max_gap(avg, g, b, g, 2, 200, 2) <= 1e-14);
    }
}

TEST_CASE("Yosida example: cocomposition with half identity") {
    for (double g : {0.5, 1.0, 2.0}) {
        Expr a = leaf(Atom::scaled_identity(1.0, 1));
        Expr b = Expr::scale_left(2.0, Expr::scale_right(a, 2.0));
        Expr node = Expr::cocompose(LinearMap::scaled_identity(1, 0.5), g / 3.0, b);
        double want = (3.0 + 3.0 * g) / (3.0 + 4.0 * g);
        if (g == 1.0) CHECK(want == doctest::Approx(6.0 / 7.0));
        CHECK(resolvent(node, g / 3.0, {1.0})[0] == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("Yosida example matches the Yosida node") {
    for (auto a : {leaf(Atom::scaled_identity(1.3, 1)), leaf(Atom::normal_cone(ConvexSet::box({0}, {1})))})
        for (double g : {0.4, 1.0, 3.0}) {
            Expr node = Expr::cocompose(LinearMap::scaled_identity(1, 0.5), g / 3.0,
                                        Expr::scale_left(2.0, Expr::scale_right(a, 2.0)));
            // resolvents at the node's native parameter equal those of the gamma-Yosida at the same parameter
            CHECK(max_gap(node, g / 3.0, Expr::yosida(a, g), g / 3.0, 1, 200, 3) <= 1e-9);
        }
}

TEST_CASE("reparameterization") {
    Expr si = Expr::compose(LinearMap::identity(2), 1.0, leaf(Atom::scaled_identity(2.0, 2)));
    Rng rng(4);
    for (double mu : {0.05, 0.3, 0.5, 0.9, 1.0, 2.0, 7.0}) {
        Vector x = rng.in_ball(2, 3.0);
        Vector p = resolvent(si, mu, x);
        CHECK(norm_inf(sub(p, scale(1.0 / (1.0 + 2.0 * mu), x))) <= 1e-10);
    }
    // mu equal to the native parameter returns the native map untouched
    int calls = 0;
    NativeResolvent native = [&](const Vector& y) {
        ++calls;
        return scale(0.5, y);
    };
    CHECK(reparam_resolvent(native, 1.0, 1.0, {2.0})[0] == 1.0);
    CHECK(calls == 1);
}

TEST_CASE("reparameterized compose agrees with the inclusion oracle") {
    LinearMap l(DenseMatrix::from_rows({{0.7, 0.2}, {-0.1, 0.6}}));
    Expr e = Expr::compose(l, 1.0, leaf(Atom::subdiff_l1(0.5, 2)));
    Rng rng(5);
    for (int i = 0; i < 3; ++i) {
        Vector x = rng.in_ball(2, 2.0);
        CHECK(norm_inf(sub(resolvent(e, 2.0, x), inclusion_oracle(e, 2.0, x))) <= 1e-6);
    }
}

TEST_CASE("reparameterization budget exhaustion") {
    Expr e = Expr::compose(LinearMap::identity(1), 1.0, leaf(Atom::scaled_identity(1.0, 1)));
    ReparamOptions o;
    o.max_iter = 2;
    o.tol = 1e-16;
    try {
        resolvent(e, 0.01, {1.0}, o);
        FAIL("no throw");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::ReparamDivergence);
    }
}

TEST_CASE("gamma outside the admissible range") {
    Expr e = leaf(Atom::zero(1));
    try {
        resolvent(e, 1e-9, {1.0});
        FAIL("no throw");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::InvalidGamma);
    }
    CHECK_THROWS_AS(resolvent(e, 1e9, {1.0}), Error);
}

TEST_CASE("parallel composition check") {
    LinearMap row(DenseMatrix::from_rows({{kR, kR}}));
    CHECK(parallel_composition_check(row, leaf(Atom::subdiff_l1(0.4, 1)), 0.8, 500, 6).max_residual <= 1e-8);
    CHECK(parallel_composition_check(LinearMap::identity(2), leaf(Atom::normal_cone(ConvexSet::box({0, 0}, {1, 1}))),
                                     1.3, 500, 7)
              .max_residual <= 1e-12);
    // L = Id/sqrt2 on R^1 with B = 0: the composition is Id
    Expr c = Expr::compose(LinearMap::scaled_identity(1, kR), 1.0, leaf(Atom::zero(1)));
    CHECK(resolvent(c, 1.0, {1.0})[0] == doctest::Approx(0.5));
    CHECK(parallel_composition_check(LinearMap::scaled_identity(1, kR), leaf(Atom::zero(1)), 1.0, 200, 8)
              .max_residual <= 1e-12);
}

TEST_CASE("coisometry collapse") {
    Expr b = leaf(Atom::normal_cone(ConvexSet::box({-0.3}, {0.8})));
    LinearMap row(DenseMatrix::from_rows({{kR, kR}}));
    auto [par, std_] = coisometry_collapse(row, b, 0.9);
    CHECK(max_gap(Expr::compose(row, 0.9, b), 0.9, par, 0.9, 2, 1000, 9) <= 1e-12);
    CHECK(max_gap(Expr::cocompose(row, 0.9, b), 0.9, std_, 0.9, 2, 1000, 10) <= 1e-12);

    auto [p1, s1] = coisometry_collapse(LinearMap::identity(1), b, 1.0);
    CHECK(max_gap(p1, 1.0, b, 1.0, 1, 200, 11) <= 1e-15);
    CHECK(max_gap(s1, 1.0, b, 1.0, 1, 200, 12) <= 1e-15);

    try {
        coisometry_collapse(LinearMap::scaled_identity(2, 0.5), b, 1.0);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotCoisometry);
    }
}

TEST_CASE("scaled coisometry: J of S^* A S through the cocomposition") {
    // S S^T = 2 I, L = S / sqrt2
    DenseMatrix s = DenseMatrix::from_rows({{1, 1}, {1, -1}});
    LinearMap l(mscale(kR, s));
    Expr a = leaf(Atom::subdiff_l1(0.3, 2));
    const double g = 0.7, mu = 2.0;
    const double rm = std::sqrt(mu);
    Expr co = Expr::cocompose(l, g, Expr::scale_left(rm, Expr::scale_right(a, rm)));
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        Vector x = rng.in_ball(2, 3.0);
        Vector sx = matvec(s, x);
        Vector want = axpy(x, -1.0 / mu, matvec_t(s, sub(sx, resolvent(a, mu * g, sx))));
        CHECK(norm_inf(sub(resolvent(co, g, x), want)) <= 1e-12);
    }
    Expr sc = Expr::standard_compose(LinearMap(s), a);
    Vector x{0.4, -1.1};
    CHECK(norm_inf(sub(resolvent(sc, g, x), inclusion_oracle(sc, g, x))) <= 1e-6);
}

TEST_CASE("property: operator identities at the native parameter") {
    LinearMap l(DenseMatrix::from_rows({{0.6, 0.2}, {-0.3, 0.5}, {0.4, -0.1}}));
    LinearMap s(DenseMatrix::from_rows({{0.9, -0.2}, {0.3, 0.7}}));
    std::vector<Expr> bs = {leaf(Atom::subdiff_l1(0.7, 3)),
                            leaf(Atom::linear_monotone(DenseMatrix::from_rows({{1, 0.5, 0}, {-0.5, 0.3, 0}, {0, 0, 0.2}}))),
                            leaf(Atom::normal_cone(ConvexSet::box({-0.5, -1, 0}, {0.5, 1, 2})))};
    const double g = 0.8;
    for (const auto& b : bs) {
        SUBCASE("inverse duality") {
            CHECK(max_gap(Expr::compose(l, g, b), g, Expr::inverse(Expr::cocompose(l, 1.0 / g, Expr::inverse(b))), g, 2,
                          1000, 20) <= 1e-9);
        }
        SUBCASE("scaling") {
            for (double rho : {0.5, 2.0}) {
                CHECK(max_gap(Expr::scale_left(rho, Expr::compose(l, g, b)), g / rho,
                              Expr::compose(l, g / rho, Expr::scale_left(rho, b)), g / rho, 2, 1000, 21) <= 1e-9);
                CHECK(max_gap(Expr::scale_left(rho, Expr::cocompose(l, g, b)), g / rho,
                              Expr::cocompose(l, g / rho, Expr::scale_left(rho, b)), g / rho, 2, 1000, 22) <= 1e-9);
            }
        }
        SUBCASE("inner scaling") {
            const double rho = 1.7;
            CHECK(max_gap(Expr::scale_right(Expr::compose(l, g, b), rho), g / rho,
                          Expr::compose(l, g / rho, Expr::scale_right(b, rho)), g / rho, 2, 1000, 23) <= 1e-9);
        }
        SUBCASE("associativity") {
            CHECK(max_gap(Expr::compose(s, g, Expr::compose(l, g, b)), g, Expr::compose(compose_maps(l, s), g, b), g, 2,
                          1000, 24) <= 1e-9);
            CHECK(max_gap(Expr::cocompose(s, g, Expr::cocompose(l, g, b)), g,
                          Expr::cocompose(compose_maps(l, s), g, b), g, 2, 1000, 25) <= 1e-9);
        }
        SUBCASE("shift by a multiple of the identity") {
            const double rho = 0.6, beta = g / (1.0 + rho * g);
            CHECK(max_gap(Expr::compose(l, g, Expr::add_scaled_id(b, rho)), g,
                          Expr::add_scaled_id(Expr::compose(l, beta, b), rho), g, 2, 1000, 26) <= 1e-9);
        }
        SUBCASE("translations") {
            Vector z{0.3, -0.7};
            CHECK(max_gap(Expr::translate_out(Expr::compose(l, g, b), z), g,
                          Expr::compose(l, g, Expr::translate_out(b, rcomp::apply(l, z))), g, 2, 1000, 27) <= 1e-9);
            CHECK(max_gap(Expr::translate_in(Expr::cocompose(l, g, b), z), g,
                          Expr::cocompose(l, g, Expr::translate_in(b, rcomp::apply(l, z))), g, 2, 1000, 28) <= 1e-9);
        }
        SUBCASE("Yosida of the cocomposition") {
            Rng rng(29);
            for (int i = 0; i < 1000; ++i) {
                Vector x = rng.in_ball(2, 3.0);
                Vector lhs = yosida_value(Expr::cocompose(l, g, b), g, x);
                Vector rhs = apply_adjoint(l, yosida_value(b, g, rcomp::apply(l, x)));
                CHECK(norm_inf(sub(lhs, rhs)) <= 1e-9);
            }
        }
        SUBCASE("Yosida shift of the cocomposition") {
            const double rho = 0.4;
            CHECK(max_gap(Expr::yosida(Expr::cocompose(l, g + rho, b), rho), g,
                          Expr::cocompose(l, g, Expr::yosida(b, rho)), g, 2, 1000, 30) <= 1e-9);
        }
        SUBCASE("firm nonexpansiveness with |L| <= 1") {
            Rng rng(31);
            for (auto e : {Expr::compose(l, g, b), Expr::cocompose(l, g, b)}) {
                double worst = 0.0;
                for (int i = 0; i < 1000; ++i) {
                    Vector x = rng.in_ball(2, 3.0), y = rng.in_ball(2, 3.0);
                    Vector d = sub(resolvent(e, g, x), resolvent(e, g, y));
                    worst = std::min(worst, dot(d, sub(x, y)) - dot(d, d));
                }
                CHECK(worst >= -1e-10);
            }
        }
    }
}

TEST_CASE("mixture nodes agree with their product-space lifting") {
    std::vector<Expr::MixTerm> terms = {
        {0.5, LinearMap(DenseMatrix::from_rows({{0.9, 0.1}, {-0.3, 0.6}})), leaf(Atom::normal_cone(ConvexSet::box({-0.4, 0}, {0.6, 1.5})))},
        {1.2, LinearMap(DenseMatrix::from_rows({{0.5, -0.7}})), leaf(Atom::subdiff_l1(0.8, 1))},
        {0.3, LinearMap(DenseMatrix::from_rows({{0.2, 0.4}, {1, 0}, {-0.6, 0.3}})), leaf(Atom::scaled_identity(1.5, 3))}};
    for (auto e : {Expr::mixture(0.9, terms), Expr::comixture(0.9, terms)})
        CHECK(max_gap(e, 0.9, lift_mixture(e), 0.9, 2, 1000, 40) <= 1e-10);
    Expr avg = Expr::average(1.4, {{0.2, leaf(Atom::scaled_identity(2, 2))}, {0.8, leaf(Atom::subdiff_l1(0.3, 2))}});
    CHECK(max_gap(avg, 1.4, lift_mixture(avg), 1.4, 2, 1000, 41) <= 1e-10);
}

TEST_CASE("chain node agrees with the inclusion oracle") {
    Expr cone = leaf(Atom::normal_cone(ConvexSet::box({0}, {1})));
    Expr l1 = leaf(Atom::subdiff_l1(0.5, 1));
    const double g = 0.8;
    Expr ch = Expr::chain(g, {cone, l1});
    Rng rng(42);
    for (int i = 0; i < 5; ++i) {
        Vector z = rng.in_ball(1, 2.0);
        CHECK(norm_inf(sub(resolvent(ch, g, z), inclusion_oracle(ch, g, z))) <= 1e-6);
    }
}

TEST_CASE("psi lift reproduces the plain cocomposition of |L| < 1 data") {
    LinearMap l(DenseMatrix::from_rows({{0.5, 0.2}, {0.1, 0.4}}));
    Expr b = leaf(Atom::subdiff_l1(0.6, 2));
    Expr lifted = Expr::psi_lift(l, 0.9, b);
    const DenseMatrix& m = std::get<PsiLiftNode>(lifted.node().v).lifted.matrix();
    CHECK(max_abs_diff(matmul(m, m.transpose()), DenseMatrix::identity(m.rows())) <= 1e-10);
    CHECK_THROWS_AS(Expr::psi_lift(LinearMap::scaled_identity(2, 1.5), 0.9, b), Error);
}

TEST_CASE("weighted composition with a pseudo-inverse") {
    LinearMap l(DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}}));
    Expr b = leaf(Atom::subdiff_l1(0.4, 3));
    Expr w = Expr::weighted_compose(l, 1.0, b, Expr::WeightedMode::Plain);
    Vector x{0.8, -0.5};
    Vector p = resolvent(w, 1.0, x);
    CHECK(norm_inf(sub(p, matvec(pseudo_inverse(l), resolvent(b, 1.0, rcomp::apply(l, x))))) <= 1e-13);
}
