#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcomp/calculus.hpp"
#include "rcomp/oracle.hpp"
#include "rcomp/rng.hpp"

using namespace rcomp;

namespace {

Expr leaf(Atom a) { return Expr::leaf(std::move(a)); }
const double kR = 1.0 / std::sqrt(2.0);

void agree(const Expr& e, double g, int probes, std::uint64_t seed, double radius = 2.0) {
    Rng rng(seed);
    for (int i = 0; i < probes; ++i) {
        Vector x = rng.in_ball(e.dim(), radius);
        Vector want = resolvent(e, g, x);
        OracleResult r = inclusion_oracle_detailed(e, g, x);
        CHECK_MESSAGE(norm_inf(sub(want, r.point)) <= 1e-5, e.kind() << " at gamma " << g);
    }
}

}  // namespace

TEST_CASE("oracle examples") {
    CHECK(inclusion_oracle(leaf(Atom::scaled_identity(1.0, 1)), 1.0, {2.0})[0] == doctest::Approx(1.0).epsilon(1e-8));
    Expr c = Expr::compose(LinearMap::scaled_identity(1, kR), 1.0, leaf(Atom::zero(1)));
    CHECK(inclusion_oracle(c, 1.0, {1.0})[0] == doctest::Approx(0.5).epsilon(1e-8));
    Expr yo = Expr::cocompose(LinearMap::scaled_identity(1, 0.5), 1.0 / 3.0,
                              Expr::scale_left(2.0, Expr::scale_right(leaf(Atom::scaled_identity(1.0, 1)), 2.0)));
    CHECK(std::abs(inclusion_oracle(yo, 1.0 / 3.0, {1.0})[0] - 6.0 / 7.0) <= 1e-6);
}

TEST_CASE("oracle on atoms") {
    agree(leaf(Atom::normal_cone(ConvexSet::box({0, -1}, {1, 0.5}))), 0.7, 5, 1);
    agree(leaf(Atom::subdiff_l1(0.4, 2)), 1.5, 5, 2);
    agree(leaf(Atom::normal_cone(ConvexSet::ball({0.3, 0}, 0.8))), 1.0, 5, 3);
    agree(leaf(Atom::linear_monotone(DenseMatrix::from_rows({{1, 1}, {-1, 0.2}}))), 0.6, 5, 4);
}

TEST_CASE("oracle on compositions, cocompositions and wrappers") {
    LinearMap l(DenseMatrix::from_rows({{0.8, 0.3}, {-0.2, 0.6}}));
    Expr b = leaf(Atom::subdiff_l1(0.5, 2));
    agree(Expr::compose(l, 0.9, b), 0.9, 4, 5);
    agree(Expr::cocompose(l, 0.9, b), 0.9, 4, 6);
    agree(Expr::inverse(Expr::compose(l, 0.9, b)), 1.1, 3, 7);
    agree(Expr::scale_left(2.0, Expr::cocompose(l, 0.9, b)), 0.45, 3, 8);
    agree(Expr::yosida(leaf(Atom::normal_cone(ConvexSet::box({0}, {1}))), 0.5), 1.0, 5, 9);
    agree(Expr::translate_out(Expr::compose(l, 0.9, b), {0.2, -0.1}), 0.9, 3, 10);
    agree(Expr::add_scaled_id(Expr::cocompose(l, 0.9, b), 0.5), 0.7, 3, 11);
}

TEST_CASE("oracle on a row coisometry and mixtures") {
    LinearMap row(DenseMatrix::from_rows({{kR, kR}}));
    agree(Expr::compose(row, 1.2, leaf(Atom::normal_cone(ConvexSet::box({-0.5}, {1.0})))), 1.2, 5, 12);
    agree(Expr::cocompose(row, 0.4, leaf(Atom::subdiff_l1(0.5, 1))), 0.4, 5, 13);
    Expr mix = Expr::mixture(1.0, {{0.6, LinearMap::identity(1), leaf(Atom::subdiff_l1(0.5, 1))},
                                   {0.4, LinearMap::scaled_identity(1, 0.5), leaf(Atom::scaled_identity(2.0, 1))}});
    agree(mix, 1.0, 4, 14);
    Expr avg = Expr::average(0.8, {{0.3, leaf(Atom::normal_cone(ConvexSet::box({0}, {1})))},
                                   {0.7, leaf(Atom::subdiff_l1(0.2, 1))}});
    agree(avg, 0.8, 4, 15);
}

TEST_CASE("oracle on Douglas-Rachford and chain nodes") {
    Expr dr = Expr::douglas_rachford(leaf(Atom::normal_cone(ConvexSet::box({0}, {1}))), leaf(Atom::scaled_identity(1, 1)));
    agree(dr, 1.0, 5, 16, 4.0);
    Expr cone = leaf(Atom::normal_cone(ConvexSet::box({0}, {1})));
    Expr l1 = leaf(Atom::subdiff_l1(0.5, 1));
    agree(Expr::chain(1.0, {l1, cone}), 1.0, 4, 17);
    agree(Expr::chain(0.6, {cone, l1, cone}), 0.6, 2, 18);
}

TEST_CASE("oracle search dimension counts linked auxiliaries") {
    LinearMap row(DenseMatrix::from_rows({{kR, kR}}));
    OracleResult r = inclusion_oracle_detailed(Expr::compose(row, 1.0, leaf(Atom::zero(1))), 1.0, {0.3, 0.1});
    CHECK(r.search_dim >= 1);
    CHECK(r.residual <= 1e-7);
    CHECK(definitional_aux_dim(leaf(Atom::zero(2))) == 0);
}

TEST_CASE("oracle errors") {
    // M = -Id is not monotone: x = 0 is reached by every p, x = 1 by none
    Expr neg = leaf(Atom::linear_monotone(DenseMatrix::from_rows({{-1}}), true));
    try {
        inclusion_oracle(neg, 1.0, {0.0});
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OracleAmbiguous);
    }
    try {
        inclusion_oracle(neg, 1.0, {1.0});
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OracleUnresolved);
    }
    CHECK_THROWS_AS(inclusion_oracle(leaf(Atom::zero(4)), 1.0, {0, 0, 0, 0}), Error);
}
