#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcomp/linalg.hpp"
#include "rcomp/rng.hpp"

using namespace rcomp;

namespace {

DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("apply on hand-checked maps") {
    CHECK(rcomp::apply(LinearMap::identity(3), {1, 2, 3}) == Vector{1, 2, 3});
    CHECK(rcomp::apply(LinearMap(DenseMatrix(2, 3)), {4, 5, 6}) == Vector{0, 0});
    CHECK(rcomp::apply(LinearMap(DenseMatrix::from_rows({{1, 1}, {0, 1}})), {1, 1}) == Vector{2, 1});
}

TEST_CASE("apply rejects wrong dimension") {
    try {
        rcomp::apply(LinearMap::identity(2), {1, 2, 3});
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
}

TEST_CASE("operator norm examples") {
    CHECK(operator_norm(LinearMap::identity(4)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(operator_norm(LinearMap(DenseMatrix::diag({3, 1}))) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(operator_norm(LinearMap(DenseMatrix::from_rows({{0, 2}, {0, 0}}))) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("operator norm survives a seed in the kernel of the top direction") {
    // all-ones seed is an eigenvector of the small singular value
    DenseMatrix m = DenseMatrix::from_rows({{1, 1}, {3, -3}});
    CHECK(operator_norm(LinearMap(m)) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("solve examples") {
    CHECK(solve(DenseMatrix::identity(2), {3, 4}) == Vector{3, 4});
    Vector a = solve(DenseMatrix::diag({2, 4}), {2, 4});
    CHECK(a[0] == doctest::Approx(1.0));
    CHECK(a[1] == doctest::Approx(1.0));
    Vector b = solve(DenseMatrix::from_rows({{2, 1}, {1, 3}}), {3, 4});
    CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(solve(DenseMatrix::from_rows({{1, 2}, {2, 4}}), {1, 1}), Error);
}

TEST_CASE("pseudo-inverse examples") {
    DenseMatrix p = pseudo_inverse(LinearMap(DenseMatrix::diag({2, 4})));
    CHECK(max_abs_diff(p, DenseMatrix::diag({0.5, 0.25})) < 1e-14);
    DenseMatrix col = pseudo_inverse(LinearMap(DenseMatrix::from_rows({{1}, {1}})));
    REQUIRE(col.rows() == 1);
    REQUIRE(col.cols() == 2);
    CHECK(col(0, 0) == doctest::Approx(0.5));
    CHECK(col(0, 1) == doctest::Approx(0.5));
    DenseMatrix z = pseudo_inverse(LinearMap(DenseMatrix(2, 3)));
    CHECK(z.rows() == 3);
    CHECK(z.max_abs() == 0.0);
}

TEST_CASE("sqrt_psd examples and errors") {
    CHECK(max_abs_diff(sqrt_psd(DenseMatrix::identity(3)), DenseMatrix::identity(3)) < 1e-14);
    CHECK(max_abs_diff(sqrt_psd(DenseMatrix::diag({4, 9})), DenseMatrix::diag({2, 3})) < 1e-14);
    DenseMatrix s = DenseMatrix::from_rows({{2, 1}, {1, 2}});
    DenseMatrix r = sqrt_psd(s);
    // eigenpairs (3, (1,1)/sqrt2) and (1, (1,-1)/sqrt2)
    CHECK(r(0, 0) == doctest::Approx((std::sqrt(3.0) + 1.0) / 2.0));
    CHECK(r(0, 1) == doctest::Approx((std::sqrt(3.0) - 1.0) / 2.0));
    CHECK(max_abs_diff(matmul(r, r), s) < 1e-12);
    try {
        sqrt_psd(DenseMatrix::from_rows({{1, 2}, {0, 1}}));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotSymmetric);
    }
    try {
        sqrt_psd(DenseMatrix::diag({1, -1}));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPSD);
    }
}

TEST_CASE("weighted inner product examples") {
    CHECK(weighted_dot(InnerProduct::standard(2), {1, 2}, {3, 4}) == 11.0);
    LinearMap inj(DenseMatrix::from_rows({{1, 0}, {1, 1}, {0, 2}}));
    InnerProduct w = InnerProduct::weighted(inj);
    Vector x{0.3, -1.2}, y{2.0, 0.7};
    CHECK(weighted_dot(w, x, y) == doctest::Approx(dot(rcomp::apply(inj, x), rcomp::apply(inj, y))).epsilon(1e-13));
    InnerProduct z = InnerProduct::weighted(LinearMap(DenseMatrix(1, 1)));
    CHECK(weighted_dot(z, {3}, {-2}) == doctest::Approx(-6.0));
}

TEST_CASE("isometry and coisometry classification") {
    const double r = 1.0 / std::sqrt(2.0);
    LinearMap row(DenseMatrix::from_rows({{r, r}}));
    CHECK(row.is_coisometry());
    CHECK_FALSE(row.is_isometry());
    CHECK(row.adjoint().is_isometry());
    CHECK(LinearMap::identity(3).is_identity());
    CHECK_FALSE(LinearMap::scaled_identity(2, 0.5).is_coisometry());
}

TEST_CASE("property: adjoint, norm bound, pseudo-inverse and root identities") {
    Rng rng(42);
    for (int t = 0; t < 50; ++t) {
        std::size_t r = 1 + rng.next() % 5, c = 1 + rng.next() % 5;
        DenseMatrix m = random_matrix(rng, r, c);
        LinearMap l(m);
        Vector x = rng.normal_vector(c), y = rng.normal_vector(r);
        CHECK(std::abs(dot(rcomp::apply(l, x), y) - dot(x, apply_adjoint(l, y))) <= 1e-12);

        double nrm = operator_norm(l);
        for (int k = 0; k < 20; ++k) {
            Vector v = rng.normal_vector(c);
            CHECK(norm(rcomp::apply(l, v)) / norm(v) <= nrm * (1.0 + 1e-8));
        }

        DenseMatrix p = pseudo_inverse(l);
        CHECK(max_abs_diff(matmul(matmul(m, p), m), m) <= 1e-9);
        CHECK(max_abs_diff(matmul(matmul(p, m), p), p) <= 1e-9);

        DenseMatrix s = matmul(m.transpose(), m);
        DenseMatrix root = sqrt_psd(s);
        CHECK(max_abs_diff(matmul(root, root), s) <= 1e-9);
    }
}

TEST_CASE("property: weighted inner product is symmetric and positive") {
    Rng rng(7);
    LinearMap l(DenseMatrix::from_rows({{1, 2, 0}, {0, 1, -1}}));  // nontrivial kernel
    InnerProduct w = InnerProduct::weighted(l);
    for (int t = 0; t < 1000; ++t) {
        Vector x = rng.normal_vector(3), y = rng.normal_vector(3);
        CHECK(std::abs(weighted_dot(w, x, y) - weighted_dot(w, y, x)) <= 1e-12);
        CHECK(weighted_dot(w, x, x) > 0.0);
    }
}

TEST_CASE("rng is pinned and uniform-in-ball stays in the ball") {
    Rng a(123), b(123);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
    SplitMix64 sm(0);
    CHECK(sm.next() == 0xE220A8397B1DCDAFULL);
    Rng r(9);
    for (int i = 0; i < 1000; ++i) CHECK(norm(r.in_ball(3, 2.5)) <= 2.5);
}
