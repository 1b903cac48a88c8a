#include <doctest.h>

#include <cmath>

#include "manifold_gauge/linalg.hpp"
#include "manifold_gauge/parallel.hpp"
#include "oracles.hpp"

using namespace mgauge;

TEST_CASE("unit normalizes and rejects vanishing vectors") {
    const Vector u = unit(Vector{3.0, 4.0});
    CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-15));

    const Vector again = unit(u);
    CHECK(std::abs(again[0] - u[0]) < 1e-15);
    CHECK(std::abs(again[1] - u[1]) < 1e-15);

    try {
        (void)unit(Vector{0.0, 0.0});
        FAIL("expected DegenerateVector");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateVector);
    }
}

TEST_CASE("unit output has norm one within 1e-12 on random vectors") {
    oracle::Draws draws(11);
    for (int t = 0; t < 200; ++t) {
        const auto v = draws.vec(1 + static_cast<std::size_t>(t % 40));
        CHECK(std::abs(static_cast<double>(oracle::norm(unit(v))) - 1.0) < 1e-12);
    }
}

TEST_CASE("weighted inner product") {
    CHECK(weighted_inner(Vector{1, 1}, Vector{1, 1}, Vector{2, 0}) == 4.0);

    oracle::Draws draws(3);
    const auto a = draws.vec(64), b = draws.vec(64), g = draws.vec(64);
    const Vector ones(64, 1.0);
    CHECK(weighted_inner(a, b, ones) == doctest::Approx(static_cast<double>(oracle::dot(a, b))));

    long double expect = 0;
    for (std::size_t k = 0; k < a.size(); ++k) expect += static_cast<long double>(g[k]) * g[k] * a[k] * b[k];
    CHECK(std::abs(weighted_inner(a, b, g) - static_cast<double>(expect)) < 1e-12);

    const Metric m = Metric::weighted(g);
    CHECK(m.is_weighted());
    CHECK(std::abs(m.inner(a, b) - static_cast<double>(expect)) < 1e-12);
    CHECK(m.norm(a) == doctest::Approx(std::sqrt(m.inner(a, a))));

    try {
        (void)weighted_inner(a, Vector(3, 0.0), g);
        FAIL("expected length mismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
}

TEST_CASE("vector helpers") {
    const Vector a{1, 2, 3}, b{4, 5, 6};
    CHECK(add(a, b) == Vector{5, 7, 9});
    CHECK(sub(b, a) == Vector{3, 3, 3});
    CHECK(scaled(a, 2.0) == Vector{2, 4, 6});
    Vector y = b;
    axpy(-1.0, a, y);
    CHECK(y == Vector{3, 3, 3});
    CHECK(dot(a, b) == 32.0);
}

TEST_CASE("unit_rows names the degenerate row") {
    Matrix m(3, 2);
    m(0, 0) = 1;
    m(2, 1) = 1;
    try {
        (void)unit_rows(m);
        FAIL("expected DegenerateVector");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateVector);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("rows_subset keeps requested rows in order") {
    Matrix m(4, 2);
    for (std::size_t i = 0; i < 4; ++i) m(i, 0) = static_cast<double>(i);
    const std::vector<std::size_t> keep{3, 1};
    const Matrix s = rows_subset(m, keep);
    REQUIRE(s.rows() == 2);
    CHECK(s(0, 0) == 3.0);
    CHECK(s(1, 0) == 1.0);
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);

    CHECK_THROWS_AS(parallel_for(10,
                                 [](std::size_t i) {
                                     if (i == 7) throw Error(ErrorKind::Io, "boom");
                                 }),
                    Error);
}
