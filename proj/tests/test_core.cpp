#include "capalloc/core.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "capalloc/rng.hpp"
#include "support/test_oracles.hpp"

using namespace capalloc;
using Catch::Approx;

TEST_CASE("project_to_simplex leaves valid allocations unchanged") {
    const Allocation a = project_to_simplex({0.2, 0.3, 0.5});
    CHECK(a[0] == Approx(0.2));
    CHECK(a[1] == Approx(0.3));
    CHECK(a[2] == Approx(0.5));
}

TEST_CASE("project_to_simplex matches the active-set QP oracle on pinned cases") {
    SECTION("all mass collapses to the dominant coordinate") {
        const Vec oracle = testoracle::qp_project_simplex({2.0, 0.0, 0.0});
        REQUIRE(oracle[0] == Approx(1.0).margin(1e-12));
        const Allocation a = project_to_simplex({2.0, 0.0, 0.0});
        CHECK(a[0] == Approx(1.0).margin(1e-12));
        CHECK(a[1] == Approx(0.0).margin(1e-12));
        CHECK(a[2] == Approx(0.0).margin(1e-12));
    }
    SECTION("threshold tau = 0.1 over the top-2 support") {
        const Vec oracle = testoracle::qp_project_simplex({0.5, 0.7, -0.2});
        REQUIRE(oracle[0] == Approx(0.4).margin(1e-12));
        REQUIRE(oracle[1] == Approx(0.6).margin(1e-12));
        REQUIRE(oracle[2] == Approx(0.0).margin(1e-12));
        const Allocation a = project_to_simplex({0.5, 0.7, -0.2});
        CHECK(a[0] == Approx(0.4).margin(1e-12));
        CHECK(a[1] == Approx(0.6).margin(1e-12));
        CHECK(a[2] == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("project_to_simplex agrees with the QP oracle on random vectors") {
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(5);
        Vec v(n);
        for (double& x : v) x = rng.uniform(-3.0, 3.0);
        const Allocation a = project_to_simplex(v);
        const Vec oracle = testoracle::qp_project_simplex(v);
        for (std::size_t i = 0; i < n; ++i) REQUIRE(a[i] == Approx(oracle[i]).margin(1e-9));
    }
}

TEST_CASE("projection minimizes distance against a fine simplex grid, |C| <= 3") {
    Rng rng(7);
    const int res = 200;
    for (int trial = 0; trial < 20; ++trial) {
        Vec v(3);
        for (double& x : v) x = rng.uniform(-2.0, 2.0);
        const Allocation a = project_to_simplex(v);
        double proj_dist = 0.0;
        for (std::size_t i = 0; i < 3; ++i) proj_dist += (a[i] - v[i]) * (a[i] - v[i]);

        double best_grid = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= res; ++i)
            for (int j = 0; i + j <= res; ++j) {
                const double x0 = double(i) / res, x1 = double(j) / res, x2 = 1.0 - x0 - x1;
                const double d = (x0 - v[0]) * (x0 - v[0]) + (x1 - v[1]) * (x1 - v[1]) +
                                 (x2 - v[2]) * (x2 - v[2]);
                best_grid = std::min(best_grid, d);
            }
        // The best grid point never beats the projection by more than the
        // grid resolution allows.
        CHECK(proj_dist <= best_grid + 1e-12);
        CHECK(best_grid <= proj_dist + 3.0 / res);
    }
}

TEST_CASE("project_to_simplex is idempotent") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Vec v(4);
        for (double& x : v) x = rng.uniform(-2.0, 2.0);
        const Allocation once = project_to_simplex(v);
        const Allocation twice = project_to_simplex(once.weights());
        for (std::size_t i = 0; i < 4; ++i) REQUIRE(twice[i] == Approx(once[i]).margin(1e-12));
    }
}

TEST_CASE("project_to_simplex rejects bad input") {
    CHECK_THROWS_AS(project_to_simplex({}), DimensionError);
    CHECK_THROWS_AS(project_to_simplex({1.0, std::nan("")}), std::domain_error);
    CHECK_THROWS_AS(project_to_simplex({std::numeric_limits<double>::infinity()}),
                    std::domain_error);
}

TEST_CASE("one_hot") {
    const Allocation a = one_hot(1, 3);
    CHECK(a.weights() == Vec{0.0, 1.0, 0.0});
    CHECK(one_hot(0, 1).weights() == Vec{1.0});
    const Allocation b = one_hot(7, 8);
    CHECK(b[7] == 1.0);
    for (std::size_t i = 0; i < 7; ++i) CHECK(b[i] == 0.0);
    CHECK_THROWS_AS(one_hot(3, 3), DimensionError);
}

TEST_CASE("entropy values and extremes") {
    CHECK(entropy(Allocation(Vec(8, 0.125))) == Approx(std::log(8.0)).epsilon(1e-12));
    CHECK(entropy(one_hot(2, 5)) == 0.0);
    CHECK(entropy(Allocation({0.5, 0.5, 0.0, 0.0})) == Approx(std::log(2.0)).epsilon(1e-12));

    // Uniform maximizes entropy; one-hots are the only zeros.
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Allocation a = project_to_simplex(
            {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
        CHECK(entropy(a) <= std::log(4.0) + 1e-12);
        CHECK(entropy(a) >= 0.0);
    }
}

TEST_CASE("Allocation invariants are enforced") {
    CHECK_THROWS_AS(Allocation(Vec{}), DimensionError);
    CHECK_THROWS_AS(Allocation({0.5, 0.6}), std::domain_error);       // sum != 1
    CHECK_THROWS_AS(Allocation({1.2, -0.2}), std::domain_error);     // negative
    CHECK_NOTHROW(Allocation({0.5, 0.5 + 5e-10}));                   // inside tolerance
    const Allocation n = Allocation::normalized({2.0, 2.0});
    CHECK(n[0] == Approx(0.5));
}

TEST_CASE("Budget conserves spent mass over deduction sequences") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        Budget b(100.0);
        double spent = 0.0;
        while (b.remaining() > 1.0) {
            const double cost = rng.uniform(0.0, 1.0);
            b.spend(cost);
            spent += cost;
        }
        CHECK(b.total() - b.remaining() == Approx(spent).epsilon(1e-9));
        CHECK(b.remaining() >= 0.0);
    }
    Budget b(1.0);
    CHECK_THROWS_AS(b.spend(2.0), std::domain_error);
    CHECK_THROWS_AS(b.spend(-0.1), std::domain_error);
}

TEST_CASE("Matrix apply and transpose apply") {
    const Matrix m = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    CHECK(m.apply({1.0, 1.0}) == Vec{3.0, 7.0});
    CHECK(m.apply_transposed({1.0, 1.0}) == Vec{4.0, 6.0});
    CHECK_THROWS_AS(m.apply({1.0}), DimensionError);
}
