#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"

using namespace ddsplit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("build_grid places nodes at cell centers") {
    Grid g = build_grid(2, 2, 1.0, 1.0);
    CHECK(g.h1 == 0.5);
    CHECK(g.h2 == 0.5);
    CHECK(g.x1(1) == 0.25);
    CHECK(g.x2(1) == 0.25);
    CHECK(g.x1(2) == 0.75);
    CHECK(g.x2(2) == 0.75);

    Grid s = build_grid(1, 1, 1.0, 1.0);
    CHECK(s.x1(1) == 0.5);
    CHECK(s.x2(1) == 0.5);

    Grid r = build_grid(4, 2, 2.0, 1.0);
    CHECK(r.h1 == 0.5);
    CHECK(r.h2 == 0.5);
    CHECK(r.x1(1) == 0.25);
    CHECK(r.x2(1) == 0.25);
    CHECK(r.x1(4) == 2.0 - 0.25);

    // first and last nodes stay half a step inside the rectangle
    Grid t = build_grid(7, 3, 2.5, 0.7);
    CHECK_THAT(t.h1 * t.n1, WithinRel(t.l1, 1e-15));
    CHECK_THAT(t.h2 * t.n2, WithinRel(t.l2, 1e-15));
    CHECK(t.x1(1) > 0.0);
    CHECK(t.x1(t.n1) < t.l1);
    CHECK(t.x2(t.n2) < t.l2);
}

TEST_CASE("build_grid rejects degenerate input") {
    CHECK_THROWS_AS(build_grid(0, 1, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, -2, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, 1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, 1, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("inner product is the h1 h2 weighted sum") {
    for (auto [n1, n2] : {std::pair{1, 1}, {2, 2}, {5, 3}}) {
        Grid g = build_grid(n1, n2, 1.0, 1.0);
        GridFunction ones(g, 1.0);
        CHECK_THAT(inner_product(ones, ones), WithinRel(1.0, 1e-14));
    }
    Grid g = build_grid(2, 2, 1.0, 1.0);
    GridFunction v(g, 1.0), z(g);
    CHECK(inner_product(v, z) == 0.0);

    GridFunction e(g);
    e.at(2, 1) = 1.0;
    CHECK_THAT(inner_product(e, v), WithinAbs(0.25, 1e-16));

    Grid other = build_grid(3, 2, 1.0, 1.0);
    GridFunction w(other, 1.0);
    CHECK_THROWS_AS(inner_product(v, w), std::invalid_argument);
}

TEST_CASE("norm_inf") {
    Grid g = build_grid(2, 2, 1.0, 1.0);
    CHECK(norm_inf(GridFunction(g)) == 0.0);
    GridFunction v(g, {1.0, -3.0, 2.0, 0.0});
    CHECK(norm_inf(v) == 3.0);
    GridFunction c(g, -2.5);
    CHECK(norm_inf(c) == 2.5);
}

TEST_CASE("inner product is symmetric and bilinear") {
    Grid g = build_grid(6, 5, 2.0, 1.5);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto random_fn = [&] {
        GridFunction v(g);
        for (auto& x : v.values()) x = dist(rng);
        return v;
    };
    for (int rep = 0; rep < 20; ++rep) {
        GridFunction u = random_fn(), v = random_fn(), w = random_fn();
        const double a = dist(rng), b = dist(rng);
        CHECK_THAT(inner_product(u, v), WithinRel(inner_product(v, u), 1e-13));
        GridFunction lin(g);
        for (std::size_t k = 0; k < lin.size(); ++k) lin[k] = a * u[k] + b * v[k];
        const double lhs = inner_product(lin, w);
        const double rhs = a * inner_product(u, w) + b * inner_product(v, w);
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-13 * (1.0 + std::abs(lhs))));
    }
}

TEST_CASE("energy norm agrees with the A-weighted product") {
    Grid g = build_grid(4, 4, 1.0, 1.0);
    EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));

    CHECK(energy_norm(GridFunction(g), A) == 0.0);

    GridFunction ones(g, 1.0);
    CHECK_THAT(energy_norm(ones, A), WithinRel(1.0, 1e-13));

    Grid single = build_grid(1, 1, 1.0, 1.0);
    EllipticOperator As = assemble(single, constant_coefficients(1.0, 1.0));
    GridFunction v1(single, {3.0});
    CHECK_THAT(energy_norm(v1, As), WithinRel(norm(v1), 1e-14));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        GridFunction v(g);
        for (auto& x : v.values()) x = dist(rng);
        const GridFunction av = A.apply(v);
        double q = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) q += av[k] * v[k];
        q *= g.cell_area();
        const double en = energy_norm(v, A);
        CHECK_THAT(en * en, WithinRel(q, 1e-12));
    }
}

TEST_CASE("energy norm rejects operators that are not nonnegative") {
    Grid g = build_grid(2, 2, 1.0, 1.0);
    GridFunction v(g, 1.0);
    auto negate = [](const GridFunction& u) {
        GridFunction w(u.grid());
        for (std::size_t k = 0; k < u.size(); ++k) w[k] = -u[k];
        return w;
    };
    CHECK_THROWS_AS(energy_norm(v, negate), std::invalid_argument);
}

TEST_CASE("grid function csv layout") {
    Grid g = build_grid(2, 1, 1.0, 2.0);
    GridFunction v(g, {1.5, -2.0});
    std::ostringstream os;
    write_csv(os, v);
    CHECK(os.str() ==
          "i,j,x1,x2,value\n"
          "1,1,0.25,1,1.5\n"
          "2,1,0.75,1,-2\n");
}
