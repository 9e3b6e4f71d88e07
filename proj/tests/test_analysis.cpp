#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "ddsplit/analysis.hpp"
#include "ddsplit/decomposition.hpp"
#include "ddsplit/dense_checks.hpp"
#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"
#include "ddsplit/schemes.hpp"
#include "support.hpp"

using namespace ddsplit;
using namespace testsupport;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("error norms") {
    Grid g = build_grid(2, 2, 1.0, 1.0);
    GridFunction v(g, {1.0, 2.0, 3.0, 4.0});
    auto [z2, zinf] = error_norms(v, v);
    CHECK(z2 == 0.0);
    CHECK(zinf == 0.0);

    GridFunction shifted(g, {2.0, 3.0, 4.0, 5.0});
    auto [e2, einf] = error_norms(v, shifted);
    CHECK_THAT(e2, WithinRel(1.0, 1e-14));
    CHECK(einf == 1.0);

    GridFunction one_node(g, {1.0, 2.0, 3.0, 5.0});
    auto [i2, iinf] = error_norms(v, one_node);
    CHECK_THAT(i2, WithinRel(0.5, 1e-14));  // sqrt(h1 h2)
    CHECK(iinf == 1.0);

    Grid other = build_grid(3, 3, 1.0, 1.0);
    CHECK_THROWS_AS(error_norms(v, GridFunction(other)), std::invalid_argument);

    GridFunction d = error_field(v, shifted);
    for (std::size_t k = 0; k < d.size(); ++k) CHECK(d[k] == 1.0);
}

TEST_CASE("reference solution") {
    CgConfig cfg;

    SECTION("zero problem stays zero") {
        Grid g = build_grid(4, 4, 1.0, 1.0);
        EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
        Forcing zero(g, [](double, double, double) { return 0.0; }, true);
        auto refs = reference_solution(A, GridFunction(g), zero, 0.1, 100, {0.0, 0.05, 0.1}, cfg);
        for (const auto& r : refs) CHECK(norm_inf(r) == 0.0);
    }

    SECTION("single-node ODE approaches 1 - exp(-T)") {
        Grid g = build_grid(1, 1, 1.0, 1.0);
        EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
        Forcing one(g, [](double, double, double) { return 1.0; }, true);
        auto refs = reference_solution(A, GridFunction(g), one, 0.1, 256, {0.1}, cfg);
        CHECK_THAT(refs[0][0], WithinAbs(1.0 - std::exp(-0.1), 1e-8));
    }

    SECTION("checkpoints must sit on the reference grid") {
        Grid g = build_grid(2, 2, 1.0, 1.0);
        EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
        Forcing one(g, [](double, double, double) { return 1.0; }, true);
        CHECK_THROWS_AS(reference_solution(A, GridFunction(g), one, 0.1, 100, {0.0505}, cfg),
                        std::invalid_argument);
        CHECK_THROWS_AS(reference_solution(A, GridFunction(g), one, 0.1, 100, {0.2}, cfg),
                        std::invalid_argument);
    }

    SECTION("halving the reference step barely moves the checkpoints") {
        Grid g = build_grid(16, 16, 1.0, 1.0);
        EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
        Forcing phi = box_forcing(g);
        // tight solver so the drift measures time discretization, not CG noise
        CgConfig tight{1e-12, 1e-16, 20000};
        auto r1 = reference_solution(A, GridFunction(g), phi, 0.1, 25600, {0.05, 0.1}, tight);
        auto r2 = reference_solution(A, GridFunction(g), phi, 0.1, 51200, {0.05, 0.1}, tight);
        for (int c = 0; c < 2; ++c) {
            auto [e2, einf] = error_norms(r1[c], r2[c]);
            CHECK(e2 / norm(r2[c]) < 1e-8);
        }
    }
}

TEST_CASE("convergence study recovers known ODE orders") {
    Grid g = build_grid(1, 1, 1.0, 1.0);
    EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
    Forcing one(g, [](double, double, double) { return 1.0; }, true);
    GridFunction v0(g);
    CgConfig cfg;

    auto implicit = convergence_study(A, v0, one, SchemeKind::two_level_weighted, 1.0, nullptr,
                                      0.1, {8, 16, 32}, 64, cfg);
    CHECK(implicit.rows.size() == 3);
    CHECK(std::isnan(implicit.rows[0].order2));
    CHECK(implicit.fitted_order2 > 0.8);
    CHECK(implicit.fitted_order2 < 1.2);
    for (std::size_t i = 1; i < implicit.rows.size(); ++i) {
        CHECK(implicit.rows[i].order2 > 0.8);
        CHECK(implicit.rows[i].order2 < 1.2);
    }

    auto three = convergence_study(A, v0, one, SchemeKind::three_level_weighted, 0.25, nullptr,
                                   0.1, {8, 16, 32}, 64, cfg);
    CHECK(three.fitted_order2 > 1.8);
    CHECK(three.fitted_order2 < 2.2);

    CHECK_THROWS_AS(convergence_study(A, v0, one, SchemeKind::two_level_weighted, 1.0, nullptr,
                                      0.1, {8, 24}, 64, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(convergence_study(A, v0, one, SchemeKind::ei_diag, 1.0, nullptr, 0.1, {8, 16},
                                      64, cfg),
                    std::invalid_argument);
}

TEST_CASE("decomposition schemes keep the paper's accuracy ordering at desk scale") {
    Grid g = build_grid(16, 16, 1.0, 1.0);
    EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
    Forcing phi = box_forcing(g);
    GridFunction v0(g);
    CgConfig cfg;
    Decomposition D = decompose(g, 2, 2, Flavor::non_overlapping, 0, Coloring::red_black);
    const int N = 100;
    const std::vector<double> checkpoints{0.025, 0.05, 0.075, 0.1};
    auto refs = reference_solution(A, v0, phi, 0.1, 64 * N, checkpoints, cfg);

    auto at_checkpoints = [&](SchemeKind kind, double sigma) {
        std::vector<GridFunction> out;
        TimeGrid tg{0.1, N, sigma};
        if (scheme_is_block(kind)) {
            run_block_scheme(kind, D, A, tg, v0, phi, cfg, {}, [&](int n, const BlockVector& w) {
                if (n == N / 4 || n == N / 2 || n == 3 * N / 4 || n == N) out.push_back(D.extend(w));
            });
        } else {
            run_scalar_scheme(kind, A, tg, v0, phi, cfg, [&](int n, const GridFunction& y) {
                if (n == N / 4 || n == N / 2 || n == 3 * N / 4 || n == N) out.push_back(y);
            });
        }
        return out;
    };

    auto impl = at_checkpoints(SchemeKind::two_level_weighted, 1.0);
    auto ei = at_checkpoints(SchemeKind::ei_diag, 1.0);
    auto tld = at_checkpoints(SchemeKind::three_level_diag, 0.5);

    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        const double e_impl = error_norms(impl[c], refs[c]).first;
        const double e_ei = error_norms(ei[c], refs[c]).first;
        const double e_tld = error_norms(tld[c], refs[c]).first;
        CHECK(e_ei > e_impl);  // decomposition costs accuracy
        CHECK(e_tld < e_ei);   // the three-level variant wins it back
    }
}

TEST_CASE("energy monitor") {
    Grid g = build_grid(16, 16, 1.0, 1.0);
    EllipticOperator A = assemble(g, constant_coefficients(1.0, 1.0));
    Forcing phi = box_forcing(g);
    CgConfig cfg;
    TimeGrid tg{0.1, 50, 1.0};

    SECTION("zero data and forcing pass with zero margins") {
        Forcing zero(g, [](double, double, double) { return 0.0; }, true);
        auto traj = scalar_trajectory(SchemeKind::two_level_weighted, A, tg, GridFunction(g), zero, cfg);
        auto res = energy_monitor(TheoremId::two_level_weighted, traj, A, tg, zero);
        CHECK(res.pass);
        for (double l : res.lhs) CHECK(l == 0.0);
    }

    SECTION("the implicit run of the test problem passes") {
        auto traj = scalar_trajectory(SchemeKind::two_level_weighted, A, tg, GridFunction(g), phi, cfg);
        auto res = energy_monitor(TheoremId::two_level_weighted, traj, A, tg, phi);
        CHECK(res.pass);
        CHECK(res.max_violation == 0.0);
    }

    SECTION("a corrupted trajectory fails") {
        auto traj = scalar_trajectory(SchemeKind::two_level_weighted, A, tg, GridFunction(g), phi, cfg);
        for (auto& x : traj[tg.N / 2].values()) x *= 10.0;
        auto res = energy_monitor(TheoremId::two_level_weighted, traj, A, tg, phi);
        CHECK_FALSE(res.pass);
        CHECK(res.max_violation > 0.0);
    }

    SECTION("mismatched trajectory length or unknown pairing is rejected") {
        auto traj = scalar_trajectory(SchemeKind::two_level_weighted, A, tg, GridFunction(g), phi, cfg);
        traj.pop_back();
        CHECK_THROWS_AS(energy_monitor(TheoremId::two_level_weighted, traj, A, tg, phi),
                        std::invalid_argument);
        traj.push_back(traj.back());
        CHECK_THROWS_AS(energy_monitor(TheoremId::ei_diag, traj, A, tg, phi), std::invalid_argument);
    }
}

TEST_CASE("dense operator inequality checks") {
    Grid g = build_grid(4, 4, 1.0, 1.0);
    CoefficientField coeff = constant_coefficients(1.0, 1.0);

    SECTION("red-black thresholds on the 4x4 grid") {
        Decomposition D = decompose(g, 2, 2, Flavor::non_overlapping, 0, Coloring::red_black);
        auto rep = check_operator_inequalities(g, coeff, D, 1.0, 0.01);
        CHECK(rep.p == 2);
        CHECK(rep.max_asym_A <= 1e-13);
        CHECK(rep.max_asym_blockA <= 1e-13);
        CHECK(rep.min_eig_A_minus_c1 >= -1e-10);
        CHECK(rep.min_eig_blockA > 0.0);
        CHECK(rep.min_eig_A0_minus_Ap >= -1e-10);
        CHECK(rep.min_eig_C3 >= -1e-12);            // sigma = 1 = p/2
        CHECK(rep.min_eig_C3_threshold >= -1e-12);
        CHECK(rep.min_eig_C6_threshold >= -1e-15);
        CHECK(rep.max_diff_A1T_A2 <= 1e-13);
    }

    SECTION("p = 1 collapses the inequalities to equalities") {
        Decomposition D = decompose(g, 1, 1, Flavor::non_overlapping);
        auto rep = check_operator_inequalities(g, coeff, D, 0.5, 0.01);
        CHECK(rep.p == 1);
        CHECK(std::abs(rep.min_eig_A0_minus_Ap) <= 1e-12);
        CHECK(rep.max_diff_A1T_A2 <= 1e-13);
    }

    SECTION("large grids are refused") {
        Grid big = build_grid(7, 6, 1.0, 1.0);
        Decomposition D = decompose(big, 2, 2, Flavor::non_overlapping);
        CHECK_THROWS_AS(check_operator_inequalities(big, coeff, D, 1.0, 0.01),
                        std::invalid_argument);
    }
}

TEST_CASE("interface mass fraction") {
    Grid g = build_grid(16, 16, 1.0, 1.0);
    Decomposition D = decompose(g, 2, 2, Flavor::non_overlapping);

    SECTION("uniform field gives the band's node share") {
        GridFunction uniform(g, 1.0);
        // cuts at 8 in both directions; 8 of 16 indices lie within 4 layers
        const double share = 1.0 - 0.5 * 0.5;  // complement of (far in i) x (far in j)
        CHECK_THAT(interface_mass_fraction(D, uniform, 4), WithinRel(share, 1e-12));
    }

    SECTION("interface-supported field gives one, far field gives zero") {
        GridFunction on_cut(g);
        for (int j = 1; j <= 16; ++j) on_cut.at(8, j) = 1.0;
        CHECK(interface_mass_fraction(D, on_cut, 1) == 1.0);

        GridFunction corner(g);
        corner.at(1, 1) = 1.0;
        CHECK(interface_mass_fraction(D, corner, 4) == 0.0);
        CHECK(interface_mass_fraction(D, GridFunction(g), 4) == 0.0);
    }
}

TEST_CASE("report serialization") {
    SECTION("error report csv") {
        ErrorReport rep;
        rep.records = {{0.05, 0.25, 0.5}, {0.1, 0.125, 0.25}};
        std::ostringstream os;
        rep.write_csv(os);
        CHECK(os.str() ==
              "t,eps2,epsinf\n"
              "0.05,0.25,0.5\n"
              "0.1,0.125,0.25\n");
    }
    SECTION("convergence table csv") {
        ConvergenceTable t;
        ConvergenceRow r0;
        r0.N = 8;
        r0.tau = 0.0125;
        r0.eps2 = 0.5;
        r0.epsinf = 1.0;
        ConvergenceRow r1 = r0;
        r1.N = 16;
        r1.tau = 0.00625;
        r1.eps2 = 0.25;
        r1.epsinf = 0.5;
        r1.order2 = 1.0;
        r1.orderinf = 1.0;
        t.rows = {r0, r1};
        std::ostringstream os;
        t.write_csv(os);
        CHECK(os.str() ==
              "N,tau,eps2,epsinf,order2,orderinf\n"
              "8,0.0125,0.5,1,,\n"
              "16,0.00625,0.25,0.5,1,1\n");
    }
}
