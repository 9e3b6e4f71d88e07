#pragma once

// shared helpers for the scheme/analysis test suites

#include <cmath>
#include <random>
#include <vector>

#include "ddsplit/decomposition.hpp"
#include "ddsplit/grid.hpp"
#include "ddsplit/schemes.hpp"

namespace testsupport {

inline ddsplit::GridFunction random_fn(const ddsplit::Grid& g, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ddsplit::GridFunction v(g);
    for (auto& x : v.values()) x = dist(rng);
    return v;
}

inline ddsplit::BlockVector random_block(const ddsplit::Decomposition& D, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ddsplit::BlockVector v = D.zero_block_vector();
    for (auto& x : v.data()) x = dist(rng);
    return v;
}

/// Time-independent forcing that reproduces a grid function at the nodes.
inline ddsplit::Forcing forcing_from_grid(const ddsplit::GridFunction& v) {
    const ddsplit::Grid g = v.grid();
    const std::vector<double> vals = v.values();
    return ddsplit::Forcing(
        g,
        [g, vals](double x1, double x2, double) {
            const int i = static_cast<int>(std::lround(x1 / g.h1 + 0.5));
            const int j = static_cast<int>(std::lround(x2 / g.h2 + 0.5));
            return vals[g.index(i, j)];
        },
        true);
}

/// The test problem forcing: 25 on [0.5,0.75] x [0,0.75], zero elsewhere.
inline ddsplit::Forcing box_forcing(const ddsplit::Grid& g) {
    return ddsplit::Forcing(
        g,
        [](double x1, double x2, double) {
            return (x1 >= 0.5 && x1 <= 0.75 && x2 >= 0.0 && x2 <= 0.75) ? 25.0 : 0.0;
        },
        true);
}

inline std::vector<ddsplit::GridFunction> scalar_trajectory(
    ddsplit::SchemeKind kind, const ddsplit::EllipticOperator& A, const ddsplit::TimeGrid& tg,
    const ddsplit::GridFunction& v0, const ddsplit::Forcing& phi, const ddsplit::CgConfig& cfg) {
    std::vector<ddsplit::GridFunction> out;
    out.reserve(tg.N + 1);
    ddsplit::run_scalar_scheme(kind, A, tg, v0, phi, cfg,
                               [&](int, const ddsplit::GridFunction& y) { out.push_back(y); });
    return out;
}

inline std::vector<ddsplit::BlockVector> block_trajectory(
    ddsplit::SchemeKind kind, const ddsplit::Decomposition& D, const ddsplit::EllipticOperator& A,
    const ddsplit::TimeGrid& tg, const ddsplit::GridFunction& v0, const ddsplit::Forcing& phi,
    const ddsplit::CgConfig& cfg, const ddsplit::ExecPolicy& exec = {}) {
    std::vector<ddsplit::BlockVector> out;
    out.reserve(tg.N + 1);
    ddsplit::run_block_scheme(kind, D, A, tg, v0, phi, cfg, exec,
                              [&](int, const ddsplit::BlockVector& w) { out.push_back(w); });
    return out;
}

}  // namespace testsupport
