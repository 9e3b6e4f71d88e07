#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ddsplit/cg.hpp"
#include "ddsplit/decomposition.hpp"
#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"

namespace ddsplit {

/// Uniform time grid t^n = n*tau with the scheme weight sigma.
struct TimeGrid {
    double T = 0.0;
    int N = 0;
    double sigma = 1.0;
    double tau() const { return T / N; }
};

inline void validate_time_grid(const TimeGrid& tg) {
    if (tg.N < 1) throw std::invalid_argument("TimeGrid: N must be >= 1");
    if (!(tg.T > 0.0)) throw std::invalid_argument("TimeGrid: T must be > 0");
}

/// Right-hand side f(x,t) sampled on the grid. Time-independent forcings are
/// sampled once and cached.
class Forcing {
public:
    Forcing(const Grid& g, std::function<double(double, double, double)> f,
            bool time_independent = false)
        : grid_(g), f_(std::move(f)), time_independent_(time_independent) {
        if (time_independent_) cached_ = sample_at(0.0);
    }

    GridFunction operator()(double t) const { return time_independent_ ? *cached_ : sample_at(t); }

    /// phi^{n+sigma} = sigma*phi(t1) + (1-sigma)*phi(t0).
    GridFunction weighted(double t0, double t1, double sigma) const {
        if (time_independent_) return *cached_;
        GridFunction p0 = sample_at(t0), p1 = sample_at(t1);
        for (std::size_t k = 0; k < p0.size(); ++k) p0[k] = sigma * p1[k] + (1.0 - sigma) * p0[k];
        return p0;
    }

    const Grid& grid() const { return grid_; }
    bool time_independent() const { return time_independent_; }

private:
    GridFunction sample_at(double t) const {
        GridFunction phi(grid_);
        for (int j = 1; j <= grid_.n2; ++j)
            for (int i = 1; i <= grid_.n1; ++i) phi.at(i, j) = f_(grid_.x1(i), grid_.x2(j), t);
        return phi;
    }

    Grid grid_;
    std::function<double(double, double, double)> f_;
    bool time_independent_;
    std::optional<GridFunction> cached_;
};

/// Execution policy for the independent per-subdomain solves.
struct ExecPolicy {
    int threads = 1;
};

namespace detail {

inline std::vector<double> scalar_shifted_diag(const EllipticOperator& A, double gamma) {
    std::vector<double> d = A.diagonal();
    for (double& x : d) x = 1.0 + gamma * x;
    return d;
}

// diagonal of I + gamma * R_a A R*_a
inline std::vector<double> block_shifted_diag(const Decomposition& D, const EllipticOperator& A,
                                              int a, double gamma) {
    const auto& nd = D.nodes(a);
    const auto& w = D.weights(a);
    const auto& adiag = A.diagonal();
    std::vector<double> d(nd.size());
    for (std::size_t k = 0; k < nd.size(); ++k) d[k] = 1.0 + gamma * w[k] * w[k] * adiag[nd[k]];
    return d;
}

inline std::vector<double> solve_diag_block(const Decomposition& D, const EllipticOperator& A,
                                            int a, double gamma, std::span<const double> rhs,
                                            std::span<const double> x0, const CgConfig& cfg) {
    std::vector<double> scratch(D.grid().size(), 0.0);
    const std::size_t m = rhs.size();
    auto apply = [&](const double* x, double* y) {
        diag_block_apply(D, A, a, std::span<const double>(x, m), std::span<double>(y, m), scratch);
    };
    const std::vector<double> diag = block_shifted_diag(D, A, a, gamma);
    return solve_shifted(apply, gamma, std::vector<double>(rhs.begin(), rhs.end()),
                         std::vector<double>(x0.begin(), x0.end()), cfg, &diag);
}

// p independent solves (I + gamma R_a A R*_a) x_a = rhs_a
inline BlockVector solve_all_diag_blocks(const Decomposition& D, const EllipticOperator& A,
                                         double gamma, const BlockVector& rhs, const BlockVector& x0,
                                         const CgConfig& cfg, const ExecPolicy& exec) {
    const int p = D.subdomains();
    BlockVector out = D.zero_block_vector();
    if (exec.threads > 1 && p > 1) {
        std::vector<std::future<std::vector<double>>> futures(p);
        for (int a = 0; a < p; ++a)
            futures[a] = std::async(std::launch::async, [&, a] {
                return solve_diag_block(D, A, a, gamma, rhs.component(a), x0.component(a), cfg);
            });
        for (int a = 0; a < p; ++a) {
            std::vector<double> xa = futures[a].get();
            auto comp = out.component(a);
            std::copy(xa.begin(), xa.end(), comp.begin());
        }
    } else {
        for (int a = 0; a < p; ++a) {
            std::vector<double> xa = solve_diag_block(D, A, a, gamma, rhs.component(a),
                                                      x0.component(a), cfg);
            auto comp = out.component(a);
            std::copy(xa.begin(), xa.end(), comp.begin());
        }
    }
    return out;
}

inline void apply_block_full_raw(const Decomposition& D, const EllipticOperator& A,
                                 const std::vector<std::size_t>& offsets, const double* x, double* y,
                                 std::vector<double>& g1, std::vector<double>& g2) {
    std::fill(g1.begin(), g1.end(), 0.0);
    for (int a = 0; a < D.subdomains(); ++a) {
        const auto& nd = D.nodes(a);
        const auto& w = D.weights(a);
        const double* xa = x + offsets[a];
        for (std::size_t k = 0; k < nd.size(); ++k) g1[nd[k]] += w[k] * xa[k];
    }
    A.apply_raw(g1.data(), g2.data());
    for (int a = 0; a < D.subdomains(); ++a) {
        const auto& nd = D.nodes(a);
        const auto& w = D.weights(a);
        double* ya = y + offsets[a];
        for (std::size_t k = 0; k < nd.size(); ++k) ya[k] = w[k] * g2[nd[k]];
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// scalar schemes
// ---------------------------------------------------------------------------

namespace detail {

inline GridFunction two_level_step(const EllipticOperator& A, const GridFunction& y, double t,
                                   double tau, double sigma, const Forcing& phi, const CgConfig& cfg) {
    require_same_grid(y.grid(), A.grid(), "two_level_step");
    const GridFunction ay = A.apply(y);
    const GridFunction f = phi.weighted(t, t + tau, sigma);
    std::vector<double> rhs(y.size());
    for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs[k] = y[k] - (1.0 - sigma) * tau * ay[k] + tau * f[k];
    const double gamma = sigma * tau;
    const std::vector<double> diag = scalar_shifted_diag(A, gamma);
    auto x = solve_shifted([&](const double* in, double* out) { A.apply_raw(in, out); }, gamma, rhs,
                           y.values(), cfg, &diag);
    return GridFunction(y.grid(), std::move(x));
}

}  // namespace detail

/// One step of (y^{n+1}-y^n)/tau + A(sigma y^{n+1} + (1-sigma) y^n) = phi^{n+sigma}.
/// sigma = 1 is the implicit scheme, sigma = 1/2 Crank-Nicolson.
inline GridFunction step_two_level_weighted(const EllipticOperator& A, const GridFunction& y,
                                            double t, const TimeGrid& tg, const Forcing& phi,
                                            const CgConfig& cfg) {
    if (tg.sigma < 0.0 || tg.sigma > 1.0)
        throw std::invalid_argument("step_two_level_weighted: sigma must be in [0,1]");
    return detail::two_level_step(A, y, t, tg.tau(), tg.sigma, phi, cfg);
}

/// Crank-Nicolson step producing the second initial level of the three-level
/// schemes.
inline GridFunction bootstrap_first_level(const EllipticOperator& A, const GridFunction& y0,
                                          const TimeGrid& tg, const Forcing& phi, const CgConfig& cfg) {
    return detail::two_level_step(A, y0, 0.0, tg.tau(), 0.5, phi, cfg);
}

/// One step of (y^{n+1}-y^{n-1})/(2 tau)
///   + A(sigma y^{n+1} + (1-2 sigma) y^n + sigma y^{n-1}) = phi^n,
/// solved as (I + 2 tau sigma A) y^{n+1} = rhs. t is the current level time t^n.
inline GridFunction step_three_level_weighted(const EllipticOperator& A, const GridFunction& y_prev,
                                              const GridFunction& y_curr, double t, const TimeGrid& tg,
                                              const Forcing& phi, const CgConfig& cfg) {
    require_same_grid(y_prev.grid(), y_curr.grid(), "step_three_level_weighted");
    const double tau = tg.tau(), sigma = tg.sigma;
    GridFunction mix(y_curr.grid());
    for (std::size_t k = 0; k < mix.size(); ++k)
        mix[k] = (1.0 - 2.0 * sigma) * y_curr[k] + sigma * y_prev[k];
    const GridFunction amix = A.apply(mix);
    const GridFunction f = phi(t);
    std::vector<double> rhs(mix.size());
    for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs[k] = y_prev[k] - 2.0 * tau * amix[k] + 2.0 * tau * f[k];
    const double gamma = 2.0 * tau * sigma;
    const std::vector<double> diag = detail::scalar_shifted_diag(A, gamma);
    auto x = solve_shifted([&](const double* in, double* out) { A.apply_raw(in, out); }, gamma, rhs,
                           y_curr.values(), cfg, &diag);
    return GridFunction(y_curr.grid(), std::move(x));
}

// ---------------------------------------------------------------------------
// block (solution decomposition) schemes
// ---------------------------------------------------------------------------

/// One step of the vector scheme
///   (y^{n+1}-y^n)/tau + bold-A(sigma y^{n+1} + (1-sigma) y^n) = phi^{n+sigma},
/// solved by CG on the full block operator.
inline BlockVector step_vector_weighted(const Decomposition& D, const EllipticOperator& A,
                                        const BlockVector& y, double t, const TimeGrid& tg,
                                        const Forcing& phi, const CgConfig& cfg) {
    D.require_shape(y, "step_vector_weighted");
    const double tau = tg.tau(), sigma = tg.sigma;
    const BlockVector ay = apply_block_full(D, A, y);
    const BlockVector f = D.restrict(phi.weighted(t, t + tau, sigma));
    BlockVector rhs = D.zero_block_vector();
    for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs.data()[k] = y.data()[k] - (1.0 - sigma) * tau * ay.data()[k] + tau * f.data()[k];

    const double gamma = sigma * tau;
    std::vector<double> g1(D.grid().size()), g2(D.grid().size());
    const auto& offsets = rhs.offsets();
    auto apply = [&](const double* x, double* out) {
        detail::apply_block_full_raw(D, A, offsets, x, out, g1, g2);
    };
    std::vector<double> diag;
    diag.reserve(rhs.size());
    for (int a = 0; a < D.subdomains(); ++a) {
        auto da = detail::block_shifted_diag(D, A, a, gamma);
        diag.insert(diag.end(), da.begin(), da.end());
    }
    auto x = solve_shifted(apply, gamma, rhs.data(), y.data(), cfg, &diag);
    BlockVector out = D.zero_block_vector();
    out.data() = std::move(x);
    return out;
}

/// One step of the explicit-implicit scheme with the diagonal part A0 implicit:
///   (w^{n+1}-w^n)/tau + A0(sigma w^{n+1} + (1-sigma) w^n) + (A - A0) w^n = phi^{n+1},
/// i.e. p independent solves (I + sigma tau R_a A R*_a) w_a^{n+1} = rhs_a.
inline BlockVector step_explicit_implicit_diag(const Decomposition& D, const EllipticOperator& A,
                                               const BlockVector& w, double t, const TimeGrid& tg,
                                               const Forcing& phi, const CgConfig& cfg,
                                               const ExecPolicy& exec = {}) {
    D.require_shape(w, "step_explicit_implicit_diag");
    const double tau = tg.tau(), sigma = tg.sigma;
    const BlockVector aw = apply_block_full(D, A, w);
    const BlockVector a0w = apply_block_diag(D, A, w);
    const BlockVector f = D.restrict(phi(t + tau));
    BlockVector rhs = D.zero_block_vector();
    for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs.data()[k] = w.data()[k] - tau * aw.data()[k] + sigma * tau * a0w.data()[k] +
                        tau * f.data()[k];
    return detail::solve_all_diag_blocks(D, A, sigma * tau, rhs, w, cfg, exec);
}

/// One step of the factorized alternating-triangular scheme
///   (I + 0.5 tau A1)(I + 0.5 tau A2)(w^{n+1}-w^n)/tau + A w^n = phi^{n+1/2},
/// realized by a forward then backward block substitution sweep.
inline BlockVector step_alternating_triangular(const Decomposition& D, const EllipticOperator& A,
                                               const BlockVector& w, double t, const TimeGrid& tg,
                                               const Forcing& phi, const CgConfig& cfg) {
    D.require_shape(w, "step_alternating_triangular");
    const double tau = tg.tau();
    const int p = D.subdomains();
    const BlockVector aw = apply_block_full(D, A, w);
    const BlockVector f = D.restrict(phi.weighted(t, t + tau, 0.5));
    BlockVector g = D.zero_block_vector();
    for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] = f.data()[k] - aw.data()[k];

    const double gamma = 0.25 * tau;
    const auto& rows = A.rows();

    // forward sweep: (I + 0.5 tau A1) u = g
    BlockVector u = D.zero_block_vector();
    std::vector<double> acc(D.grid().size(), 0.0), coupled(D.grid().size());
    for (int a = 0; a < p; ++a) {
        const auto& nd = D.nodes(a);
        const auto& wt = D.weights(a);
        auto ga = g.component(a);
        std::vector<double> rhs(nd.size());
        if (a == 0) {
            std::copy(ga.begin(), ga.end(), rhs.begin());
        } else {
            for (std::size_t k = 0; k < nd.size(); ++k)
                rhs[k] = ga[k] - 0.5 * tau * wt[k] * rows.row_dot(nd[k], acc.data());
        }
        auto xa = detail::solve_diag_block(D, A, a, gamma, rhs, rhs, cfg);
        auto ua = u.component(a);
        std::copy(xa.begin(), xa.end(), ua.begin());
        D.scatter_component(a, ua, acc);
    }

    // backward sweep: (I + 0.5 tau A2) z = u
    BlockVector z = D.zero_block_vector();
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int a = p - 1; a >= 0; --a) {
        const auto& nd = D.nodes(a);
        const auto& wt = D.weights(a);
        auto ua = u.component(a);
        std::vector<double> rhs(nd.size());
        if (a == p - 1) {
            std::copy(ua.begin(), ua.end(), rhs.begin());
        } else {
            for (std::size_t k = 0; k < nd.size(); ++k)
                rhs[k] = ua[k] - 0.5 * tau * wt[k] * rows.row_dot(nd[k], acc.data());
        }
        auto xa = detail::solve_diag_block(D, A, a, gamma, rhs, rhs, cfg);
        auto za = z.component(a);
        std::copy(xa.begin(), xa.end(), za.begin());
        D.scatter_component(a, za, acc);
    }

    BlockVector out = D.zero_block_vector();
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] = w.data()[k] + tau * z.data()[k];
    return out;
}

/// One step of the three-level explicit-implicit scheme
///   (w^{n+1}-w^{n-1})/(2 tau) + A0(sigma w^{n+1} + (1-2 sigma) w^n + sigma w^{n-1})
///   + (A - A0) w^n = phi^n,
/// assembled so the new-level operator is exactly I + 2 tau sigma A0 and the
/// p block solves are independent. t is the current level time t^n.
inline BlockVector step_three_level_diag(const Decomposition& D, const EllipticOperator& A,
                                         const BlockVector& w_prev, const BlockVector& w_curr,
                                         double t, const TimeGrid& tg, const Forcing& phi,
                                         const CgConfig& cfg, const ExecPolicy& exec = {}) {
    D.require_shape(w_prev, "step_three_level_diag");
    D.require_shape(w_curr, "step_three_level_diag");
    const double tau = tg.tau(), sigma = tg.sigma;
    const BlockVector aw = apply_block_full(D, A, w_curr);
    BlockVector d = D.zero_block_vector();
    for (std::size_t k = 0; k < d.size(); ++k)
        d.data()[k] = w_prev.data()[k] - 2.0 * w_curr.data()[k];
    const BlockVector a0d = apply_block_diag(D, A, d);
    const BlockVector f = D.restrict(phi(t));
    BlockVector rhs = D.zero_block_vector();
    for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs.data()[k] = w_prev.data()[k] - 2.0 * tau * aw.data()[k] -
                        2.0 * tau * sigma * a0d.data()[k] + 2.0 * tau * f.data()[k];
    return detail::solve_all_diag_blocks(D, A, 2.0 * tau * sigma, rhs, w_curr, cfg, exec);
}

// ---------------------------------------------------------------------------
// drivers
// ---------------------------------------------------------------------------

enum class SchemeKind {
    two_level_weighted,
    three_level_weighted,
    vector_weighted,
    ei_diag,
    atm,
    three_level_diag
};

inline bool scheme_is_block(SchemeKind k) {
    return k == SchemeKind::vector_weighted || k == SchemeKind::ei_diag || k == SchemeKind::atm ||
           k == SchemeKind::three_level_diag;
}
inline bool scheme_is_three_level(SchemeKind k) {
    return k == SchemeKind::three_level_weighted || k == SchemeKind::three_level_diag;
}

/// Time level holder: three-level kinds carry two levels, two-level kinds one.
struct ScalarSchemeState {
    int n = 0;
    GridFunction curr;
    std::optional<GridFunction> prev;
};

struct BlockSchemeState {
    int n = 0;
    BlockVector curr;
    std::optional<BlockVector> prev;
};

inline ScalarSchemeState scalar_advance(SchemeKind kind, const EllipticOperator& A, const TimeGrid& tg,
                                        const Forcing& phi, const CgConfig& cfg, ScalarSchemeState s) {
    const double t = s.n * tg.tau();
    switch (kind) {
        case SchemeKind::two_level_weighted: {
            GridFunction next = step_two_level_weighted(A, s.curr, t, tg, phi, cfg);
            s.prev.reset();
            s.curr = std::move(next);
            break;
        }
        case SchemeKind::three_level_weighted: {
            if (s.n == 0) {
                GridFunction first = bootstrap_first_level(A, s.curr, tg, phi, cfg);
                s.prev = std::move(s.curr);
                s.curr = std::move(first);
            } else {
                if (!s.prev)
                    throw std::invalid_argument("scalar_advance: three-level scheme requires bootstrap");
                GridFunction next = step_three_level_weighted(A, *s.prev, s.curr, t, tg, phi, cfg);
                s.prev = std::move(s.curr);
                s.curr = std::move(next);
            }
            break;
        }
        default:
            throw std::invalid_argument("scalar_advance: block scheme passed to the scalar driver");
    }
    s.n += 1;
    return s;
}

inline BlockSchemeState block_advance(SchemeKind kind, const Decomposition& D,
                                      const EllipticOperator& A, const TimeGrid& tg, const Forcing& phi,
                                      const CgConfig& cfg, const ExecPolicy& exec, BlockSchemeState s) {
    const double t = s.n * tg.tau();
    switch (kind) {
        case SchemeKind::vector_weighted: {
            BlockVector next = step_vector_weighted(D, A, s.curr, t, tg, phi, cfg);
            s.prev.reset();
            s.curr = std::move(next);
            break;
        }
        case SchemeKind::ei_diag: {
            BlockVector next = step_explicit_implicit_diag(D, A, s.curr, t, tg, phi, cfg, exec);
            s.prev.reset();
            s.curr = std::move(next);
            break;
        }
        case SchemeKind::atm: {
            BlockVector next = step_alternating_triangular(D, A, s.curr, t, tg, phi, cfg);
            s.prev.reset();
            s.curr = std::move(next);
            break;
        }
        case SchemeKind::three_level_diag: {
            if (s.n == 0) {
                // second level from the Crank-Nicolson step, restricted
                GridFunction v0 = D.extend(s.curr);
                GridFunction v1 = bootstrap_first_level(A, v0, tg, phi, cfg);
                s.prev = std::move(s.curr);
                s.curr = D.restrict(v1);
            } else {
                if (!s.prev)
                    throw std::invalid_argument("block_advance: three-level scheme requires bootstrap");
                BlockVector next = step_three_level_diag(D, A, *s.prev, s.curr, t, tg, phi, cfg, exec);
                s.prev = std::move(s.curr);
                s.curr = std::move(next);
            }
            break;
        }
        default:
            throw std::invalid_argument("block_advance: scalar scheme passed to the block driver");
    }
    s.n += 1;
    return s;
}

/// Runs a scalar scheme from v0 to T; obs(n, y^n) is invoked for n = 0..N.
template <class Observer>
void run_scalar_scheme(SchemeKind kind, const EllipticOperator& A, const TimeGrid& tg,
                       const GridFunction& v0, const Forcing& phi, const CgConfig& cfg,
                       Observer&& obs) {
    validate_time_grid(tg);
    ScalarSchemeState s{0, v0, std::nullopt};
    obs(0, s.curr);
    for (int n = 0; n < tg.N; ++n) {
        s = scalar_advance(kind, A, tg, phi, cfg, std::move(s));
        obs(s.n, s.curr);
    }
}

/// Runs a block scheme from restrict(v0) to T; obs(n, w^n) sees block vectors.
template <class Observer>
void run_block_scheme(SchemeKind kind, const Decomposition& D, const EllipticOperator& A,
                      const TimeGrid& tg, const GridFunction& v0, const Forcing& phi,
                      const CgConfig& cfg, const ExecPolicy& exec, Observer&& obs) {
    validate_time_grid(tg);
    BlockSchemeState s{0, D.restrict(v0), std::nullopt};
    obs(0, s.curr);
    for (int n = 0; n < tg.N; ++n) {
        s = block_advance(kind, D, A, tg, phi, cfg, exec, std::move(s));
        obs(s.n, s.curr);
    }
}

}  // namespace ddsplit
