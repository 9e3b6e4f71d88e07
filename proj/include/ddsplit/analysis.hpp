#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddsplit/decomposition.hpp"
#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"
#include "ddsplit/schemes.hpp"

namespace ddsplit {

/// eps2 = ||v_ref - y|| (H-norm), eps_inf = ||v_ref - y||_inf.
inline std::pair<double, double> error_norms(const GridFunction& y, const GridFunction& v_ref) {
    require_same_grid(y.grid(), v_ref.grid(), "error_norms");
    GridFunction d(y.grid());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = v_ref[k] - y[k];
    return {norm(d), norm_inf(d)};
}

/// Pointwise discrepancy v_ref - y, for dumps and localization studies.
inline GridFunction error_field(const GridFunction& y, const GridFunction& v_ref) {
    require_same_grid(y.grid(), v_ref.grid(), "error_field");
    GridFunction d(y.grid());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = v_ref[k] - y[k];
    return d;
}

struct ErrorRecord {
    double t;
    double eps2;
    double epsinf;
};

struct ErrorReport {
    std::string scheme;
    double sigma = 0.0;
    double tau = 0.0;
    std::vector<ErrorRecord> records;

    void write_csv(std::ostream& os) const {
        os << "t,eps2,epsinf\n";
        for (const auto& r : records)
            os << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.eps2) << ','
               << detail::fmt_double(r.epsinf) << '\n';
    }
};

/// Semi-discrete reference trajectory: the same-grid Crank-Nicolson sweep with
/// n_ref steps, recorded at the requested checkpoint times. Checkpoints must
/// be multiples of the reference step.
inline std::vector<GridFunction> reference_solution(const EllipticOperator& A, const GridFunction& v0,
                                                    const Forcing& phi, double T, int n_ref,
                                                    const std::vector<double>& checkpoints,
                                                    const CgConfig& cfg) {
    if (n_ref < 1) throw std::invalid_argument("reference_solution: n_ref must be >= 1");
    const double tau_ref = T / n_ref;
    std::vector<long> steps(checkpoints.size());
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const double s = checkpoints[i] / tau_ref;
        const long si = std::lround(s);
        if (si < 0 || si > n_ref || std::abs(s - static_cast<double>(si)) > 1e-8 * std::max(1.0, std::abs(s)))
            throw std::invalid_argument("reference_solution: checkpoint " +
                                        detail::fmt_double(checkpoints[i]) +
                                        " is not a multiple of the reference step");
        steps[i] = si;
    }

    std::vector<GridFunction> out(checkpoints.size());
    TimeGrid tg{T, n_ref, 0.5};
    run_scalar_scheme(SchemeKind::two_level_weighted, A, tg, v0, phi, cfg,
                      [&](int n, const GridFunction& y) {
                          for (std::size_t i = 0; i < steps.size(); ++i)
                              if (steps[i] == n) out[i] = y;
                      });
    return out;
}

struct ConvergenceRow {
    int N = 0;
    double tau = 0.0;
    double eps2 = 0.0;
    double epsinf = 0.0;
    // order vs the previous (coarser) row; NaN on the first row
    double order2 = std::numeric_limits<double>::quiet_NaN();
    double orderinf = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double fitted_order2 = std::numeric_limits<double>::quiet_NaN();
    double fitted_orderinf = std::numeric_limits<double>::quiet_NaN();

    void write_csv(std::ostream& os) const {
        os << "N,tau,eps2,epsinf,order2,orderinf\n";
        for (const auto& r : rows) {
            os << r.N << ',' << detail::fmt_double(r.tau) << ',' << detail::fmt_double(r.eps2) << ','
               << detail::fmt_double(r.epsinf) << ',';
            if (std::isnan(r.order2))
                os << ',';
            else
                os << detail::fmt_double(r.order2) << ',';
            if (!std::isnan(r.orderinf)) os << detail::fmt_double(r.orderinf);
            os << '\n';
        }
    }
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double xm = 0.0, ym = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        xm += x[k];
        ym += y[k];
    }
    xm /= n;
    ym /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        num += (x[k] - xm) * (y[k] - ym);
        den += (x[k] - xm) * (x[k] - xm);
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Runs the scheme for each N in a doubling list, measures eps(T) against the
/// oversampled Crank-Nicolson reference, and reports observed orders.
inline ConvergenceTable convergence_study(const EllipticOperator& A, const GridFunction& v0,
                                          const Forcing& phi, SchemeKind kind, double sigma,
                                          const Decomposition* D, double T, const std::vector<int>& Ns,
                                          int oversample, const CgConfig& cfg,
                                          const ExecPolicy& exec = {}) {
    if (Ns.empty()) throw std::invalid_argument("convergence_study: empty N list");
    for (std::size_t i = 1; i < Ns.size(); ++i)
        if (Ns[i] != 2 * Ns[i - 1])
            throw std::invalid_argument("convergence_study: N list must double");
    if (scheme_is_block(kind) && D == nullptr)
        throw std::invalid_argument("convergence_study: block scheme needs a decomposition");

    const int n_ref = oversample * Ns.back();
    const GridFunction v_ref = reference_solution(A, v0, phi, T, n_ref, {T}, cfg).front();

    ConvergenceTable table;
    for (int N : Ns) {
        TimeGrid tg{T, N, sigma};
        GridFunction final(A.grid());
        if (scheme_is_block(kind)) {
            run_block_scheme(kind, *D, A, tg, v0, phi, cfg, exec,
                             [&](int n, const BlockVector& w) {
                                 if (n == N) final = D->extend(w);
                             });
        } else {
            run_scalar_scheme(kind, A, tg, v0, phi, cfg, [&](int n, const GridFunction& y) {
                if (n == N) final = y;
            });
        }
        auto [e2, einf] = error_norms(final, v_ref);
        ConvergenceRow row;
        row.N = N;
        row.tau = tg.tau();
        row.eps2 = e2;
        row.epsinf = einf;
        table.rows.push_back(row);
    }
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        auto& r = table.rows[i];
        const auto& prev = table.rows[i - 1];
        if (r.eps2 > 0.0 && prev.eps2 > 0.0) r.order2 = std::log2(prev.eps2 / r.eps2);
        if (r.epsinf > 0.0 && prev.epsinf > 0.0) r.orderinf = std::log2(prev.epsinf / r.epsinf);
    }
    std::vector<double> lt, l2, li;
    for (const auto& r : table.rows)
        if (r.eps2 > 0.0 && r.epsinf > 0.0) {
            lt.push_back(std::log(r.tau));
            l2.push_back(std::log(r.eps2));
            li.push_back(std::log(r.epsinf));
        }
    if (lt.size() >= 2) {
        table.fitted_order2 = detail::ls_slope(lt, l2);
        table.fitted_orderinf = detail::ls_slope(lt, li);
    }
    return table;
}

// ---------------------------------------------------------------------------
// energy monitors for the a priori estimates
// ---------------------------------------------------------------------------

enum class TheoremId {
    two_level_weighted = 1,    // ||y^{n+1}||_A^2 <= ||v0||_A^2 + 1/2 sum tau ||phi^{k+sigma}||^2
    vector_weighted = 2,       // block analogue with phi^{k+sigma}
    ei_diag = 3,               // block, phi^{k+1}
    atm = 4,                   // block, phi^{k+1/2}
    three_level_weighted = 5,  // (sigma-1/4) tau^2 ||r||_A^2 + ||s||_A^2 bound, phi^k
    three_level_diag = 6       // (C r, r) + ||s||_A^2 bound with C = sigma tau^2 A0 - tau^2/4 A
};

struct MonitorResult {
    bool pass = true;
    double max_violation = 0.0;          // max over steps of lhs - admissible rhs
    std::vector<double> lhs, rhs, margin;  // margin = rhs - lhs per monitored step

    void add(double l, double r) {
        lhs.push_back(l);
        rhs.push_back(r);
        margin.push_back(r - l);
        const double admissible = r * (1.0 + 1e-8) + 1e-12;
        if (l > admissible) {
            pass = false;
            max_violation = std::max(max_violation, l - admissible);
        }
    }
};

/// Scalar-scheme monitor (theorems 1 and 5). trajectory holds y^0..y^N.
inline MonitorResult energy_monitor(TheoremId id, const std::vector<GridFunction>& trajectory,
                                    const EllipticOperator& A, const TimeGrid& tg, const Forcing& phi) {
    if (trajectory.size() != static_cast<std::size_t>(tg.N) + 1)
        throw std::invalid_argument("energy_monitor: trajectory does not match the time grid");
    const double tau = tg.tau();
    auto qa = [&](const GridFunction& v) {
        double q = inner_product(A.apply(v), v);
        return std::max(q, 0.0);
    };
    MonitorResult res;
    switch (id) {
        case TheoremId::two_level_weighted: {
            const double base = qa(trajectory[0]);
            double accum = 0.0;
            for (int n = 0; n + 1 <= tg.N; ++n) {
                const GridFunction f = phi.weighted(n * tau, (n + 1) * tau, tg.sigma);
                accum += 0.5 * tau * inner_product(f, f);
                res.add(qa(trajectory[n + 1]), base + accum);
            }
            return res;
        }
        case TheoremId::three_level_weighted: {
            if (tg.N < 1) throw std::invalid_argument("energy_monitor: need at least one step");
            const double dcoef = (tg.sigma - 0.25) * tau * tau;
            auto lhs_at = [&](int n) {  // pair (y^{n+1}, y^n)
                GridFunction r(A.grid()), s(A.grid());
                for (std::size_t k = 0; k < r.size(); ++k) {
                    r[k] = (trajectory[n + 1][k] - trajectory[n][k]) / tau;
                    s[k] = 0.5 * (trajectory[n + 1][k] + trajectory[n][k]);
                }
                return dcoef * qa(r) + qa(s);
            };
            const double base = lhs_at(0);
            double accum = 0.0;
            for (int n = 0; n + 1 <= tg.N; ++n) {
                if (n >= 1) {
                    const GridFunction f = phi(n * tau);
                    accum += 0.5 * tau * inner_product(f, f);
                }
                res.add(lhs_at(n), base + accum);
            }
            return res;
        }
        default:
            throw std::invalid_argument("energy_monitor: theorem id needs a block trajectory");
    }
}

/// Block-scheme monitor (theorems 2, 3, 4, 5, 6). trajectory holds w^0..w^N.
inline MonitorResult energy_monitor(TheoremId id, const std::vector<BlockVector>& trajectory,
                                    const Decomposition& D, const EllipticOperator& A,
                                    const TimeGrid& tg, const Forcing& phi) {
    if (trajectory.size() != static_cast<std::size_t>(tg.N) + 1)
        throw std::invalid_argument("energy_monitor: trajectory does not match the time grid");
    const double tau = tg.tau();
    auto qa = [&](const BlockVector& v) {
        double q = block_inner_product(D, apply_block_full(D, A, v), v);
        return std::max(q, 0.0);
    };
    auto qa0 = [&](const BlockVector& v) {
        double q = block_inner_product(D, apply_block_diag(D, A, v), v);
        return std::max(q, 0.0);
    };
    auto phinorm2 = [&](const GridFunction& f) {
        const BlockVector fb = D.restrict(f);
        return block_inner_product(D, fb, fb);
    };
    MonitorResult res;
    switch (id) {
        case TheoremId::vector_weighted:
        case TheoremId::ei_diag:
        case TheoremId::atm: {
            const double base = qa(trajectory[0]);
            double accum = 0.0;
            for (int n = 0; n + 1 <= tg.N; ++n) {
                GridFunction f = (id == TheoremId::vector_weighted)
                                     ? phi.weighted(n * tau, (n + 1) * tau, tg.sigma)
                                 : (id == TheoremId::ei_diag)
                                     ? phi((n + 1) * tau)
                                     : phi.weighted(n * tau, (n + 1) * tau, 0.5);
                accum += 0.5 * tau * phinorm2(f);
                res.add(qa(trajectory[n + 1]), base + accum);
            }
            return res;
        }
        case TheoremId::three_level_weighted:
        case TheoremId::three_level_diag: {
            if (tg.N < 1) throw std::invalid_argument("energy_monitor: need at least one step");
            auto lhs_at = [&](int n) {
                BlockVector r = D.zero_block_vector(), s = D.zero_block_vector();
                for (std::size_t k = 0; k < r.size(); ++k) {
                    r.data()[k] = (trajectory[n + 1].data()[k] - trajectory[n].data()[k]) / tau;
                    s.data()[k] = 0.5 * (trajectory[n + 1].data()[k] + trajectory[n].data()[k]);
                }
                double rterm;
                if (id == TheoremId::three_level_weighted) {
                    rterm = (tg.sigma - 0.25) * tau * tau * qa(r);
                } else {
                    // (C r, r), C = sigma tau^2 A0 - tau^2/4 A
                    rterm = tg.sigma * tau * tau * qa0(r) - 0.25 * tau * tau * qa(r);
                    rterm = std::max(rterm, 0.0);
                }
                return rterm + qa(s);
            };
            const double base = lhs_at(0);
            double accum = 0.0;
            for (int n = 0; n + 1 <= tg.N; ++n) {
                if (n >= 1) accum += 0.5 * tau * phinorm2(phi(n * tau));
                res.add(lhs_at(n), base + accum);
            }
            return res;
        }
        default:
            throw std::invalid_argument("energy_monitor: theorem id needs a scalar trajectory");
    }
}

// ---------------------------------------------------------------------------
// interface localization
// ---------------------------------------------------------------------------

/// Fraction of the discrete L1 mass of err lying within `layers` node layers
/// of the subdomain interfaces of the base (unextended) partition.
inline double interface_mass_fraction(const Decomposition& D, const GridFunction& err, int layers) {
    require_same_grid(err.grid(), D.grid(), "interface_mass_fraction");
    const Grid& g = err.grid();
    auto layer_of = [](int idx0, const std::vector<int>& cuts) {
        int best = std::numeric_limits<int>::max();
        for (int c : cuts) best = std::min(best, idx0 < c ? c - idx0 : idx0 - c + 1);
        return best;
    };
    double total = 0.0, near = 0.0;
    for (int j = 1; j <= g.n2; ++j)
        for (int i = 1; i <= g.n1; ++i) {
            const double mass = std::abs(err.at(i, j));
            total += mass;
            const int l1 = layer_of(i - 1, D.cuts1());
            const int l2 = layer_of(j - 1, D.cuts2());
            if (std::min(l1, l2) <= layers) near += mass;
        }
    return total > 0.0 ? near / total : 0.0;
}

}  // namespace ddsplit
