#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddsplit/grid.hpp"

namespace ddsplit {

struct CgConfig {
    double rel_tolerance = 1e-10;
    double abs_tolerance = 1e-14;
    int max_iterations = 10000;
};

class NoConvergence : public std::runtime_error {
public:
    NoConvergence(double residual_, int iterations_)
        : std::runtime_error("cg: no convergence after " + std::to_string(iterations_) +
                             " iterations, residual " + detail::fmt_double(residual_)),
          residual(residual_), iterations(iterations_) {}
    double residual;
    int iterations;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// Conjugate gradients for the shifted system (I + gamma*A) x = b, with A
/// given matrix-free through apply(x_ptr, y_ptr) computing y = A x. A must be
/// symmetric positive semi-definite and gamma >= 0. Optional Jacobi
/// preconditioning with the diagonal of the shifted operator. Converged when
/// ||b - (I + gamma*A)x||_2 <= max(rel_tolerance*||b||_2, abs_tolerance);
/// the recurrence residual is confirmed against the explicit one before
/// accepting.
template <class ApplyFn>
std::vector<double> solve_shifted(ApplyFn&& apply, double gamma, const std::vector<double>& b,
                                  const std::vector<double>& x0, const CgConfig& cfg,
                                  const std::vector<double>* shifted_diag = nullptr) {
    if (!(cfg.rel_tolerance > 0.0) || !(cfg.abs_tolerance > 0.0) || cfg.max_iterations < 1)
        throw std::invalid_argument("solve_shifted: bad solver configuration");
    if (gamma < 0.0) throw std::invalid_argument("solve_shifted: gamma must be >= 0");
    const std::size_t n = b.size();
    if (x0.size() != n) throw std::invalid_argument("solve_shifted: x0 size mismatch");
    if (shifted_diag && shifted_diag->size() != n)
        throw std::invalid_argument("solve_shifted: preconditioner size mismatch");

    if (gamma == 0.0) return b;  // identity system

    std::vector<double> scratch(n);
    auto shifted = [&](const std::vector<double>& x, std::vector<double>& y) {
        apply(x.data(), scratch.data());
        for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + gamma * scratch[k];
    };
    auto precondition = [&](const std::vector<double>& r, std::vector<double>& z) {
        if (shifted_diag) {
            for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / (*shifted_diag)[k];
        } else {
            z = r;
        }
    };

    const double tol = std::max(cfg.rel_tolerance * detail::norm2(b), cfg.abs_tolerance);

    std::vector<double> x = x0, r(n), z(n), p(n), q(n);
    shifted(x, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
    double rnorm = detail::norm2(r);
    if (rnorm <= tol) return x;

    precondition(r, z);
    p = z;
    double rho = detail::dot(r, z);

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        shifted(p, q);
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0))
            throw std::invalid_argument("solve_shifted: operator is not positive definite");
        const double alpha = rho / pq;
        for (std::size_t k = 0; k < n; ++k) x[k] += alpha * p[k];
        for (std::size_t k = 0; k < n; ++k) r[k] -= alpha * q[k];
        rnorm = detail::norm2(r);
        if (rnorm <= tol) {
            // confirm against the explicit residual
            shifted(x, q);
            for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
            rnorm = detail::norm2(r);
            if (rnorm <= tol) return x;
        }
        precondition(r, z);
        const double rho_next = detail::dot(r, z);
        const double beta = rho_next / rho;
        rho = rho_next;
        for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    throw NoConvergence(rnorm, cfg.max_iterations);
}

}  // namespace ddsplit
