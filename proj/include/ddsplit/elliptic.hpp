#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddsplit/grid.hpp"

namespace ddsplit {

/// Problem coefficients. The diffusion k is sampled at cell-face midpoints,
/// the reaction c at nodes; k1,k2,c1,c2 are the assumed positive bounds.
struct CoefficientField {
    std::function<double(double, double)> k;
    std::function<double(double, double)> c;
    double k1 = 0.0, k2 = 0.0;
    double c1 = 0.0, c2 = 0.0;
};

inline CoefficientField constant_coefficients(double k, double c) {
    return CoefficientField{[k](double, double) { return k; },
                            [c](double, double) { return c; },
                            k, k, c, c};
}

/// Five-point grid operator A = A1 + A2 with homogeneous Neumann closure.
/// A1 carries the x1-direction couplings plus c/2 on the diagonal, A2 the
/// x2-direction couplings plus the other c/2; boundary rows simply drop the
/// outward coupling. Assembled symmetrically: the coupling between two nodes
/// is the one face sample, stored in both rows.
class EllipticOperator {
public:
    struct Csr {
        std::vector<std::size_t> ptr;
        std::vector<std::size_t> col;
        std::vector<double> val;

        void apply(const double* x, double* y, std::size_t rows) const {
            for (std::size_t r = 0; r < rows; ++r) {
                double s = 0.0;
                for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) s += val[k] * x[col[k]];
                y[r] = s;
            }
        }
        // single row dot, for subdomain-restricted products
        double row_dot(std::size_t r, const double* x) const {
            double s = 0.0;
            for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) s += val[k] * x[col[k]];
            return s;
        }
    };

    EllipticOperator(Grid g, Csr full, Csr dir1, Csr dir2, std::vector<double> diag, double c_lower)
        : grid_(g), full_(std::move(full)), dir1_(std::move(dir1)), dir2_(std::move(dir2)),
          diag_(std::move(diag)), c_lower_(c_lower) {}

    const Grid& grid() const { return grid_; }
    double reaction_lower_bound() const { return c_lower_; }
    const std::vector<double>& diagonal() const { return diag_; }
    const Csr& rows() const { return full_; }

    GridFunction apply(const GridFunction& v) const {
        require_same_grid(v.grid(), grid_, "EllipticOperator::apply");
        GridFunction w(grid_);
        full_.apply(v.values().data(), w.values().data(), grid_.size());
        return w;
    }

    /// Directional part A1 (d = 1) or A2 (d = 2).
    GridFunction apply_directional(int d, const GridFunction& v) const {
        require_same_grid(v.grid(), grid_, "EllipticOperator::apply_directional");
        if (d != 1 && d != 2) throw std::invalid_argument("apply_directional: d must be 1 or 2");
        GridFunction w(grid_);
        (d == 1 ? dir1_ : dir2_).apply(v.values().data(), w.values().data(), grid_.size());
        return w;
    }

    void apply_raw(const double* x, double* y) const { full_.apply(x, y, grid_.size()); }

    /// Coordinate-list dump `row col value`, sorted by (row, col), 0-based.
    void dump(std::ostream& os) const {
        for (std::size_t r = 0; r < grid_.size(); ++r)
            for (std::size_t k = full_.ptr[r]; k < full_.ptr[r + 1]; ++k)
                os << r << ' ' << full_.col[k] << ' ' << detail::fmt_double(full_.val[k]) << '\n';
    }

private:
    Grid grid_;
    Csr full_, dir1_, dir2_;
    std::vector<double> diag_;
    double c_lower_;
};

inline double energy_norm(const GridFunction& v, const EllipticOperator& A) {
    return energy_norm(v, [&](const GridFunction& u) { return A.apply(u); });
}

inline EllipticOperator assemble(const Grid& g, const CoefficientField& coeff) {
    const std::size_t n = g.size();
    const double inv_h1sq = 1.0 / (g.h1 * g.h1);
    const double inv_h2sq = 1.0 / (g.h2 * g.h2);

    // face samples: kf1(i,j) between nodes (i,j)-(i+1,j), kf2(i,j) between (i,j)-(i,j+1)
    std::vector<double> kf1(static_cast<std::size_t>(std::max(g.n1 - 1, 0)) * g.n2);
    std::vector<double> kf2(static_cast<std::size_t>(g.n1) * std::max(g.n2 - 1, 0));
    for (int j = 1; j <= g.n2; ++j)
        for (int i = 1; i < g.n1; ++i) {
            double k = coeff.k(i * g.h1, g.x2(j));
            if (!(k > 0.0))
                throw std::invalid_argument("assemble: non-positive diffusion sample at face (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            kf1[static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(j - 1) * (g.n1 - 1)] = k;
        }
    for (int j = 1; j < g.n2; ++j)
        for (int i = 1; i <= g.n1; ++i) {
            double k = coeff.k(g.x1(i), j * g.h2);
            if (!(k > 0.0))
                throw std::invalid_argument("assemble: non-positive diffusion sample at face (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            kf2[static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(j - 1) * g.n1] = k;
        }

    std::vector<double> c(n);
    for (int j = 1; j <= g.n2; ++j)
        for (int i = 1; i <= g.n1; ++i) {
            double cv = coeff.c(g.x1(i), g.x2(j));
            if (!(cv > 0.0))
                throw std::invalid_argument("assemble: non-positive reaction sample at node (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            c[g.index(i, j)] = cv;
        }

    auto face1 = [&](int i, int j) {  // face between (i,j) and (i+1,j)
        return kf1[static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(j - 1) * (g.n1 - 1)];
    };
    auto face2 = [&](int i, int j) {  // face between (i,j) and (i,j+1)
        return kf2[static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(j - 1) * g.n1];
    };

    EllipticOperator::Csr full, dir1, dir2;
    full.ptr.reserve(n + 1);
    dir1.ptr.reserve(n + 1);
    dir2.ptr.reserve(n + 1);
    full.ptr.push_back(0);
    dir1.ptr.push_back(0);
    dir2.ptr.push_back(0);
    std::vector<double> diag(n);

    for (int j = 1; j <= g.n2; ++j)
        for (int i = 1; i <= g.n1; ++i) {
            const std::size_t r = g.index(i, j);
            const double aW = (i > 1) ? face1(i - 1, j) * inv_h1sq : 0.0;
            const double aE = (i < g.n1) ? face1(i, j) * inv_h1sq : 0.0;
            const double aS = (j > 1) ? face2(i, j - 1) * inv_h2sq : 0.0;
            const double aN = (j < g.n2) ? face2(i, j) * inv_h2sq : 0.0;
            const double d1 = aW + aE + 0.5 * c[r];
            const double d2 = aS + aN + 0.5 * c[r];

            if (i > 1) {
                dir1.col.push_back(r - 1);
                dir1.val.push_back(-aW);
            }
            dir1.col.push_back(r);
            dir1.val.push_back(d1);
            if (i < g.n1) {
                dir1.col.push_back(r + 1);
                dir1.val.push_back(-aE);
            }
            dir1.ptr.push_back(dir1.col.size());

            if (j > 1) {
                dir2.col.push_back(r - g.n1);
                dir2.val.push_back(-aS);
            }
            dir2.col.push_back(r);
            dir2.val.push_back(d2);
            if (j < g.n2) {
                dir2.col.push_back(r + g.n1);
                dir2.val.push_back(-aN);
            }
            dir2.ptr.push_back(dir2.col.size());

            if (j > 1) {
                full.col.push_back(r - g.n1);
                full.val.push_back(-aS);
            }
            if (i > 1) {
                full.col.push_back(r - 1);
                full.val.push_back(-aW);
            }
            full.col.push_back(r);
            full.val.push_back(d1 + d2);
            if (i < g.n1) {
                full.col.push_back(r + 1);
                full.val.push_back(-aE);
            }
            if (j < g.n2) {
                full.col.push_back(r + g.n1);
                full.val.push_back(-aN);
            }
            full.ptr.push_back(full.col.size());
            diag[r] = d1 + d2;
        }

    return EllipticOperator(g, std::move(full), std::move(dir1), std::move(dir2), std::move(diag),
                            coeff.c1);
}

}  // namespace ddsplit
