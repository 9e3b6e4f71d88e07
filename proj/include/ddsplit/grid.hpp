#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ddsplit {

namespace detail {

// Shortest round-trip decimal form; all CSV output goes through this.
inline std::string fmt_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Uniform cell-centered grid on the rectangle (0,l1) x (0,l2).
/// Node (i,j), 1 <= i <= n1, 1 <= j <= n2, sits at ((i-0.5)h1, (j-0.5)h2),
/// so every node is strictly interior. Linearization is row-major, i fastest.
struct Grid {
    int n1 = 0;
    int n2 = 0;
    double l1 = 0.0;
    double l2 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(n1);
    }
    double x1(int i) const { return (i - 0.5) * h1; }
    double x2(int j) const { return (j - 0.5) * h2; }
    double cell_area() const { return h1 * h2; }

    friend bool operator==(const Grid& a, const Grid& b) = default;
};

inline Grid build_grid(int n1, int n2, double l1, double l2) {
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("build_grid: node counts must be >= 1");
    if (!(l1 > 0.0) || !(l2 > 0.0))
        throw std::invalid_argument("build_grid: side lengths must be > 0");
    Grid g;
    g.n1 = n1;
    g.n2 = n2;
    g.l1 = l1;
    g.l2 = l2;
    g.h1 = l1 / n1;
    g.h2 = l2 / n2;
    return g;
}

/// Real values on all nodes of a grid, row-major (i fastest).
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
    GridFunction(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw std::invalid_argument("GridFunction: value count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& at(int i, int j) { return values_[grid_.index(i, j)]; }
    double at(int i, int j) const { return values_[grid_.index(i, j)]; }

    std::size_t size() const { return values_.size(); }

private:
    Grid grid_;
    std::vector<double> values_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grids do not match");
}

/// Scalar product of H: (y,v) = sum_x y(x) v(x) h1 h2.
inline double inner_product(const GridFunction& y, const GridFunction& v) {
    require_same_grid(y.grid(), v.grid(), "inner_product");
    double s = 0.0;
    const std::size_t n = y.size();
    for (std::size_t k = 0; k < n; ++k) s += y[k] * v[k];
    return s * y.grid().cell_area();
}

inline double norm(const GridFunction& v) { return std::sqrt(inner_product(v, v)); }

inline double norm_inf(const GridFunction& v) {
    double m = 0.0;
    for (double x : v.values()) m = std::max(m, std::abs(x));
    return m;
}

/// ||v||_D = (Dv,v)^{1/2} for a symmetric nonnegative operator given by its
/// application v -> Dv. Radicands below the roundoff floor raise; tiny
/// negative values clamp to zero.
template <class ApplyFn>
    requires std::invocable<ApplyFn&, const GridFunction&>
double energy_norm(const GridFunction& v, ApplyFn&& apply) {
    GridFunction dv = apply(v);
    double q = inner_product(dv, v);
    if (q < 0.0) {
        const double floor = -10.0 * std::numeric_limits<double>::epsilon() * inner_product(v, v);
        if (q < floor)
            throw std::invalid_argument("energy_norm: operator is not nonnegative, (Dv,v) = " +
                                        detail::fmt_double(q));
        q = 0.0;
    }
    return std::sqrt(q);
}

/// CSV dump, one node per line in row-major order.
inline void write_csv(std::ostream& os, const GridFunction& v) {
    const Grid& g = v.grid();
    os << "i,j,x1,x2,value\n";
    for (int j = 1; j <= g.n2; ++j)
        for (int i = 1; i <= g.n1; ++i)
            os << i << ',' << j << ',' << detail::fmt_double(g.x1(i)) << ','
               << detail::fmt_double(g.x2(j)) << ',' << detail::fmt_double(v.at(i, j)) << '\n';
}

}  // namespace ddsplit
