#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"

namespace ddsplit {

enum class Flavor { non_overlapping, overlapping };
enum class Coloring { none, red_black };

/// Element of the direct sum H_1 + ... + H_p: one value array per subdomain,
/// kept in a single flat buffer so matrix-free solvers can treat it as one
/// vector.
class BlockVector {
public:
    BlockVector() = default;
    explicit BlockVector(const std::vector<std::size_t>& sizes) {
        offsets_.resize(sizes.size() + 1, 0);
        for (std::size_t a = 0; a < sizes.size(); ++a) offsets_[a + 1] = offsets_[a] + sizes[a];
        data_.assign(offsets_.back(), 0.0);
    }

    int blocks() const { return static_cast<int>(offsets_.size()) - 1; }
    std::size_t size() const { return data_.size(); }
    std::size_t block_size(int a) const { return offsets_[a + 1] - offsets_[a]; }

    std::span<double> component(int a) { return {data_.data() + offsets_[a], block_size(a)}; }
    std::span<const double> component(int a) const { return {data_.data() + offsets_[a], block_size(a)}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    const std::vector<std::size_t>& offsets() const { return offsets_; }

    bool shape_matches(const BlockVector& o) const { return offsets_ == o.offsets_; }

private:
    std::vector<double> data_;
    std::vector<std::size_t> offsets_;
};

inline void require_same_shape(const BlockVector& a, const BlockVector& b, const char* what) {
    if (!a.shape_matches(b)) throw std::invalid_argument(std::string(what) + ": block shapes do not match");
}

/// Subdomain decomposition of the grid: p node sets omega_alpha with weights
/// m(x)^{-1/2}, realizing the restriction operators R_alpha and their adjoint
/// extensions R*_alpha with sum_alpha R*_alpha R_alpha = I. Geometric blocks
/// are index-range products; red-black coloring consolidates the two
/// checkerboard classes into p = 2 subdomains.
class Decomposition {
public:
    struct GeometricBlock {
        int b1, b2;          // block coordinates in the part grid
        int i_lo, i_hi;      // 0-based node ranges [lo,hi), after overlap extension
        int j_lo, j_hi;
        int color;           // checkerboard color of (b1,b2)
        int subdomain;       // consolidated subdomain owning this block
    };

    Decomposition(Grid g, Flavor flavor, int layers, Coloring coloring, int p,
                  std::vector<std::vector<std::size_t>> nodes, std::vector<std::vector<double>> weights,
                  std::vector<int> multiplicity, std::vector<GeometricBlock> blocks,
                  std::vector<int> cuts1, std::vector<int> cuts2)
        : grid_(g), flavor_(flavor), layers_(layers), coloring_(coloring), p_(p),
          nodes_(std::move(nodes)), weights_(std::move(weights)), multiplicity_(std::move(multiplicity)),
          blocks_(std::move(blocks)), cuts1_(std::move(cuts1)), cuts2_(std::move(cuts2)) {
        sizes_.resize(p_);
        for (int a = 0; a < p_; ++a) sizes_[a] = nodes_[a].size();
    }

    const Grid& grid() const { return grid_; }
    int subdomains() const { return p_; }
    Flavor flavor() const { return flavor_; }
    Coloring coloring() const { return coloring_; }
    int layers() const { return layers_; }

    const std::vector<std::size_t>& nodes(int a) const { return nodes_[a]; }
    const std::vector<double>& weights(int a) const { return weights_[a]; }
    const std::vector<int>& multiplicity() const { return multiplicity_; }
    const std::vector<GeometricBlock>& geometric_blocks() const { return blocks_; }
    const std::vector<int>& cuts1() const { return cuts1_; }
    const std::vector<int>& cuts2() const { return cuts2_; }

    BlockVector zero_block_vector() const { return BlockVector(sizes_); }

    bool shape_matches(const BlockVector& v) const {
        if (v.blocks() != p_) return false;
        for (int a = 0; a < p_; ++a)
            if (v.block_size(a) != sizes_[a]) return false;
        return true;
    }
    void require_shape(const BlockVector& v, const char* what) const {
        if (!shape_matches(v)) throw std::invalid_argument(std::string(what) + ": block vector does not match decomposition");
    }

    /// v_alpha(x) = m^{-1/2}(x) v(x) on omega_alpha.
    BlockVector restrict(const GridFunction& v) const {
        require_same_grid(v.grid(), grid_, "Decomposition::restrict");
        BlockVector out = zero_block_vector();
        for (int a = 0; a < p_; ++a) {
            auto comp = out.component(a);
            const auto& nd = nodes_[a];
            const auto& w = weights_[a];
            for (std::size_t k = 0; k < nd.size(); ++k) comp[k] = w[k] * v[nd[k]];
        }
        return out;
    }

    /// v(x) = sum_alpha m^{-1/2}(x) v_alpha(x), zero contribution outside
    /// omega_alpha. Accumulation order is fixed (alpha ascending).
    GridFunction extend(const BlockVector& vb) const {
        require_shape(vb, "Decomposition::extend");
        GridFunction v(grid_);
        for (int a = 0; a < p_; ++a) {
            auto comp = vb.component(a);
            const auto& nd = nodes_[a];
            const auto& w = weights_[a];
            for (std::size_t k = 0; k < nd.size(); ++k) v[nd[k]] += w[k] * comp[k];
        }
        return v;
    }

    /// Scatter one component only: v = R*_alpha v_alpha.
    void scatter_component(int a, std::span<const double> comp, std::vector<double>& v) const {
        const auto& nd = nodes_[a];
        const auto& w = weights_[a];
        for (std::size_t k = 0; k < nd.size(); ++k) v[nd[k]] += w[k] * comp[k];
    }
    void clear_component(int a, std::vector<double>& v) const {
        for (std::size_t nd : nodes_[a]) v[nd] = 0.0;
    }

    /// CSV dump `alpha,i,j,m,weight` (alpha 1-based), for visualization.
    void write_csv(std::ostream& os) const {
        os << "alpha,i,j,m,weight\n";
        for (int a = 0; a < p_; ++a) {
            const auto& nd = nodes_[a];
            const auto& w = weights_[a];
            for (std::size_t k = 0; k < nd.size(); ++k) {
                const int i = static_cast<int>(nd[k] % grid_.n1) + 1;
                const int j = static_cast<int>(nd[k] / grid_.n1) + 1;
                os << (a + 1) << ',' << i << ',' << j << ',' << multiplicity_[nd[k]] << ','
                   << detail::fmt_double(w[k]) << '\n';
            }
        }
    }

private:
    Grid grid_;
    Flavor flavor_;
    int layers_;
    Coloring coloring_;
    int p_;
    std::vector<std::vector<std::size_t>> nodes_;
    std::vector<std::vector<double>> weights_;
    std::vector<int> multiplicity_;
    std::vector<GeometricBlock> blocks_;
    std::vector<int> cuts1_, cuts2_;
    std::vector<std::size_t> sizes_;
};

namespace detail {

inline std::vector<std::pair<int, int>> split_ranges(int n, int parts, const char* dir) {
    if (parts < 1) throw std::invalid_argument(std::string("decompose: parts") + dir + " must be >= 1");
    const int base = n / parts;
    if (base == 0)
        throw std::invalid_argument(std::string("decompose: empty part in direction ") + dir);
    std::vector<std::pair<int, int>> r(parts);
    for (int b = 0; b < parts; ++b) {
        const int lo = b * base;
        const int hi = (b + 1 == parts) ? n : lo + base;
        r[b] = {lo, hi};
    }
    return r;
}

}  // namespace detail

inline Decomposition decompose(const Grid& g, int parts1, int parts2, Flavor flavor, int layers = 0,
                               Coloring coloring = Coloring::none) {
    if (flavor == Flavor::overlapping && layers < 1)
        throw std::invalid_argument("decompose: overlapping flavor needs layers >= 1");
    if (flavor == Flavor::non_overlapping && layers != 0)
        throw std::invalid_argument("decompose: layers only apply to the overlapping flavor");

    const auto r1 = detail::split_ranges(g.n1, parts1, "1");
    const auto r2 = detail::split_ranges(g.n2, parts2, "2");

    // interior cuts of the base partition, for interface bookkeeping
    std::vector<int> cuts1, cuts2;
    for (int b = 0; b + 1 < parts1; ++b) cuts1.push_back(r1[b].second);
    for (int b = 0; b + 1 < parts2; ++b) cuts2.push_back(r2[b].second);

    std::vector<Decomposition::GeometricBlock> blocks;
    blocks.reserve(static_cast<std::size_t>(parts1) * parts2);
    for (int b2 = 0; b2 < parts2; ++b2)
        for (int b1 = 0; b1 < parts1; ++b1) {
            Decomposition::GeometricBlock blk;
            blk.b1 = b1;
            blk.b2 = b2;
            blk.i_lo = r1[b1].first;
            blk.i_hi = r1[b1].second;
            blk.j_lo = r2[b2].first;
            blk.j_hi = r2[b2].second;
            if (flavor == Flavor::overlapping) {
                blk.i_lo = std::max(0, blk.i_lo - layers);
                blk.i_hi = std::min(g.n1, blk.i_hi + layers);
                blk.j_lo = std::max(0, blk.j_lo - layers);
                blk.j_hi = std::min(g.n2, blk.j_hi + layers);
                if (parts1 > 1 && blk.i_hi - blk.i_lo == g.n1)
                    throw std::invalid_argument("decompose: overlap consumes the entire direction 1");
                if (parts2 > 1 && blk.j_hi - blk.j_lo == g.n2)
                    throw std::invalid_argument("decompose: overlap consumes the entire direction 2");
            }
            blk.color = (b1 + b2) % 2;
            blk.subdomain = -1;
            blocks.push_back(blk);
        }

    int p = 0;
    if (coloring == Coloring::red_black) {
        if (blocks.size() < 2)
            throw std::invalid_argument("decompose: red_black coloring needs at least two blocks");
        // same-color blocks must stay disjoint or the consolidation is invalid
        for (std::size_t a = 0; a < blocks.size(); ++a)
            for (std::size_t b = a + 1; b < blocks.size(); ++b) {
                if (blocks[a].color != blocks[b].color) continue;
                const bool overlap_i = blocks[a].i_lo < blocks[b].i_hi && blocks[b].i_lo < blocks[a].i_hi;
                const bool overlap_j = blocks[a].j_lo < blocks[b].j_hi && blocks[b].j_lo < blocks[a].j_hi;
                if (overlap_i && overlap_j)
                    throw std::invalid_argument(
                        "decompose: same-color blocks overlap, grid is not checkerboard 2-colorable");
            }
        p = 2;
        for (auto& blk : blocks) blk.subdomain = blk.color;
    } else {
        p = static_cast<int>(blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].subdomain = static_cast<int>(b);
    }

    // multiplicity m(x) = number of subdomains containing x (same-color blocks
    // are disjoint, so counting blocks is counting subdomains)
    std::vector<int> mult(g.size(), 0);
    for (const auto& blk : blocks)
        for (int j = blk.j_lo; j < blk.j_hi; ++j)
            for (int i = blk.i_lo; i < blk.i_hi; ++i)
                mult[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * g.n1] += 1;
    for (std::size_t k = 0; k < mult.size(); ++k)
        if (mult[k] == 0)
            throw std::invalid_argument("decompose: node not covered by any subdomain");

    std::vector<std::vector<std::size_t>> nodes(p);
    std::vector<std::vector<double>> weights(p);
    for (const auto& blk : blocks)
        for (int j = blk.j_lo; j < blk.j_hi; ++j)
            for (int i = blk.i_lo; i < blk.i_hi; ++i) {
                const std::size_t idx = static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * g.n1;
                nodes[blk.subdomain].push_back(idx);
                weights[blk.subdomain].push_back(1.0 / std::sqrt(static_cast<double>(mult[idx])));
            }

    return Decomposition(g, flavor, layers, coloring, p, std::move(nodes), std::move(weights),
                         std::move(mult), std::move(blocks), std::move(cuts1), std::move(cuts2));
}

// ---------------------------------------------------------------------------
// block operator applications, all matrix-free through restrict/apply/extend
// ---------------------------------------------------------------------------

/// Full operator matrix bold-A = {R_alpha A R*_beta}: restrict(A extend(v)).
inline BlockVector apply_block_full(const Decomposition& D, const EllipticOperator& A,
                                    const BlockVector& vb) {
    D.require_shape(vb, "apply_block_full");
    return D.restrict(A.apply(D.extend(vb)));
}

namespace detail {

// y_alpha = R_alpha A R*_alpha x_alpha using a grid-sized scratch buffer that
// is zero outside omega_alpha on entry and restored to zero on exit.
inline void diag_block_apply(const Decomposition& D, const EllipticOperator& A, int a,
                             std::span<const double> x, std::span<double> y,
                             std::vector<double>& scratch) {
    const auto& nd = D.nodes(a);
    const auto& w = D.weights(a);
    for (std::size_t k = 0; k < nd.size(); ++k) scratch[nd[k]] = w[k] * x[k];
    const auto& rows = A.rows();
    for (std::size_t k = 0; k < nd.size(); ++k) y[k] = w[k] * rows.row_dot(nd[k], scratch.data());
    for (std::size_t k = 0; k < nd.size(); ++k) scratch[nd[k]] = 0.0;
}

}  // namespace detail

/// Diagonal part bold-A0 = diag{R_alpha A R*_alpha}.
inline BlockVector apply_block_diag(const Decomposition& D, const EllipticOperator& A,
                                    const BlockVector& vb) {
    D.require_shape(vb, "apply_block_diag");
    BlockVector out = D.zero_block_vector();
    std::vector<double> scratch(D.grid().size(), 0.0);
    for (int a = 0; a < D.subdomains(); ++a)
        detail::diag_block_apply(D, A, a, vb.component(a), out.component(a), scratch);
    return out;
}

namespace detail {

// Triangular parts: lower holds blocks beta < alpha plus half the diagonal,
// upper the adjoint counterpart, so lower + upper = full and lower* = upper.
inline BlockVector apply_block_triangular(const Decomposition& D, const EllipticOperator& A,
                                          const BlockVector& vb, bool lower) {
    D.require_shape(vb, "apply_block_triangular");
    const int p = D.subdomains();
    BlockVector out = D.zero_block_vector();
    std::vector<double> acc(D.grid().size(), 0.0);   // sum of R*_beta v_beta over processed beta
    std::vector<double> work(D.grid().size(), 0.0);  // acc + half of own scatter
    const auto& rows = A.rows();
    for (int step = 0; step < p; ++step) {
        const int a = lower ? step : p - 1 - step;
        const auto& nd = D.nodes(a);
        const auto& w = D.weights(a);
        auto x = vb.component(a);
        auto y = out.component(a);
        work = acc;
        for (std::size_t k = 0; k < nd.size(); ++k) work[nd[k]] += 0.5 * w[k] * x[k];
        for (std::size_t k = 0; k < nd.size(); ++k) y[k] = w[k] * rows.row_dot(nd[k], work.data());
        D.scatter_component(a, x, acc);
    }
    return out;
}

}  // namespace detail

inline BlockVector apply_block_lower(const Decomposition& D, const EllipticOperator& A,
                                     const BlockVector& vb) {
    return detail::apply_block_triangular(D, A, vb, true);
}

inline BlockVector apply_block_upper(const Decomposition& D, const EllipticOperator& A,
                                     const BlockVector& vb) {
    return detail::apply_block_triangular(D, A, vb, false);
}

/// Scalar product of bold-H: componentwise H products.
inline double block_inner_product(const Decomposition& D, const BlockVector& a, const BlockVector& b) {
    D.require_shape(a, "block_inner_product");
    require_same_shape(a, b, "block_inner_product");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
    return s * D.grid().cell_area();
}

inline double block_norm(const Decomposition& D, const BlockVector& v) {
    return std::sqrt(block_inner_product(D, v, v));
}

/// ||v||_A in bold-H via the full block operator.
inline double block_energy_norm(const Decomposition& D, const EllipticOperator& A,
                                const BlockVector& v) {
    double q = block_inner_product(D, apply_block_full(D, A, v), v);
    return std::sqrt(std::max(q, 0.0));
}

}  // namespace ddsplit
