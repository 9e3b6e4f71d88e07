#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ddsplit/decomposition.hpp"
#include "ddsplit/elliptic.hpp"
#include "ddsplit/grid.hpp"

namespace ddsplit {

/// Dense matrix of A, built by applying it to unit grid functions. Small
/// grids only.
inline Eigen::MatrixXd dense_operator(const EllipticOperator& A) {
    const std::size_t n = A.grid().size();
    Eigen::MatrixXd M(n, n);
    GridFunction e(A.grid());
    for (std::size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        GridFunction col = A.apply(e);
        for (std::size_t r = 0; r < n; ++r) M(r, c) = col[r];
        e[c] = 0.0;
    }
    return M;
}

enum class BlockOperatorKind { full, diag, lower, upper };

/// Dense matrix of a block operator on bold-H, by columns.
inline Eigen::MatrixXd dense_block_operator(const Decomposition& D, const EllipticOperator& A,
                                            BlockOperatorKind kind) {
    BlockVector probe = D.zero_block_vector();
    const std::size_t n = probe.size();
    Eigen::MatrixXd M(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        probe.data()[c] = 1.0;
        BlockVector col;
        switch (kind) {
            case BlockOperatorKind::full: col = apply_block_full(D, A, probe); break;
            case BlockOperatorKind::diag: col = apply_block_diag(D, A, probe); break;
            case BlockOperatorKind::lower: col = apply_block_lower(D, A, probe); break;
            case BlockOperatorKind::upper: col = apply_block_upper(D, A, probe); break;
        }
        for (std::size_t r = 0; r < n; ++r) M(r, c) = col.data()[r];
        probe.data()[c] = 0.0;
    }
    return M;
}

/// Eigenvalue-based verification of the operator inequalities behind the
/// stability theorems, on grids small enough for dense eigendecomposition.
struct OperatorInequalityReport {
    int p = 0;
    double sigma = 0.0;
    double tau = 0.0;
    double max_asym_A = 0.0;             // max |A - A^T|
    double max_asym_blockA = 0.0;        // max |bold-A - bold-A^T|
    double min_eig_A_minus_c1 = 0.0;     // min eig(A - c1 I)
    double min_eig_blockA = 0.0;         // min eig(bold-A)
    double min_eig_A0_minus_Ap = 0.0;    // min eig(A0 - A/p)
    double min_eig_C3 = 0.0;             // min eig(sigma A0 - A/2) at the given sigma
    double min_eig_C3_threshold = 0.0;   // same at sigma = p/2
    double min_eig_C6 = 0.0;             // min eig(sigma tau^2 A0 - tau^2/4 A) at the given sigma
    double min_eig_C6_threshold = 0.0;   // same at sigma = p/4
    double max_diff_A1T_A2 = 0.0;        // max |A1^T - A2|

    void print(std::ostream& os) const {
        os << "p = " << p << ", sigma = " << sigma << ", tau = " << tau << '\n'
           << "max asymmetry of A:            " << max_asym_A << '\n'
           << "max asymmetry of block A:      " << max_asym_blockA << '\n'
           << "min eig(A - c1 I):             " << min_eig_A_minus_c1 << '\n'
           << "min eig(block A):              " << min_eig_blockA << '\n'
           << "min eig(A0 - A/p):             " << min_eig_A0_minus_Ap << '\n'
           << "min eig(sigma A0 - A/2):       " << min_eig_C3 << " (at sigma = p/2: "
           << min_eig_C3_threshold << ")\n"
           << "min eig(sigma t^2 A0 - t^2/4 A): " << min_eig_C6 << " (at sigma = p/4: "
           << min_eig_C6_threshold << ")\n"
           << "max |A1^T - A2|:               " << max_diff_A1T_A2 << '\n';
    }
};

inline OperatorInequalityReport check_operator_inequalities(const Grid& g,
                                                            const CoefficientField& coeff,
                                                            const Decomposition& D, double sigma,
                                                            double tau) {
    if (g.size() > 36)
        throw std::invalid_argument("check_operator_inequalities: dense check refuses grids above 6x6");
    require_same_grid(g, D.grid(), "check_operator_inequalities");

    const EllipticOperator A = assemble(g, coeff);
    const Eigen::MatrixXd Ad = dense_operator(A);
    const Eigen::MatrixXd Bfull = dense_block_operator(D, A, BlockOperatorKind::full);
    const Eigen::MatrixXd Bdiag = dense_block_operator(D, A, BlockOperatorKind::diag);
    const Eigen::MatrixXd Blow = dense_block_operator(D, A, BlockOperatorKind::lower);
    const Eigen::MatrixXd Bup = dense_block_operator(D, A, BlockOperatorKind::upper);

    auto min_eig = [](const Eigen::MatrixXd& M) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
        return es.eigenvalues().minCoeff();
    };

    OperatorInequalityReport rep;
    rep.p = D.subdomains();
    rep.sigma = sigma;
    rep.tau = tau;
    rep.max_asym_A = (Ad - Ad.transpose()).cwiseAbs().maxCoeff();
    rep.max_asym_blockA = (Bfull - Bfull.transpose()).cwiseAbs().maxCoeff();
    rep.min_eig_A_minus_c1 =
        min_eig(Ad - coeff.c1 * Eigen::MatrixXd::Identity(Ad.rows(), Ad.cols()));
    rep.min_eig_blockA = min_eig(Bfull);
    rep.min_eig_A0_minus_Ap = min_eig(Bdiag - Bfull / rep.p);
    rep.min_eig_C3 = min_eig(sigma * Bdiag - 0.5 * Bfull);
    rep.min_eig_C3_threshold = min_eig(0.5 * rep.p * Bdiag - 0.5 * Bfull);
    rep.min_eig_C6 = min_eig(sigma * tau * tau * Bdiag - 0.25 * tau * tau * Bfull);
    rep.min_eig_C6_threshold = min_eig(0.25 * rep.p * tau * tau * Bdiag - 0.25 * tau * tau * Bfull);
    rep.max_diff_A1T_A2 = (Blow.transpose() - Bup).cwiseAbs().maxCoeff();
    return rep;
}

}  // namespace ddsplit
