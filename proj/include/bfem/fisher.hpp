#ifndef BFEM_FISHER_HPP
#define BFEM_FISHER_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "bfem/scatter.hpp"
#include "bfem/types.hpp"

namespace bfem {

struct FStepResult {
    Matrix U;          // p x d, column-orthonormal
    Vector fisher;     // 1-D criterion u^T S_B u / u^T S_T u per column
    bool rank_deficient = false;
};

namespace detail {

// Orthonormal basis of the complement of the columns of V, built by
// Gram-Schmidt over the canonical basis with largest-residual pivoting.
inline Matrix orthonormal_complement(const Matrix& V, int count) {
    const int p = static_cast<int>(V.rows());
    Matrix R = Matrix::Identity(p, p);
    if (V.cols() > 0) R -= V * (V.transpose() * R);
    Matrix P(p, count);
    for (int j = 0; j < count; ++j) {
        int pivot = 0;
        double best = -1.0;
        for (int c = 0; c < p; ++c) {
            const double norm = R.col(c).norm();
            if (norm > best) {
                best = norm;
                pivot = c;
            }
        }
        Vector v = R.col(pivot) / best;
        P.col(j) = v;
        R -= v * (v.transpose() * R);
    }
    return P;
}

// Leading eigenpair of T^{-1} G G^T through the K x K symmetric problem
// G^T T^{-1} G. Returns (gamma, direction); gamma <= 0 signals a
// numerically zero between-scatter.
inline std::pair<double, Vector> leading_ratio_direction(const Matrix& T,
                                                         const Matrix& G) {
    Matrix B = T.llt().solve(G);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G.transpose() * B);
    const int K = static_cast<int>(G.cols());
    const double gamma = eig.eigenvalues()[K - 1];
    Vector dir = B * eig.eigenvectors().col(K - 1);
    const double norm = dir.norm();
    if (gamma <= 0.0 || norm <= 0.0) return {0.0, Vector()};
    return {gamma, dir / norm};
}

}  // namespace detail

/// Greedy orthonormal-discriminant-vector solver. The first direction is
/// the leading eigenvector of S_T^{-1} S_B; each further direction solves
/// the generalized problem projected onto the orthogonal complement of the
/// directions found so far. Columns come back ordered by decreasing 1-D
/// criterion. When S_B has fewer than d informative directions the matrix
/// is padded with an orthonormal completion and flagged.
inline FStepResult fstep_odv(const ScatterSet& scatters, int d) {
    const int p = static_cast<int>(scatters.S_T.rows());
    const double tol = 1e-10 * std::max(1.0, scatters.S_B.trace());

    FStepResult res;
    res.U.resize(p, d);
    int found = 0;
    for (int r = 0; r < d; ++r) {
        if (r == 0) {
            auto [gamma, u] =
                detail::leading_ratio_direction(scatters.S_T_solve, scatters.G);
            if (gamma <= tol) break;
            res.U.col(0) = u;
        } else {
            Matrix P = detail::orthonormal_complement(res.U.leftCols(r), p - r);
            Matrix T_r = P.transpose() * scatters.S_T_solve * P;
            Matrix G_r = P.transpose() * scatters.G;
            auto [gamma, a] = detail::leading_ratio_direction(T_r, G_r);
            if (gamma <= tol) break;
            Vector u = P * a;
            res.U.col(r) = u / u.norm();
        }
        ++found;
    }

    if (found < d) {
        res.rank_deficient = true;
        Matrix pad =
            detail::orthonormal_complement(res.U.leftCols(found), d - found);
        res.U.rightCols(d - found) = pad;
    }

    res.fisher.resize(d);
    for (int r = 0; r < d; ++r) {
        const Vector u = res.U.col(r);
        res.fisher[r] = u.dot(scatters.S_B * u) / u.dot(scatters.S_T_solve * u);
    }
    // columns sorted by decreasing 1-D criterion
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return res.fisher[a] > res.fisher[b];
    });
    Matrix sortedU(p, d);
    Vector sortedF(d);
    for (int j = 0; j < d; ++j) {
        sortedU.col(j) = res.U.col(order[j]);
        sortedF[j] = res.fisher[order[j]];
    }
    res.U = std::move(sortedU);
    res.fisher = std::move(sortedF);
    return res;
}

/// Reconstruction-criterion solver: the d leading left singular vectors of
/// S_T^{-1} S_B, computed through the rank <= K factorization.
inline FStepResult fstep_svd(const ScatterSet& scatters, int d) {
    const int p = static_cast<int>(scatters.S_T.rows());
    const int K = static_cast<int>(scatters.G.cols());
    const double tol = 1e-10 * std::max(1.0, scatters.S_B.trace());

    // S_T^{-1} S_B = B G^T with B p x K; thin QR of B reduces the SVD to an
    // m x p problem with m = min(p, K) (the factor Q has at most p columns).
    const int m = std::min(p, K);
    Matrix B = scatters.S_T_solve.llt().solve(scatters.G);
    Eigen::HouseholderQR<Matrix> qr(B);
    Matrix Q = qr.householderQ() * Matrix::Identity(p, m);
    Matrix R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Matrix> svd(R * scatters.G.transpose(),
                                 Eigen::ComputeThinU);

    FStepResult res;
    res.U.resize(p, d);
    int found = 0;
    for (int j = 0; j < std::min(d, m); ++j) {
        if (svd.singularValues()[j] <= tol) break;
        res.U.col(j) = Q * svd.matrixU().col(j);
        ++found;
    }
    if (found < d) {
        res.rank_deficient = true;
        Matrix pad =
            detail::orthonormal_complement(res.U.leftCols(found), d - found);
        res.U.rightCols(d - found) = pad;
    }
    res.fisher.resize(d);
    for (int r = 0; r < d; ++r) {
        const Vector u = res.U.col(r);
        res.fisher[r] = u.dot(scatters.S_B * u) / u.dot(scatters.S_T_solve * u);
    }
    return res;
}

}  // namespace bfem

#endif
