#ifndef BFEM_SCATTER_HPP
#define BFEM_SCATTER_HPP

#include <cmath>
#include <vector>

#include "bfem/types.hpp"

namespace bfem {

inline constexpr double kRidgeEps = 1e-8;
inline constexpr double kConditionThreshold = 1e12;

/// Scatter matrices driving the F-step. S_T is fixed once per dataset;
/// only the soft between-class part changes across iterations. The factor
/// G (p x K, S_B = G G^T) carries the rank <= K-1 structure used by the
/// low-rank solvers.
struct ScatterSet {
    Matrix S_T;        // total covariance, as computed from the data
    Matrix S_T_solve;  // ridge-regularized copy used for inversion
    Matrix S_T_inv;
    Matrix S_B;
    Matrix G;  // p x K, S_B = G * G^T
    std::vector<Vector> means_soft;
    Vector grand_mean;
};

/// Total covariance S_T = (1/n) sum_i (y_i - ybar)(y_i - ybar)^T and its
/// inverse. A ridge eps * tr(S_T)/p * I is added before inverting when the
/// condition number exceeds a threshold.
inline ScatterSet total_scatter(const Matrix& Y) {
    const int n = static_cast<int>(Y.rows());
    const int p = static_cast<int>(Y.cols());
    if (n < 2) throw Error("total_scatter needs n >= 2");

    ScatterSet out;
    out.grand_mean = Y.colwise().mean();
    Matrix centered = Y.rowwise() - out.grand_mean.transpose();
    out.S_T = centered.transpose() * centered / n;

    const double tr = out.S_T.trace();
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw SingularScatter("total scatter is numerically zero");

    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.S_T);
    const double ev_max = eig.eigenvalues().maxCoeff();
    const double ev_min = eig.eigenvalues().minCoeff();
    out.S_T_solve = out.S_T;
    if (!(ev_min > 0.0) || ev_max / ev_min > kConditionThreshold)
        out.S_T_solve += (kRidgeEps * tr / p) * Matrix::Identity(p, p);
    out.S_T_inv = out.S_T_solve.llt().solve(Matrix::Identity(p, p));
    return out;
}

/// Fills the soft between-class part of `scatters` from responsibilities:
/// S_B = (1/n) sum_k n_k (m_k - ybar)(m_k - ybar)^T with soft means
/// m_k = (1/n_k) sum_i tau_ik y_i.
inline void soft_between_scatter(const Matrix& Y, const Matrix& tau,
                                 ScatterSet& scatters,
                                 double eps_count = 1e-12) {
    const int n = static_cast<int>(Y.rows());
    const int p = static_cast<int>(Y.cols());
    const int K = static_cast<int>(tau.cols());

    Vector counts = tau.colwise().sum();
    for (int k = 0; k < K; ++k)
        if (counts[k] < eps_count)
            throw EmptyCluster("soft count vanished in cluster " +
                               std::to_string(k));

    Matrix weighted = tau.transpose() * Y;  // K x p, rows are n_k * m_k
    scatters.means_soft.resize(K);
    scatters.G.resize(p, K);
    for (int k = 0; k < K; ++k) {
        scatters.means_soft[k] = weighted.row(k).transpose() / counts[k];
        scatters.G.col(k) = std::sqrt(counts[k] / n) *
                            (scatters.means_soft[k] - scatters.grand_mean);
    }
    scatters.S_B = scatters.G * scatters.G.transpose();
}

}  // namespace bfem

#endif
