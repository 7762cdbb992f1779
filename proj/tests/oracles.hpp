// Independent reference implementations used to cross-check the library.
// Everything here deliberately takes the slow, dense route: full p x p
// covariances, stacked-system Gaussian marginals, and exhaustive pair
// counting, so agreement with the block-structured production code is a
// meaningful check rather than a tautology.
#ifndef BFEM_TEST_ORACLES_HPP
#define BFEM_TEST_ORACLES_HPP

#include <cmath>
#include <random>
#include <vector>

#include "bfem/inference.hpp"
#include "bfem/model.hpp"
#include "bfem/types.hpp"

namespace oracle {

using bfem::Matrix;
using bfem::Vector;

inline Matrix random_orthonormal(int p, int d, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    Matrix A(p, d);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = nd(gen);
    Eigen::HouseholderQR<Matrix> qr(A);
    return qr.householderQ() * Matrix::Identity(p, d);
}

inline Matrix random_spd(int d, std::mt19937_64& gen, double jitter = 0.1) {
    std::normal_distribution<double> nd;
    Matrix A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = nd(gen);
    return A * A.transpose() + jitter * Matrix::Identity(d, d);
}

struct Instance {
    Matrix Y;
    bfem::ModelParams params;
    bfem::VariationalState state;
    bfem::Hyperparams hyper;
};

/// Random model, variational factors, and data for property checks.
inline Instance random_instance(int n, int p, int K, int d,
                                std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.5, 2.0);
    Instance inst;
    inst.params.U = random_orthonormal(p, d, gen);
    inst.params.pi.resize(K);
    inst.params.beta.resize(K);
    for (int k = 0; k < K; ++k) {
        inst.params.sigma.push_back(random_spd(d, gen));
        inst.params.beta[k] = ud(gen);
        inst.params.pi[k] = ud(gen);
    }
    inst.params.pi /= inst.params.pi.sum();

    inst.hyper.nu = Vector::Zero(d);
    for (int j = 0; j < d; ++j) inst.hyper.nu[j] = nd(gen);
    inst.hyper.lambda = ud(gen) * 10.0;

    inst.state.m_tilde.resize(K);
    inst.state.S_tilde.resize(K);
    for (int k = 0; k < K; ++k) {
        inst.state.m_tilde[k] = Vector::Zero(d);
        for (int j = 0; j < d; ++j) inst.state.m_tilde[k][j] = 3.0 * nd(gen);
        inst.state.S_tilde[k] = random_spd(d, gen, 0.05);
    }

    inst.Y.resize(n, p);
    std::uniform_int_distribution<int> pick(0, K - 1);
    for (int i = 0; i < n; ++i) {
        const int k = pick(gen);
        Vector y = inst.params.U * inst.state.m_tilde[k];
        for (int j = 0; j < p; ++j)
            y[j] += std::sqrt(inst.params.beta[k]) * nd(gen);
        inst.Y.row(i) = y.transpose();
    }
    // responsibilities: random positive rows normalized to 1
    inst.state.tau.resize(n, K);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < K; ++k) inst.state.tau(i, k) = ud(gen);
        inst.state.tau.row(i) /= inst.state.tau.row(i).sum();
    }
    inst.state.n_tilde = inst.state.tau.colwise().sum();
    return inst;
}

inline double mvn_logpdf(const Vector& x, const Vector& mean,
                         const Matrix& cov) {
    const int p = static_cast<int>(x.size());
    Eigen::LLT<Matrix> llt(cov);
    double logdet = 0.0;
    for (int j = 0; j < p; ++j)
        logdet += 2.0 * std::log(llt.matrixL()(j, j));
    const Vector diff = x - mean;
    const double quad = diff.dot(llt.solve(diff));
    return -0.5 * (p * std::log(2.0 * M_PI) + logdet + quad);
}

/// Expected Gaussian log-density under the mean factor, computed with the
/// explicit p x p observation covariance.
inline Matrix dense_log_density(const Matrix& Y,
                                const bfem::ModelParams& params,
                                const bfem::VariationalState& state) {
    const int n = static_cast<int>(Y.rows());
    const int K = static_cast<int>(params.pi.size());
    Matrix out(n, K);
    for (int k = 0; k < K; ++k) {
        const Matrix S = bfem::marginal_covariance(params, k);
        Eigen::LLT<Matrix> llt(S);
        double logdet = 0.0;
        for (int j = 0; j < S.rows(); ++j)
            logdet += 2.0 * std::log(llt.matrixL()(j, j));
        const Vector mean = params.U * state.m_tilde[k];
        const Matrix spread =
            params.U * state.S_tilde[k] * params.U.transpose();
        const double tr = llt.solve(spread).trace();
        for (int i = 0; i < n; ++i) {
            const Vector diff = Y.row(i).transpose() - mean;
            out(i, k) = std::log(params.pi[k]) -
                        0.5 * (S.rows() * std::log(2.0 * M_PI) + logdet +
                               diff.dot(llt.solve(diff)) + tr);
        }
    }
    return out;
}

inline Matrix dense_responsibilities(const Matrix& Y,
                                     const bfem::ModelParams& params,
                                     const bfem::VariationalState& state) {
    Matrix logd = dense_log_density(Y, params, state);
    Matrix tau(logd.rows(), logd.cols());
    for (int i = 0; i < logd.rows(); ++i) {
        const double m = logd.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logd.row(i).array() - m).exp();
        tau.row(i) = e / e.sum();
    }
    return tau;
}

/// Variational bound via the dense per-observation expectations.
inline double dense_elbo(const Matrix& Y, const bfem::ModelParams& params,
                         const bfem::VariationalState& state,
                         const bfem::Hyperparams& hyper) {
    const int K = static_cast<int>(params.pi.size());
    const int d = static_cast<int>(params.U.cols());
    const Matrix logd = dense_log_density(Y, params, state);
    double J = state.tau.cwiseProduct(logd).sum();
    for (int i = 0; i < state.tau.rows(); ++i)
        for (int k = 0; k < K; ++k)
            if (state.tau(i, k) > 0.0)
                J -= state.tau(i, k) * std::log(state.tau(i, k));
    for (int k = 0; k < K; ++k) {
        const Matrix prior_cov = hyper.lambda * Matrix::Identity(d, d);
        // E_q log p(mu) for Gaussian q: log normal at the mean minus half
        // the precision-weighted spread of q
        J += mvn_logpdf(state.m_tilde[k], hyper.nu, prior_cov) -
             0.5 * state.S_tilde[k].trace() / hyper.lambda;
        Eigen::LLT<Matrix> llt(state.S_tilde[k]);
        double ld = 0.0;
        for (int j = 0; j < d; ++j)
            ld += 2.0 * std::log(llt.matrixL()(j, j));
        J += 0.5 * (d * (std::log(2.0 * M_PI) + 1.0) + ld);
    }
    return J;
}

/// Classification log-likelihood of a hard partition with the latent
/// cluster means integrated out, via the stacked-system Gaussian marginal
/// (conjugacy): for each cluster the subspace coordinates are jointly
/// Gaussian with covariance I (x) Sigma + lambda 11^T (x) I, and the
/// complement coordinates are independent isotropic noise.
inline double conjugate_classification_loglik(
    const Matrix& Yc, const bfem::ModelParams& params,
    const bfem::Hyperparams& hyper, const std::vector<int>& labels) {
    const int n = static_cast<int>(Yc.rows());
    const int p = static_cast<int>(Yc.cols());
    const int K = static_cast<int>(params.pi.size());
    const int d = static_cast<int>(params.U.cols());

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += std::log(params.pi[labels[i]]);

    const Matrix X = Yc * params.U;
    for (int k = 0; k < K; ++k) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (labels[i] == k) members.push_back(i);
        const int m = static_cast<int>(members.size());
        if (m == 0) continue;

        // complement coordinates: isotropic noise
        for (int i : members) {
            const double resid = Yc.row(i).squaredNorm() -
                                 X.row(i).squaredNorm();
            total += -0.5 * ((p - d) * std::log(2.0 * M_PI *
                                                params.beta[k]) +
                             resid / params.beta[k]);
        }

        // subspace coordinates: stacked joint marginal over the mean
        Vector stacked(m * d), mean(m * d);
        Matrix cov = Matrix::Zero(m * d, m * d);
        for (int a = 0; a < m; ++a) {
            stacked.segment(a * d, d) = X.row(members[a]).transpose();
            mean.segment(a * d, d) = hyper.nu;
            for (int b = 0; b < m; ++b)
                cov.block(a * d, b * d, d, d) =
                    hyper.lambda * Matrix::Identity(d, d) +
                    (a == b ? params.sigma[k] : Matrix::Zero(d, d));
        }
        total += mvn_logpdf(stacked, mean, cov);
    }
    return total;
}

/// Conditional-expectation filter for one noisy patch via the explicit
/// p x p Wiener form: E[x|y] = mu + C_x (C_x + s2 I)^{-1} (y - mu) with
/// the clean-signal covariance C_x = U (Sigma - s2 I) U^T, mixed over the
/// clusters with the given weights.
inline Vector dense_wiener_filter(const Vector& y,
                                  const bfem::ModelParams& params,
                                  const bfem::VariationalState& state,
                                  const Eigen::RowVectorXd& weights,
                                  double sigma2) {
    const int p = static_cast<int>(y.size());
    const int K = static_cast<int>(params.pi.size());
    const int d = static_cast<int>(params.U.cols());
    Vector out = Vector::Zero(p);
    for (int k = 0; k < K; ++k) {
        const Matrix Cx =
            params.U *
            (params.sigma[k] - sigma2 * Matrix::Identity(d, d)) *
            params.U.transpose();
        const Matrix Cy = Cx + sigma2 * Matrix::Identity(p, p);
        const Vector mu = params.U * state.m_tilde[k];
        out += weights[k] * (mu + Cx * Cy.llt().solve(y - mu));
    }
    return out;
}

/// Adjusted Rand index from exhaustive pair counting.
inline double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    const int n = static_cast<int>(a.size());
    double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            if (sa && sb) ++n11;
            else if (!sa && !sb) ++n00;
            else if (sa) ++n10;
            else ++n01;
        }
    const double denom =
        (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if (denom == 0.0) return 1.0;
    return 2.0 * (n11 * n00 - n10 * n01) / denom;
}

}  // namespace oracle

#endif
