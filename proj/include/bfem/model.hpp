#ifndef BFEM_MODEL_HPP
#define BFEM_MODEL_HPP

#include <cmath>

#include "bfem/types.hpp"

namespace bfem {

inline constexpr double kVarianceFloor = 1e-8;

/// Number of free parameters gamma of a submodel: the common part
/// omega = K-1 + p*d - d(d+1)/2 plus the structure-dependent counts for
/// the latent covariances and the noise variances.
inline long free_param_count(const SubmodelSpec& spec, const Dims& dims) {
    const long K = dims.K, p = dims.p, d = dims.d;
    const long omega = K - 1 + p * d - d * (d + 1) / 2;
    long sigma_part = 0;
    switch (spec.sigma_structure) {
        case SigmaStructure::Full:
            sigma_part = d * (d + 1) / 2;
            break;
        case SigmaStructure::Diagonal:
            sigma_part = d;
            break;
        case SigmaStructure::Isotropic:
            sigma_part = 1;
            break;
    }
    if (!spec.sigma_shared) sigma_part *= K;
    const long beta_part = spec.beta_shared ? 1 : K;
    return omega + sigma_part + beta_part;
}

// Comparison baselines of the family table.
inline long free_param_count_full_gmm(const Dims& dims) {
    const long K = dims.K, p = dims.p;
    return K - 1 + K * p + K * p * (p + 1) / 2;
}
inline long free_param_count_spherical_gmm(const Dims& dims) {
    const long K = dims.K, p = dims.p;
    return K - 1 + 2 * K * p;
}

/// Observation-space covariance of cluster k:
///   S_k = U Sigma_k U^T + beta_k (I_p - U U^T).
/// Used by oracles and small-instance checks only; O(p^2) storage.
inline Matrix marginal_covariance(const ModelParams& params, int k) {
    const auto& U = params.U;
    const int p = static_cast<int>(U.rows());
    Matrix S = U * params.sigma[k] * U.transpose();
    S += params.beta[k] * (Matrix::Identity(p, p) - U * U.transpose());
    return S;
}

namespace detail {

// Projects one d x d covariance onto the structure constraint and floors
// the variances.
inline Matrix project_sigma(const Matrix& raw, SigmaStructure structure,
                            bool allow_floor) {
    const int d = static_cast<int>(raw.rows());
    Matrix sym = 0.5 * (raw + raw.transpose());
    Matrix out;
    switch (structure) {
        case SigmaStructure::Full: {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
            Vector ev = eig.eigenvalues();
            for (int j = 0; j < d; ++j) {
                if (ev[j] < kVarianceFloor) {
                    if (!allow_floor && ev[j] <= 0.0)
                        throw DegenerateCovariance(
                            "non-positive latent covariance eigenvalue");
                    ev[j] = kVarianceFloor;
                }
            }
            out = eig.eigenvectors() * ev.asDiagonal() *
                  eig.eigenvectors().transpose();
            break;
        }
        case SigmaStructure::Diagonal: {
            out = Matrix::Zero(d, d);
            for (int j = 0; j < d; ++j) {
                double v = sym(j, j);
                if (v < kVarianceFloor) {
                    if (!allow_floor && v <= 0.0)
                        throw DegenerateCovariance("non-positive diagonal variance");
                    v = kVarianceFloor;
                }
                out(j, j) = v;
            }
            break;
        }
        case SigmaStructure::Isotropic: {
            double a = sym.trace() / d;
            if (a < kVarianceFloor) {
                if (!allow_floor && a <= 0.0)
                    throw DegenerateCovariance("non-positive isotropic variance");
                a = kVarianceFloor;
            }
            out = a * Matrix::Identity(d, d);
            break;
        }
    }
    return out;
}

}  // namespace detail

/// Projects raw M-step estimates onto the constraint set of `spec`:
/// zero off-diagonals for Diagonal, trace average for Isotropic, and a
/// pi-weighted average across clusters for shared parameters. Variances
/// are floored at kVarianceFloor unless flooring is disabled, in which
/// case non-positive variances throw DegenerateCovariance.
inline ModelParams enforce_constraints(const ModelParams& raw,
                                       const SubmodelSpec& spec,
                                       bool allow_floor = true) {
    const int K = static_cast<int>(raw.pi.size());
    const int d = static_cast<int>(raw.sigma[0].rows());
    ModelParams out = raw;

    if (spec.sigma_shared) {
        Matrix pooled = Matrix::Zero(d, d);
        for (int k = 0; k < K; ++k) pooled += raw.pi[k] * raw.sigma[k];
        pooled = detail::project_sigma(pooled, spec.sigma_structure, allow_floor);
        for (int k = 0; k < K; ++k) out.sigma[k] = pooled;
    } else {
        for (int k = 0; k < K; ++k)
            out.sigma[k] =
                detail::project_sigma(raw.sigma[k], spec.sigma_structure, allow_floor);
    }

    if (spec.beta_shared) {
        double pooled = raw.pi.dot(raw.beta);
        if (pooled < kVarianceFloor) {
            if (!allow_floor && pooled <= 0.0)
                throw DegenerateCovariance("non-positive noise variance");
            pooled = kVarianceFloor;
        }
        out.beta.setConstant(K, pooled);
    } else {
        for (int k = 0; k < K; ++k) {
            double b = raw.beta[k];
            if (b < kVarianceFloor) {
                if (!allow_floor && b <= 0.0)
                    throw DegenerateCovariance("non-positive noise variance");
                b = kVarianceFloor;
            }
            out.beta[k] = b;
        }
    }
    return out;
}

}  // namespace bfem

#endif
