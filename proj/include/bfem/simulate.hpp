#ifndef BFEM_SIMULATE_HPP
#define BFEM_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "bfem/rng.hpp"
#include "bfem/types.hpp"

namespace bfem {

struct SimOutput {
    Matrix Y;
    std::vector<int> Z;  // labels in 0..K-1
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    Matrix true_U;       // p x d loading when applicable (subspace scenario)
    Vector true_mean_shift;  // Chang scenario: the vector r
};

/// Two-component Gaussian mixture in dimension 15 whose discriminative
/// direction mixes the first and last coordinates: means +-0.5 r with
/// r_j = 0.95 - 0.05 j and a structured shared covariance. Fair membership
/// indicator, pi = (1/2, 1/2).
inline SimOutput gen_chang(int n, std::uint64_t seed) {
    if (n < 2) throw Error("gen_chang needs n >= 2");
    const int p = 15;
    Vector r(p);
    Vector f(p);
    for (int j = 0; j < p; ++j) {
        r[j] = 0.95 - 0.05 * (j + 1);
        f[j] = (j + 1 <= 8) ? -0.9 : 0.5;
    }
    Matrix S(p, p);
    for (int j = 0; j < p; ++j)
        for (int l = 0; l < p; ++l)
            S(j, l) = (j == l) ? 1.0 : -0.13 * f[j] * f[l];
    const Matrix L = S.llt().matrixL();

    Rng rng(seed);
    SimOutput out;
    out.seed = seed;
    out.Y.resize(n, p);
    out.Z.resize(n);
    out.true_mean_shift = r;
    for (int i = 0; i < n; ++i) {
        out.Z[i] = rng.uniform() < 0.5 ? 0 : 1;
        const double sign = out.Z[i] == 0 ? 0.5 : -0.5;
        out.Y.row(i) = (sign * r + L * rng.gaussian_vector(p)).transpose();
    }
    return out;
}

/// Three-component latent mixture in d = 2 embedded in dimension p by a
/// random orthogonal matrix from the QR decomposition of a Gaussian matrix
/// (signs fixed so the diagonal of R is positive). Noise variance in the
/// complement set from the requested SNR: beta = tr(Sigma) / 10^(snr/10).
inline SimOutput gen_subspace(int n, int p, double snr_db,
                              std::uint64_t seed) {
    const int K = 3, d = 2;
    if (p < 3) throw Error("gen_subspace needs p >= 3");
    if (n < K) throw Error("gen_subspace needs n >= K");

    Matrix sigma(d, d);
    sigma << 1.5, 0.75, 0.75, 0.45;
    const Matrix L = sigma.llt().matrixL();
    const Vector pi = (Vector(K) << 0.4, 0.3, 0.3).finished();
    const double beta = sigma.trace() / std::pow(10.0, snr_db / 10.0);

    Rng rng(seed);
    // random orthogonal embedding
    Matrix A(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) A(i, j) = 10.0 * rng.gaussian();
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix D = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j)
        if (R(j, j) < 0.0) D.col(j) = -D.col(j);

    SimOutput out;
    out.seed = seed;
    out.snr_db = snr_db;
    out.true_U = D.leftCols(d);
    out.Y.resize(n, p);
    out.Z.resize(n);
    const double noise_sd = std::sqrt(beta);
    for (int i = 0; i < n; ++i) {
        out.Z[i] = rng.discrete(pi);
        Vector mu(d);
        mu << 0.0, 3.0 * (out.Z[i] + 1);
        Vector full(p);
        full.head(d) = mu + L * rng.gaussian_vector(d);
        full.tail(p - d) = noise_sd * rng.gaussian_vector(p - d);
        out.Y.row(i) = (D * full).transpose();
    }
    return out;
}

}  // namespace bfem

#endif
