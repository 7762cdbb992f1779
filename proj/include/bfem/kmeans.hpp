#ifndef BFEM_KMEANS_HPP
#define BFEM_KMEANS_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "bfem/rng.hpp"
#include "bfem/types.hpp"

namespace bfem {

inline constexpr int kKMeansMaxIter = 25;

/// Lloyd's algorithm with k-means++ seeding; deterministic given the seed.
/// Clusters that empty out are re-seeded at the point farthest from its
/// assigned centroid.
inline std::vector<int> kmeans(const Matrix& Y, int K, std::uint64_t seed) {
    const int n = static_cast<int>(Y.rows());
    if (n < K) throw Error("kmeans needs n >= K");
    Rng rng(seed);

    // k-means++ seeding
    Matrix centroids(K, Y.cols());
    centroids.row(0) = Y.row(static_cast<int>(rng.uniform_int(n)));
    Vector dist2 = (Y.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
        int pick = dist2.sum() > 0.0 ? rng.discrete(dist2)
                                     : static_cast<int>(rng.uniform_int(n));
        centroids.row(k) = Y.row(pick);
        dist2 = dist2.cwiseMin(
            (Y.rowwise() - centroids.row(k)).rowwise().squaredNorm());
    }

    std::vector<int> labels(n, 0);
    for (int iter = 0; iter < kKMeansMaxIter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                const double dd = (Y.row(i) - centroids.row(k)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = k;
                }
            }
            if (labels[i] != best) changed = true;
            labels[i] = best;
        }

        Matrix sums = Matrix::Zero(K, Y.cols());
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(K);
        for (int i = 0; i < n; ++i) {
            sums.row(labels[i]) += Y.row(i);
            counts[labels[i]] += 1;
        }
        for (int k = 0; k < K; ++k) {
            if (counts[k] > 0) {
                centroids.row(k) = sums.row(k) / counts[k];
            } else {
                // re-seed at the globally farthest point
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double dd =
                        (Y.row(i) - centroids.row(labels[i])).squaredNorm();
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                centroids.row(k) = Y.row(far);
                labels[far] = k;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
    }
    return labels;
}

/// Within-cluster sum of squares for a given partition.
inline double kmeans_inertia(const Matrix& Y, const std::vector<int>& labels,
                             int K) {
    Matrix sums = Matrix::Zero(K, Y.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(K);
    const int n = static_cast<int>(Y.rows());
    for (int i = 0; i < n; ++i) {
        sums.row(labels[i]) += Y.row(i);
        counts[labels[i]] += 1;
    }
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
        const int k = labels[i];
        if (counts[k] > 0)
            inertia += (Y.row(i) - sums.row(k) / counts[k]).squaredNorm();
    }
    return inertia;
}

}  // namespace bfem

#endif
