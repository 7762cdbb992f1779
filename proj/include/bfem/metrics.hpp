#ifndef BFEM_METRICS_HPP
#define BFEM_METRICS_HPP

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "bfem/types.hpp"

namespace bfem {

/// Hubert-Arabie adjusted Rand index between two partitions, from the
/// contingency table. 1 for identical partitions up to relabeling, 0 in
/// expectation for independent ones.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw LengthMismatch("partitions have different lengths");
    const std::size_t n = a.size();
    if (n < 2) throw LengthMismatch("partitions need length >= 2");

    std::map<int, int> ida, idb;
    for (int x : a) ida.emplace(x, static_cast<int>(ida.size()));
    for (int x : b) idb.emplace(x, static_cast<int>(idb.size()));
    const int ka = static_cast<int>(ida.size());
    const int kb = static_cast<int>(idb.size());

    Matrix table = Matrix::Zero(ka, kb);
    for (std::size_t i = 0; i < n; ++i)
        table(ida[a[i]], idb[b[i]]) += 1.0;

    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_cells = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) sum_cells += choose2(table(i, j));
    double sum_rows = 0.0, sum_cols = 0.0;
    for (int i = 0; i < ka; ++i) sum_rows += choose2(table.row(i).sum());
    for (int j = 0; j < kb; ++j) sum_cols += choose2(table.col(j).sum());
    const double total = choose2(static_cast<double>(n));

    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_cells - expected) / (max_index - expected);
}

/// Peak signal-to-noise ratio in dB with the standard 255^2 numerator.
/// Returns +infinity when the images are identical.
inline double psnr(const Matrix& ref, const Matrix& test) {
    if (ref.rows() != test.rows() || ref.cols() != test.cols())
        throw DimensionMismatch("image dimensions differ");
    const double mse = (ref - test).squaredNorm() /
                       static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

/// Latent signal-to-noise ratio 10 log10(tr(Sigma) / beta) in dB.
inline double snr_db(const Matrix& sigma, double beta) {
    if (!(beta > 0.0)) throw Error("beta must be > 0");
    return 10.0 * std::log10(sigma.trace() / beta);
}

}  // namespace bfem

#endif
