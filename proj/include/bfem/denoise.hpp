#ifndef BFEM_DENOISE_HPP
#define BFEM_DENOISE_HPP

#include <algorithm>
#include <optional>
#include <vector>

#include "bfem/inference.hpp"
#include "bfem/metrics.hpp"
#include "bfem/pgm.hpp"
#include "bfem/rng.hpp"
#include "bfem/types.hpp"

namespace bfem {

/// Flattened f x f patches (row-major within the patch) and their top-left
/// origins in the source image.
struct PatchSet {
    Matrix patches;  // n x f^2
    std::vector<std::pair<int, int>> origins;
    int f = 0;
};

/// Extracts patches at every stride-grid position, plus the final row and
/// column positions so the whole image is covered.
inline PatchSet extract_patches(const GrayImage& img, int f, int stride = 1) {
    if (f > std::min(img.height, img.width))
        throw PatchTooLarge("patch side exceeds image dimensions");
    if (stride < 1) throw Error("stride must be >= 1");

    auto grid = [&](int extent) {
        std::vector<int> pos;
        for (int r = 0; r + f <= extent; r += stride) pos.push_back(r);
        if (pos.empty() || pos.back() != extent - f) pos.push_back(extent - f);
        return pos;
    };
    const std::vector<int> rows = grid(img.height);
    const std::vector<int> cols = grid(img.width);

    PatchSet set;
    set.f = f;
    set.patches.resize(static_cast<int>(rows.size() * cols.size()), f * f);
    set.origins.reserve(rows.size() * cols.size());
    int idx = 0;
    for (int r : rows)
        for (int c : cols) {
            for (int a = 0; a < f; ++a)
                for (int b = 0; b < f; ++b)
                    set.patches(idx, a * f + b) = img.pixels(r + a, c + b);
            set.origins.emplace_back(r, c);
            ++idx;
        }
    return set;
}

/// Per-cluster conditional-expectation filters combined by the
/// responsibilities of the noisy patch. The block structure collapses each
/// filter to U (I_d - sigma^2 Sigma_k^{-1}) U^T plus the mean terms, so
/// only d x d algebra is needed.
inline Matrix denoise_patches(const Matrix& noisy, const FitResult& fit,
                              double sigma2) {
    if (!(sigma2 > 0.0)) throw Error("sigma2 must be > 0");
    const int n = static_cast<int>(noisy.rows());
    const int K = fit.dims.K;
    const int d = fit.dims.d;
    const Matrix& U = fit.params.U;

    const Matrix tau = predict_tau(noisy, fit);
    Matrix Yc = noisy;
    if (fit.data_mean.size() > 0) Yc.rowwise() -= fit.data_mean.transpose();

    Matrix out = Matrix::Zero(n, noisy.cols());
    const Matrix X = Yc * U;  // n x d
    for (int k = 0; k < K; ++k) {
        const Matrix shrink =
            Matrix::Identity(d, d) -
            sigma2 * fit.params.sigma[k].llt().solve(Matrix::Identity(d, d));
        // filter_k(y) = U m_k + U shrink U^T (y - U m_k), in latent coords
        Matrix latent = X.rowwise() - fit.state.m_tilde[k].transpose();
        Matrix filtered =
            (latent * shrink.transpose()).rowwise() +
            fit.state.m_tilde[k].transpose();
        out += tau.col(k).asDiagonal() * (filtered * U.transpose());
    }
    if (fit.data_mean.size() > 0) out.rowwise() += fit.data_mean.transpose();
    if (!out.allFinite()) throw NonFinite("non-finite denoised patch");
    return out;
}

/// Single-patch convenience wrapper.
inline Vector denoise_patch(const Vector& y, const FitResult& fit,
                            double sigma2) {
    return denoise_patches(y.transpose(), fit, sigma2).row(0).transpose();
}

/// Averages every denoised patch back into the pixel grid; each pixel is
/// the unweighted mean over the patches covering it, clamped to [0, 255]
/// only at the very end.
inline GrayImage reconstruct_image(const Matrix& patches,
                                   const std::vector<std::pair<int, int>>& origins,
                                   int f, int height, int width) {
    GrayImage img;
    img.width = width;
    img.height = height;
    Matrix acc = Matrix::Zero(height, width);
    Matrix cover = Matrix::Zero(height, width);
    for (std::size_t i = 0; i < origins.size(); ++i) {
        const auto [r, c] = origins[i];
        for (int a = 0; a < f; ++a)
            for (int b = 0; b < f; ++b)
                acc(r + a, c + b) += patches(static_cast<int>(i), a * f + b);
        cover.block(r, c, f, f).array() += 1.0;
    }
    if ((cover.array() <= 0.0).any())
        throw CoverageGap("some pixels are not covered by any patch");
    img.pixels = (acc.array() / cover.array())
                     .min(255.0)
                     .max(0.0)
                     .matrix();
    return img;
}

struct DenoiseReport {
    GrayImage output;
    double psnr_noisy = 0.0;   // vs reference, when given
    double psnr_denoised = 0.0;
    bool has_psnr = false;
};

struct DenoiseConfig {
    int K = 40;
    int f = 8;
    int d = 0;             // 0 means K-1
    int subsample = 50000;  // patches used for fitting
    int restarts = 3;
    int max_iter = 50;
    std::uint64_t seed = 0;
};

/// Full pipeline: stride-1 patches, model fit on a random subsample,
/// supervised filtering of every patch with the user-provided noise
/// variance, then averaging reconstruction.
inline DenoiseReport denoise_image(const GrayImage& noisy, double sigma,
                                   const DenoiseConfig& cfg,
                                   const GrayImage* reference = nullptr) {
    if (!(sigma > 0.0)) throw Error("sigma must be > 0");
    PatchSet set = extract_patches(noisy, cfg.f, 1);
    const int n = static_cast<int>(set.patches.rows());

    Matrix train = set.patches;
    if (n > cfg.subsample) {
        // deterministic subsample without replacement
        Rng rng(cfg.seed ^ 0x5deece66dULL);
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < cfg.subsample; ++i) {
            const int j =
                i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        train.resize(cfg.subsample, set.patches.cols());
        for (int i = 0; i < cfg.subsample; ++i)
            train.row(i) = set.patches.row(idx[i]);
    }

    FitConfig fit_cfg;
    fit_cfg.spec = SubmodelSpec::from_code("Sk_B");
    fit_cfg.K = cfg.K;
    fit_cfg.d = cfg.d;
    fit_cfg.restarts = cfg.restarts;
    fit_cfg.max_iter = cfg.max_iter;
    fit_cfg.seed = cfg.seed;
    const FitResult model = fit(train, fit_cfg);

    const Matrix denoised = denoise_patches(set.patches, model, sigma * sigma);
    DenoiseReport report;
    report.output = reconstruct_image(denoised, set.origins, cfg.f,
                                      noisy.height, noisy.width);
    if (reference != nullptr) {
        report.has_psnr = true;
        report.psnr_noisy = psnr(reference->pixels, noisy.pixels);
        report.psnr_denoised = psnr(reference->pixels, report.output.pixels);
    }
    return report;
}

}  // namespace bfem

#endif
