#ifndef BFEM_INFERENCE_HPP
#define BFEM_INFERENCE_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfem/fisher.hpp"
#include "bfem/kmeans.hpp"
#include "bfem/model.hpp"
#include "bfem/rng.hpp"
#include "bfem/scatter.hpp"
#include "bfem/types.hpp"

namespace bfem {

enum class FStepMethod { ODV, SVD };
enum class InitMethod { KMeans, Random, Given };

struct FitConfig {
    SubmodelSpec spec;
    int K = 2;
    int d = 0;  // 0 means the default K-1
    FStepMethod fstep = FStepMethod::ODV;
    int max_iter = 100;     // T_M
    int ve_max_iter = 3;    // T_VE
    double tol_ve = 1e-6;
    double tol_m = 1e-6;
    int restarts = 10;
    InitMethod init = InitMethod::KMeans;
    double lambda0 = 1e3;
    std::uint64_t seed = 0;
    bool center_data = true;
    bool empirical_bayes = true;
    std::vector<int> given_init;  // used when init == Given

    int latent_dim() const { return d > 0 ? d : K - 1; }

    void validate(int n, int p) const {
        Dims dims{n, p, K, latent_dim()};
        dims.validate();
        if (max_iter < 1 || ve_max_iter < 1) throw Error("iteration caps must be >= 1");
        if (!(tol_ve > 0.0) || !(tol_m > 0.0)) throw Error("tolerances must be > 0");
        if (restarts < 1) throw Error("restarts must be >= 1");
        if (!(lambda0 > 0.0)) throw Error("lambda0 must be > 0");
        if (init == InitMethod::Given &&
            static_cast<int>(given_init.size()) != n)
            throw Error("given initial partition has wrong length");
    }
};

struct FitResult {
    Dims dims;
    ModelParams params;
    VariationalState state;
    Hyperparams hyper;
    std::vector<double> elbo_trace;
    std::vector<int> partition;
    bool converged = false;
    int n_iter = 0;
    std::vector<std::string> flags;
    Vector data_mean;  // subtracted before fitting (zero when centering off)
};

namespace detail {

// Per-cluster factorizations reused by the responsibility and bound
// computations.
struct ClusterCache {
    std::vector<Eigen::LLT<Matrix>> sigma_llt;
    std::vector<double> logdet_sigma;

    explicit ClusterCache(const ModelParams& params) {
        const int K = static_cast<int>(params.pi.size());
        sigma_llt.reserve(K);
        logdet_sigma.reserve(K);
        for (int k = 0; k < K; ++k) {
            sigma_llt.emplace_back(params.sigma[k]);
            if (sigma_llt.back().info() != Eigen::Success)
                throw DegenerateCovariance("latent covariance not positive definite");
            double ld = 0.0;
            const auto& L = sigma_llt.back().matrixL();
            for (int j = 0; j < params.sigma[k].rows(); ++j)
                ld += 2.0 * std::log(L(j, j));
            logdet_sigma.push_back(ld);
        }
    }
};

// Unnormalized log responsibilities: log pi_k plus the variational
// expectation of the Gaussian log-density, using only d x d algebra.
inline Matrix log_density_matrix(const Matrix& Y, const ModelParams& params,
                                 const VariationalState& state) {
    const int n = static_cast<int>(Y.rows());
    const int p = static_cast<int>(Y.cols());
    const int K = static_cast<int>(params.pi.size());
    const int d = static_cast<int>(params.U.cols());

    ClusterCache cache(params);
    const Matrix X = Y * params.U;                       // n x d
    const Vector sq = Y.rowwise().squaredNorm();         // |y_i|^2
    const Vector sqx = X.rowwise().squaredNorm();        // |U^T y_i|^2

    Matrix logdens(n, K);
    for (int k = 0; k < K; ++k) {
        const double beta = params.beta[k];
        const Matrix sigma_inv =
            cache.sigma_llt[k].solve(Matrix::Identity(d, d));
        const double tr_term = (sigma_inv * state.S_tilde[k]).trace();
        const double log_norm = p * std::log(2.0 * M_PI) +
                                cache.logdet_sigma[k] +
                                (p - d) * std::log(beta);
        Matrix Z = X.rowwise() - state.m_tilde[k].transpose();
        Vector quad = (Z * sigma_inv).cwiseProduct(Z).rowwise().sum();
        logdens.col(k) =
            (std::log(params.pi[k]) -
             0.5 * (log_norm + tr_term)) *
                Vector::Ones(n) -
            0.5 * (quad + (sq - sqx) / beta);
    }
    if (!logdens.allFinite())
        throw NonFinite("non-finite log-density in responsibility update");
    return logdens;
}

inline Matrix softmax_rows(const Matrix& logdens) {
    const int n = static_cast<int>(logdens.rows());
    Matrix tau(logdens.rows(), logdens.cols());
    for (int i = 0; i < n; ++i) {
        const double m = logdens.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logdens.row(i).array() - m).exp();
        tau.row(i) = e / e.sum();
    }
    return tau;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Responsibility update (coordinate step for the cluster labels), in the
/// log domain with log-sum-exp normalization. Never forms a p x p matrix.
inline Matrix ve_step_tau(const Matrix& Y, const ModelParams& params,
                          const VariationalState& state,
                          const Hyperparams& /*hyper*/) {
    return detail::softmax_rows(detail::log_density_matrix(Y, params, state));
}

/// Coordinate step for the latent cluster means: soft counts, posterior
/// covariances S_k = (lambda^{-1} I + n_k Sigma_k^{-1})^{-1} and means.
inline void ve_step_mu(const Matrix& Y, const ModelParams& params,
                       const Matrix& tau, const Hyperparams& hyper,
                       VariationalState& state,
                       std::optional<double> eps_count = std::nullopt) {
    const int n = static_cast<int>(Y.rows());
    const int K = static_cast<int>(params.pi.size());
    const int d = static_cast<int>(params.U.cols());
    const double eps = eps_count.value_or(1e-6 * n);

    state.tau = tau;
    state.n_tilde = tau.colwise().sum();
    state.m_tilde.resize(K);
    state.S_tilde.resize(K);

    const Matrix weighted = params.U.transpose() * (Y.transpose() * tau);  // d x K
    for (int k = 0; k < K; ++k) {
        if (state.n_tilde[k] < eps)
            throw EmptyCluster("cluster " + std::to_string(k) +
                               " emptied during VE-step");
        const Matrix sigma_inv =
            params.sigma[k].llt().solve(Matrix::Identity(d, d));
        const Matrix precision = Matrix::Identity(d, d) / hyper.lambda +
                                 state.n_tilde[k] * sigma_inv;
        state.S_tilde[k] = precision.llt().solve(Matrix::Identity(d, d));
        state.m_tilde[k] =
            hyper.nu + state.S_tilde[k] * sigma_inv *
                           (weighted.col(k) - state.n_tilde[k] * hyper.nu);
    }
}

/// Variational lower bound, including the entropies of both factors. All
/// observation-space traces are split through the block structure so no
/// p x p matrix is formed.
inline double elbo(const Matrix& Y, const ModelParams& params,
                   const VariationalState& state, const Hyperparams& hyper) {
    const int K = static_cast<int>(params.pi.size());
    const int d = static_cast<int>(params.U.cols());

    const Matrix logdens = detail::log_density_matrix(Y, params, state);
    double J = state.tau.cwiseProduct(logdens).sum();

    // entropy of the label factor, with 0 log 0 = 0
    for (int i = 0; i < state.tau.rows(); ++i)
        for (int k = 0; k < K; ++k) {
            const double t = state.tau(i, k);
            if (t > 0.0) J -= t * std::log(t);
        }

    // prior on the latent means and entropy of their Gaussian factor
    for (int k = 0; k < K; ++k) {
        const double spread = (state.m_tilde[k] - hyper.nu).squaredNorm() +
                              state.S_tilde[k].trace();
        J -= 0.5 * (d * std::log(2.0 * M_PI * hyper.lambda) +
                    spread / hyper.lambda);
        Eigen::LLT<Matrix> llt(state.S_tilde[k]);
        double ld = 0.0;
        for (int j = 0; j < d; ++j) ld += 2.0 * std::log(llt.matrixL()(j, j));
        J += 0.5 * (d * (std::log(2.0 * M_PI) + 1.0) + ld);
    }
    if (!std::isfinite(J)) throw NonFinite("non-finite variational bound");
    return J;
}

/// The inner fixed-point loop: alternates the two coordinate updates up to
/// `ve_max_iter` times, stopping early when the relative bound change
/// drops below `tol_ve`.
inline void ve_step(const Matrix& Y, const ModelParams& params,
                    VariationalState& state, const Hyperparams& hyper,
                    const FitConfig& config) {
    double prev = elbo(Y, params, state, hyper);
    for (int v = 0; v < config.ve_max_iter; ++v) {
        const Matrix tau = ve_step_tau(Y, params, state, hyper);
        ve_step_mu(Y, params, tau, hyper, state);
        const double cur = elbo(Y, params, state, hyper);
        if (std::abs((cur - prev) / cur) < config.tol_ve) break;
        prev = cur;
    }
}

/// M-step: mixture proportions and the submodel-specific estimators for
/// the latent covariances and noise variances. Only d x d projections and
/// traces of the per-cluster covariance are ever computed.
inline ModelParams m_step(const Matrix& Y, const VariationalState& state,
                          const Matrix& U, const SubmodelSpec& spec) {
    const int n = static_cast<int>(Y.rows());
    const int p = static_cast<int>(Y.cols());
    const int K = static_cast<int>(state.n_tilde.size());
    const int d = static_cast<int>(U.cols());

    const Matrix X = Y * U;
    const Vector sq = Y.rowwise().squaredNorm();

    ModelParams raw;
    raw.U = U;
    raw.pi = state.n_tilde / n;
    raw.sigma.resize(K);
    raw.beta.resize(K);
    for (int k = 0; k < K; ++k) {
        const Vector w = state.tau.col(k);
        const double nk = state.n_tilde[k];
        const Vector& m = state.m_tilde[k];

        const Matrix Xw = X.array().colwise() * w.array();
        const Matrix s2 = X.transpose() * Xw;          // sum tau x x^T
        const Vector s1 = Xw.colwise().sum();          // sum tau x
        const double st = w.dot(sq);                   // sum tau |y|^2

        // U^T C_k U and tr(C_k), with C_k the posterior-expected cluster
        // covariance around U m_k
        Matrix M = s2 / nk - (s1 * m.transpose() + m * s1.transpose()) / nk +
                   m * m.transpose() + state.S_tilde[k];
        const double trC =
            st / nk - 2.0 * s1.dot(m) / nk + m.squaredNorm() +
            state.S_tilde[k].trace();
        raw.sigma[k] = M;
        raw.beta[k] = (trC - M.trace()) / (p - d);
    }
    return enforce_constraints(raw, spec);
}

/// Empirical Bayes updates of the prior mean and variance scale.
inline Hyperparams empirical_bayes(const VariationalState& state) {
    const int K = static_cast<int>(state.m_tilde.size());
    const int d = static_cast<int>(state.m_tilde[0].size());
    Hyperparams out;
    out.nu = Vector::Zero(d);
    for (int k = 0; k < K; ++k) out.nu += state.m_tilde[k];
    out.nu /= K;
    double s = 0.0;
    for (int k = 0; k < K; ++k)
        s += (state.m_tilde[k] - out.nu).squaredNorm() +
             state.S_tilde[k].trace();
    out.lambda = s / (d * K);
    return out;
}

/// Aitken-accelerated stopping rule on the ELBO trace. Compares the last
/// two accelerated estimates of the limit; a linearly diverging or
/// non-contracting sequence (ratio >= 1) counts as not converged, while an
/// exactly constant tail converges by convention.
inline bool aitken_converged(const std::vector<double>& trace, double eps_M,
                             double eps_c = 1e-10) {
    if (trace.size() < 4) return false;
    const double J0 = trace[trace.size() - 4], J1 = trace[trace.size() - 3],
                 J2 = trace[trace.size() - 2], J3 = trace[trace.size() - 1];
    const double d0 = J1 - J0, d1 = J2 - J1, d2 = J3 - J2;
    if (d1 == 0.0 && d2 == 0.0) return true;

    constexpr double tiny = 1e-280;
    if (std::abs(d0) < tiny || std::abs(d1) < tiny) return false;
    const double c_new = d2 / d1;
    const double c_old = d1 / d0;
    if (c_new >= 1.0 - eps_c || c_old >= 1.0 - eps_c) return false;
    const double l_new = J2 + d2 / (1.0 - c_new);
    const double l_old = J1 + d1 / (1.0 - c_old);
    return std::abs(l_new - l_old) < eps_M;
}

namespace detail {

inline Matrix one_hot(const std::vector<int>& labels, int K) {
    Matrix tau = Matrix::Zero(static_cast<int>(labels.size()), K);
    for (std::size_t i = 0; i < labels.size(); ++i) tau(static_cast<int>(i), labels[i]) = 1.0;
    return tau;
}

// Frequentist M-step used at initialization: the cluster covariances are
// taken around the soft means in observation space instead of the
// posterior means, so it does not depend on the variational factors.
inline ModelParams frequentist_m_step(const Matrix& Y, const Matrix& tau,
                                      const ScatterSet& scatters,
                                      const Matrix& U,
                                      const SubmodelSpec& spec) {
    const int n = static_cast<int>(Y.rows());
    const int p = static_cast<int>(Y.cols());
    const int K = static_cast<int>(tau.cols());
    const int d = static_cast<int>(U.cols());

    const Matrix X = Y * U;
    const Vector sq = Y.rowwise().squaredNorm();
    const Vector counts = tau.colwise().sum();

    ModelParams raw;
    raw.U = U;
    raw.pi = counts / n;
    raw.sigma.resize(K);
    raw.beta.resize(K);
    for (int k = 0; k < K; ++k) {
        const Vector w = tau.col(k);
        const double nk = counts[k];
        const Vector mx = U.transpose() * scatters.means_soft[k];

        const Matrix Xw = X.array().colwise() * w.array();
        const Matrix s2 = X.transpose() * Xw;
        const Vector s1 = Xw.colwise().sum();
        const double st = w.dot(sq);

        Matrix M = s2 / nk - (s1 * mx.transpose() + mx * s1.transpose()) / nk +
                   mx * mx.transpose();
        const double trC = st / nk -
                           2.0 * w.dot(Y * scatters.means_soft[k]) / nk +
                           scatters.means_soft[k].squaredNorm();
        raw.sigma[k] = M;
        raw.beta[k] = (trC - M.trace()) / (p - d);
    }
    return enforce_constraints(raw, spec);
}

}  // namespace detail

struct Initialization {
    ModelParams params;
    VariationalState state;
    Hyperparams hyper;
    bool rank_deficient = false;
};

/// Builds a complete starting point from an initial hard partition: the
/// initial subspace from the between-scatter of the partition, then a
/// frequentist M-step, then the Gaussian variational factors, with a vague
/// prior scale lambda0.
inline Initialization initialize(const Matrix& Y, const FitConfig& config,
                                 std::uint64_t seed, ScatterSet& scatters) {
    const int n = static_cast<int>(Y.rows());
    const int K = config.K;
    const int d = config.latent_dim();

    std::vector<int> labels;
    switch (config.init) {
        case InitMethod::KMeans:
            labels = kmeans(Y, K, seed);
            break;
        case InitMethod::Random: {
            Rng rng(seed);
            for (int attempt = 0; attempt < 32; ++attempt) {
                labels.assign(n, 0);
                std::vector<int> counts(K, 0);
                for (int i = 0; i < n; ++i) {
                    labels[i] = static_cast<int>(rng.uniform_int(K));
                    ++counts[labels[i]];
                }
                if (*std::min_element(counts.begin(), counts.end()) > 0) break;
            }
            break;
        }
        case InitMethod::Given:
            labels = config.given_init;
            break;
    }

    Initialization init;
    Matrix tau = detail::one_hot(labels, K);
    soft_between_scatter(Y, tau, scatters, 1e-6 * n);
    const FStepResult f = config.fstep == FStepMethod::ODV
                              ? fstep_odv(scatters, d)
                              : fstep_svd(scatters, d);
    init.rank_deficient = f.rank_deficient;
    init.params = detail::frequentist_m_step(Y, tau, scatters, f.U, config.spec);
    init.hyper.nu = f.U.transpose() * Y.colwise().mean().transpose();
    init.hyper.lambda = config.lambda0;
    ve_step_mu(Y, init.params, tau, init.hyper, init.state);
    return init;
}

/// Responsibilities for new observations under a fitted model, with all
/// variational quantities frozen.
inline Matrix predict_tau(const Matrix& Y_new, const FitResult& fit) {
    Matrix Yc = Y_new;
    if (fit.data_mean.size() > 0)
        Yc.rowwise() -= fit.data_mean.transpose();
    return detail::softmax_rows(
        detail::log_density_matrix(Yc, fit.params, fit.state));
}

namespace detail {

inline FitResult fit_single(const Matrix& Yc, const FitConfig& config,
                            std::uint64_t seed, ScatterSet& scatters) {
    const int n = static_cast<int>(Yc.rows());
    const int d = config.latent_dim();

    Initialization init = initialize(Yc, config, seed, scatters);
    FitResult res;
    res.dims = Dims{n, static_cast<int>(Yc.cols()), config.K, d};
    res.params = std::move(init.params);
    res.state = std::move(init.state);
    res.hyper = std::move(init.hyper);
    if (init.rank_deficient) res.flags.push_back("rank_deficient_fstep");
    res.elbo_trace.push_back(elbo(Yc, res.params, res.state, res.hyper));

    for (int t = 1; t <= config.max_iter; ++t) {
        res.n_iter = t;
        ModelParams saved_params = res.params;
        VariationalState saved_state = res.state;
        Hyperparams saved_hyper = res.hyper;
        try {
            // F-step on the current responsibilities
            soft_between_scatter(Yc, res.state.tau, scatters, 1e-6 * n);
            const FStepResult f = config.fstep == FStepMethod::ODV
                                      ? fstep_odv(scatters, d)
                                      : fstep_svd(scatters, d);
            if (f.rank_deficient && (res.flags.empty() ||
                                     res.flags.back() != "rank_deficient_fstep"))
                res.flags.push_back("rank_deficient_fstep");
            res.params.U = f.U;

            ve_step(Yc, res.params, res.state, res.hyper, config);
            res.params = m_step(Yc, res.state, res.params.U, config.spec);
            if (config.empirical_bayes) res.hyper = empirical_bayes(res.state);

            res.elbo_trace.push_back(elbo(Yc, res.params, res.state, res.hyper));
        } catch (const Error&) {
            // A degeneracy during the very first sweep means the starting
            // point itself is unusable and the restart fails. Later on, the
            // state from the previous sweep is a complete valid model: keep
            // it and stop this trajectory instead of discarding the restart.
            if (t == 1) throw;
            res.params = std::move(saved_params);
            res.state = std::move(saved_state);
            res.hyper = std::move(saved_hyper);
            res.n_iter = t - 1;
            res.flags.push_back("stopped_on_degeneracy");
            break;
        }
        if (aitken_converged(res.elbo_trace, config.tol_m)) {
            res.converged = true;
            break;
        }
    }

    res.partition.resize(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int k = 1; k < config.K; ++k)
            if (res.state.tau(i, k) > res.state.tau(i, best)) best = k;
        res.partition[i] = best;  // ties keep the lowest index
    }
    return res;
}

}  // namespace detail

/// Fits the model with several independent restarts and returns the one
/// with the highest final bound. Restarts that hit a degeneracy (empty
/// cluster, non-PD covariance) are dropped; if all fail the fit aborts.
inline FitResult fit(const Matrix& Y, const FitConfig& config) {
    const int n = static_cast<int>(Y.rows());
    const int p = static_cast<int>(Y.cols());
    config.validate(n, p);
    if (!Y.allFinite()) throw NonFinite("data contains non-finite values");

    Vector mean = Vector::Zero(p);
    Matrix Yc = Y;
    if (config.center_data) {
        mean = Y.colwise().mean();
        Yc.rowwise() -= mean.transpose();
    }
    ScatterSet scatters = total_scatter(Yc);

    std::optional<FitResult> best;
    int failures = 0;
    std::string last_error;
    for (int r = 0; r < config.restarts; ++r) {
        const std::uint64_t seed = detail::mix_seed(config.seed, r);
        try {
            FitResult cand = detail::fit_single(Yc, config, seed, scatters);
            if (!best || cand.elbo_trace.back() > best->elbo_trace.back())
                best = std::move(cand);
        } catch (const Error& e) {
            ++failures;
            last_error = e.what();
        }
    }
    if (!best)
        throw AllRestartsFailed("all " + std::to_string(config.restarts) +
                                " restarts failed; last error: " + last_error);
    if (failures > 0)
        best->flags.push_back("failed_restarts:" + std::to_string(failures));
    best->data_mean = mean;
    return *best;
}

}  // namespace bfem

#endif
