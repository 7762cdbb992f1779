#ifndef BFEM_TYPES_HPP
#define BFEM_TYPES_HPP

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy used across the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateCovariance : Error {
    using Error::Error;
};
struct SingularScatter : Error {
    using Error::Error;
};
struct EmptyCluster : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};
struct RankDeficient : Error {
    using Error::Error;
};
struct AllRestartsFailed : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct MalformedFile : Error {
    using Error::Error;
};
struct UnsupportedMaxval : Error {
    using Error::Error;
};
struct CoverageGap : Error {
    using Error::Error;
};
struct PatchTooLarge : Error {
    using Error::Error;
};

enum class SigmaStructure { Full, Diagonal, Isotropic };

/// One of the 12 covariance-structure constraints of the model family.
struct SubmodelSpec {
    SigmaStructure sigma_structure = SigmaStructure::Full;
    bool sigma_shared = false;  // latent covariance common across clusters
    bool beta_shared = false;   // noise variance common across clusters

    friend bool operator==(const SubmodelSpec&, const SubmodelSpec&) = default;

    std::string code() const {
        std::string s;
        switch (sigma_structure) {
            case SigmaStructure::Full:
                s = sigma_shared ? "S" : "Sk";
                break;
            case SigmaStructure::Diagonal:
                s = sigma_shared ? "Aj" : "Akj";
                break;
            case SigmaStructure::Isotropic:
                s = sigma_shared ? "A" : "Ak";
                break;
        }
        // full-covariance codes carry an underscore separator
        if (sigma_structure == SigmaStructure::Full) s += "_";
        s += beta_shared ? "B" : "Bk";
        return s;
    }

    static SubmodelSpec from_code(const std::string& code) {
        for (const auto& m : all()) {
            if (m.code() == code) return m;
        }
        throw Error("unknown submodel code: " + code);
    }

    static const std::array<SubmodelSpec, 12>& all() {
        static const std::array<SubmodelSpec, 12> models = [] {
            std::array<SubmodelSpec, 12> out{};
            int i = 0;
            for (auto st : {SigmaStructure::Full, SigmaStructure::Diagonal,
                            SigmaStructure::Isotropic})
                for (bool ss : {false, true})
                    for (bool bs : {false, true}) out[i++] = {st, ss, bs};
            return out;
        }();
        return models;
    }
};

/// Problem dimensions: n observations in ambient dimension p, K clusters,
/// latent dimension d <= min(K-1, p).
struct Dims {
    int n = 0;
    int p = 0;
    int K = 0;
    int d = 0;

    void validate() const {
        if (K < 2) throw Error("K must be >= 2");
        if (p < 2) throw Error("p must be >= 2");
        if (n < K) throw Error("n must be >= K");
        if (d < 1 || d > std::min(K - 1, p))
            throw Error("d must satisfy 1 <= d <= min(K-1, p)");
    }
};

/// Mixture parameters in the latent representation. The noise covariance
/// never materializes: it is fully determined by beta and U through the
/// block constraint on the rotated covariance.
struct ModelParams {
    Vector pi;                  // K mixture proportions
    std::vector<Matrix> sigma;  // K latent covariances (d x d)
    Vector beta;                // K noise variances
    Matrix U;                   // p x d, column-orthonormal
};

struct Hyperparams {
    Vector nu;            // prior mean of the latent cluster means
    double lambda = 1e3;  // prior variance scale, > 0
};

/// Variational posteriors: responsibilities and Gaussian factors over the
/// latent cluster means.
struct VariationalState {
    Matrix tau;                   // n x K, rows sum to 1
    std::vector<Vector> m_tilde;  // K posterior means (d)
    std::vector<Matrix> S_tilde;  // K posterior covariances (d x d)
    Vector n_tilde;               // K soft counts
};

}  // namespace bfem

#endif
