#ifndef BFEM_SELECTION_HPP
#define BFEM_SELECTION_HPP

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bfem/inference.hpp"
#include "bfem/model.hpp"
#include "bfem/types.hpp"

namespace bfem {

/// ICL-BIC of a fitted model: the classification log-likelihood at the MAP
/// partition minus the BIC penalty (gamma/2) log n. The classification
/// likelihood is the variational bound evaluated at the hardened
/// responsibilities, where it is tight.
inline double icl(const Matrix& Y, const FitResult& fit,
                  const SubmodelSpec& spec) {
    const int n = static_cast<int>(Y.rows());
    const int K = fit.dims.K;

    Matrix hard = Matrix::Zero(n, K);
    for (int i = 0; i < n; ++i) hard(i, fit.partition[i]) = 1.0;

    Matrix Yc = Y;
    if (fit.data_mean.size() > 0) Yc.rowwise() -= fit.data_mean.transpose();

    VariationalState state;
    // hardening that empties a cluster is a degenerate cell
    ve_step_mu(Yc, fit.params, hard, fit.hyper, state, 0.5);
    const double loglik = elbo(Yc, fit.params, state, fit.hyper);

    const long gamma = free_param_count(spec, fit.dims);
    return loglik - 0.5 * gamma * std::log(static_cast<double>(n));
}

struct SelectionEntry {
    int K = 0;
    SubmodelSpec spec;
    long gamma = 0;
    double elbo = -std::numeric_limits<double>::infinity();
    double icl = -std::numeric_limits<double>::infinity();
    bool converged = false;
    bool failed = false;
    std::string flags;
};

struct SelectionResult {
    std::vector<SelectionEntry> table;
    int best_index = -1;  // entry with the maximal finite ICL

    const SelectionEntry& best() const {
        if (best_index < 0) throw Error("no successful selection cell");
        return table[best_index];
    }
};

/// Grid search over (K, submodel) with d = K-1 per cell and shared restart
/// seeds, so differences reflect the models rather than initialization.
/// Failed cells stay in the table but are excluded from the argmax.
inline SelectionResult select(const Matrix& Y, const std::vector<int>& K_range,
                              const std::vector<SubmodelSpec>& specs,
                              const FitConfig& base_config) {
    if (K_range.empty() || specs.empty()) throw Error("empty selection grid");
    SelectionResult result;
    for (int K : K_range) {
        for (const auto& spec : specs) {
            FitConfig config = base_config;
            config.K = K;
            config.d = 0;  // d = K - 1
            config.spec = spec;

            SelectionEntry entry;
            entry.K = K;
            entry.spec = spec;
            const int n = static_cast<int>(Y.rows());
            const int p = static_cast<int>(Y.cols());
            entry.gamma = free_param_count(spec, Dims{n, p, K, K - 1});
            try {
                FitResult fit_res = fit(Y, config);
                entry.elbo = fit_res.elbo_trace.back();
                entry.converged = fit_res.converged;
                for (const auto& f : fit_res.flags)
                    entry.flags += (entry.flags.empty() ? "" : ";") + f;
                entry.icl = icl(Y, fit_res, spec);
            } catch (const Error& e) {
                entry.failed = true;
                entry.flags = e.what();
            }
            result.table.push_back(entry);
            if (!entry.failed && std::isfinite(entry.icl) &&
                (result.best_index < 0 ||
                 entry.icl > result.table[result.best_index].icl))
                result.best_index =
                    static_cast<int>(result.table.size()) - 1;
        }
    }
    return result;
}

inline std::string selection_csv(const SelectionResult& result) {
    std::ostringstream out;
    out << "K,spec,gamma,elbo,icl,converged,flags\n";
    for (const auto& e : result.table) {
        out << e.K << ',' << e.spec.code() << ',' << e.gamma << ','
            << e.elbo << ',' << e.icl << ',' << (e.converged ? 1 : 0) << ','
            << '"' << e.flags << '"' << '\n';
    }
    return out.str();
}

}  // namespace bfem

#endif
