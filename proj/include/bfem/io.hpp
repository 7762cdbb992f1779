#ifndef BFEM_IO_HPP
#define BFEM_IO_HPP

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfem/inference.hpp"
#include "bfem/types.hpp"

namespace bfem {

/// Reads a numeric CSV matrix (comma-separated, no quoting). Parse errors
/// name the 1-based row and column.
inline Matrix read_csv_matrix(const std::string& path, bool skip_header = false) {
    std::ifstream in(path);
    if (!in) throw MalformedFile("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && skip_header) continue;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            ++col;
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                while (pos < cell.size() && std::isspace(cell[pos])) ++pos;
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw MalformedFile(path + ": cannot parse number at row " +
                                    std::to_string(lineno) + ", column " +
                                    std::to_string(col));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw MalformedFile(path + ": ragged row " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw MalformedFile(path + ": empty matrix");
    Matrix Y(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int i = 0; i < Y.rows(); ++i)
        for (int j = 0; j < Y.cols(); ++j) Y(i, j) = rows[i][j];
    return Y;
}

inline void write_csv_matrix(const Matrix& Y, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << std::setprecision(17);
    for (int i = 0; i < Y.rows(); ++i) {
        for (int j = 0; j < Y.cols(); ++j) {
            if (j) out << ',';
            out << Y(i, j);
        }
        out << '\n';
    }
}

inline std::vector<int> read_csv_labels(const std::string& path) {
    const Matrix m = read_csv_matrix(path);
    if (m.cols() != 1)
        throw MalformedFile(path + ": expected a single-column label file");
    std::vector<int> labels(m.rows());
    for (int i = 0; i < m.rows(); ++i)
        labels[i] = static_cast<int>(std::lround(m(i, 0)));
    return labels;
}

inline void write_csv_labels(const std::vector<int>& labels,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (int v : labels) out << v << '\n';
}

namespace detail {

inline std::vector<double> row_major(const Matrix& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

inline Matrix from_row_major(const std::vector<double>& v, int rows, int cols) {
    if (static_cast<int>(v.size()) != rows * cols)
        throw MalformedFile("matrix payload has wrong size");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = v[static_cast<std::size_t>(i) * cols + j];
    return m;
}

}  // namespace detail

/// Serializes a fitted model (dense matrices row-major). The variational
/// mean factors and the centering vector ride along so that new data can
/// be scored with the exported model alone.
inline nlohmann::json model_to_json(const FitResult& fit,
                                    const SubmodelSpec& spec) {
    nlohmann::json j;
    j["dims"] = {{"n", fit.dims.n},
                 {"p", fit.dims.p},
                 {"K", fit.dims.K},
                 {"d", fit.dims.d}};
    j["spec"] = spec.code();
    j["pi"] = std::vector<double>(fit.params.pi.data(),
                                  fit.params.pi.data() + fit.params.pi.size());
    std::vector<std::vector<double>> sigma;
    for (const auto& s : fit.params.sigma) sigma.push_back(detail::row_major(s));
    j["sigma"] = sigma;
    j["beta"] = std::vector<double>(
        fit.params.beta.data(), fit.params.beta.data() + fit.params.beta.size());
    j["U"] = detail::row_major(fit.params.U);
    j["nu"] = std::vector<double>(fit.hyper.nu.data(),
                                  fit.hyper.nu.data() + fit.hyper.nu.size());
    j["lambda"] = fit.hyper.lambda;
    j["elbo_trace"] = fit.elbo_trace;
    j["flags"] = fit.flags;
    j["mean"] = std::vector<double>(
        fit.data_mean.data(), fit.data_mean.data() + fit.data_mean.size());
    std::vector<std::vector<double>> m_tilde, S_tilde;
    for (const auto& m : fit.state.m_tilde)
        m_tilde.push_back(std::vector<double>(m.data(), m.data() + m.size()));
    for (const auto& s : fit.state.S_tilde)
        S_tilde.push_back(detail::row_major(s));
    j["m_tilde"] = m_tilde;
    j["S_tilde"] = S_tilde;
    return j;
}

inline std::pair<FitResult, SubmodelSpec> model_from_json(
    const nlohmann::json& j) {
    FitResult fit;
    fit.dims.n = j.at("dims").at("n");
    fit.dims.p = j.at("dims").at("p");
    fit.dims.K = j.at("dims").at("K");
    fit.dims.d = j.at("dims").at("d");
    const SubmodelSpec spec = SubmodelSpec::from_code(j.at("spec"));
    const int K = fit.dims.K, p = fit.dims.p, d = fit.dims.d;

    const auto pi = j.at("pi").get<std::vector<double>>();
    fit.params.pi = Eigen::Map<const Vector>(pi.data(), K);
    for (const auto& s : j.at("sigma"))
        fit.params.sigma.push_back(
            detail::from_row_major(s.get<std::vector<double>>(), d, d));
    const auto beta = j.at("beta").get<std::vector<double>>();
    fit.params.beta = Eigen::Map<const Vector>(beta.data(), K);
    fit.params.U =
        detail::from_row_major(j.at("U").get<std::vector<double>>(), p, d);
    const auto nu = j.at("nu").get<std::vector<double>>();
    fit.hyper.nu = Eigen::Map<const Vector>(nu.data(), d);
    fit.hyper.lambda = j.at("lambda");
    fit.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
    fit.flags = j.at("flags").get<std::vector<std::string>>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    fit.data_mean = Eigen::Map<const Vector>(mean.data(), p);
    for (const auto& m : j.at("m_tilde")) {
        const auto v = m.get<std::vector<double>>();
        fit.state.m_tilde.push_back(Eigen::Map<const Vector>(v.data(), d));
    }
    for (const auto& s : j.at("S_tilde"))
        fit.state.S_tilde.push_back(
            detail::from_row_major(s.get<std::vector<double>>(), d, d));
    return {std::move(fit), spec};
}

}  // namespace bfem

#endif
