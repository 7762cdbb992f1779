#include <catch_amalgamated.hpp>

#include <random>

#include "bfem/fisher.hpp"
#include "bfem/scatter.hpp"
#include "oracles.hpp"

using bfem::Matrix;
using bfem::Vector;

namespace {

// clustered data plus a matching soft assignment for scatter tests
struct Setup {
    Matrix Y;
    Matrix tau;
};

Setup clustered_data(int n, int p, int K, std::mt19937_64& gen,
                     bool hard = false) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.1, 1.0);
    Setup s;
    s.Y.resize(n, p);
    s.tau.resize(n, K);
    std::uniform_int_distribution<int> pick(0, K - 1);
    std::vector<Vector> centers(K);
    for (int k = 0; k < K; ++k) {
        centers[k] = Vector::Zero(p);
        for (int j = 0; j < p; ++j) centers[k][j] = 4.0 * nd(gen);
    }
    for (int i = 0; i < n; ++i) {
        const int z = pick(gen);
        for (int j = 0; j < p; ++j) s.Y(i, j) = centers[z][j] + nd(gen);
        if (hard) {
            s.tau.row(i).setZero();
            s.tau(i, z) = 1.0;
        } else {
            for (int k = 0; k < K; ++k)
                s.tau(i, k) = (k == z) ? 5.0 + ud(gen) : ud(gen);
            s.tau.row(i) /= s.tau.row(i).sum();
        }
    }
    return s;
}

}  // namespace

TEST_CASE("total covariance matches the second-moment identity") {
    std::mt19937_64 gen(21);
    Setup s = clustered_data(80, 6, 3, gen);
    bfem::ScatterSet sc = bfem::total_scatter(s.Y);
    // independent route: E[yy^T] - ybar ybar^T
    const int n = static_cast<int>(s.Y.rows());
    const Vector ybar = s.Y.colwise().mean();
    const Matrix second = s.Y.transpose() * s.Y / n - ybar * ybar.transpose();
    CHECK((sc.S_T - second).norm() < 1e-10 * second.norm());
    CHECK((sc.S_T_inv * sc.S_T_solve - Matrix::Identity(6, 6)).norm() < 1e-8);
}

TEST_CASE("degenerate data is rejected") {
    Matrix Y = Matrix::Zero(10, 4);
    CHECK_THROWS_AS(bfem::total_scatter(Y), bfem::SingularScatter);
    CHECK_THROWS_AS(bfem::total_scatter(Matrix::Ones(1, 4)), bfem::Error);
}

TEST_CASE("soft between-class scatter matches the direct sum") {
    std::mt19937_64 gen(22);
    const int n = 60, p = 5, K = 3;
    Setup s = clustered_data(n, p, K, gen);
    bfem::ScatterSet sc = bfem::total_scatter(s.Y);
    bfem::soft_between_scatter(s.Y, s.tau, sc);

    const Vector ybar = s.Y.colwise().mean();
    Matrix ref = Matrix::Zero(p, p);
    for (int k = 0; k < K; ++k) {
        double nk = 0.0;
        Vector mk = Vector::Zero(p);
        for (int i = 0; i < n; ++i) {
            nk += s.tau(i, k);
            mk += s.tau(i, k) * s.Y.row(i).transpose();
        }
        mk /= nk;
        ref += (nk / n) * (mk - ybar) * (mk - ybar).transpose();
    }
    CHECK((sc.S_B - ref).norm() < 1e-10 * std::max(1.0, ref.norm()));
    CHECK((sc.G * sc.G.transpose() - sc.S_B).norm() < 1e-12);
}

TEST_CASE("scatter decomposition: between plus within equals total") {
    std::mt19937_64 gen(23);
    const int n = 100, p = 7, K = 4;
    Setup s = clustered_data(n, p, K, gen, /*hard=*/true);
    bfem::ScatterSet sc = bfem::total_scatter(s.Y);
    bfem::soft_between_scatter(s.Y, s.tau, sc);

    Matrix SW = Matrix::Zero(p, p);
    for (int i = 0; i < n; ++i) {
        int z = 0;
        s.tau.row(i).maxCoeff(&z);
        const Vector diff = s.Y.row(i).transpose() - sc.means_soft[z];
        SW += diff * diff.transpose() / n;
    }
    CHECK((sc.S_B + SW - sc.S_T).norm() < 1e-10 * sc.S_T.norm());
}

TEST_CASE("vanishing soft counts are rejected") {
    std::mt19937_64 gen(24);
    Setup s = clustered_data(30, 4, 2, gen);
    Matrix tau = Matrix::Zero(30, 3);
    tau.leftCols(2) = s.tau;
    bfem::ScatterSet sc = bfem::total_scatter(s.Y);
    CHECK_THROWS_AS(bfem::soft_between_scatter(s.Y, tau, sc),
                    bfem::EmptyCluster);
}

TEST_CASE("both subspace solvers return orthonormal frames") {
    std::mt19937_64 gen(25);
    for (int rep = 0; rep < 25; ++rep) {
        const int p = 5 + static_cast<int>(gen() % 20);
        const int K = 2 + static_cast<int>(gen() % 4);
        const int d = std::min(K - 1, p);
        Setup s = clustered_data(20 * K, p, K, gen);
        bfem::ScatterSet sc = bfem::total_scatter(s.Y);
        bfem::soft_between_scatter(s.Y, s.tau, sc);
        for (auto method : {bfem::fstep_odv, bfem::fstep_svd}) {
            const bfem::FStepResult f = method(sc, d);
            CHECK((f.U.transpose() * f.U - Matrix::Identity(d, d)).norm() <
                  1e-10);
        }
    }
}

TEST_CASE("first greedy direction solves the generalized eigenproblem") {
    std::mt19937_64 gen(26);
    for (int rep = 0; rep < 10; ++rep) {
        const int p = 8, K = 3;
        Setup s = clustered_data(90, p, K, gen);
        bfem::ScatterSet sc = bfem::total_scatter(s.Y);
        bfem::soft_between_scatter(s.Y, s.tau, sc);
        const bfem::FStepResult f = bfem::fstep_odv(sc, K - 1);

        // dense oracle: leading eigenpair of the symmetric pencil
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(sc.S_B,
                                                             sc.S_T_solve);
        const Vector v = eig.eigenvectors().col(p - 1).normalized();
        const double lambda = eig.eigenvalues()[p - 1];
        CHECK(std::abs(std::abs(v.dot(f.U.col(0))) - 1.0) < 1e-8);
        CHECK(f.fisher[0] == Catch::Approx(lambda).epsilon(1e-8));
        // greedy sequence reports a non-increasing criterion
        for (int r = 1; r < K - 1; ++r) CHECK(f.fisher[r] <= f.fisher[r - 1]);
    }
}

TEST_CASE("singular-vector solver matches the dense SVD") {
    std::mt19937_64 gen(27);
    for (int rep = 0; rep < 10; ++rep) {
        const int p = 9, K = 4, d = 2;
        Setup s = clustered_data(120, p, K, gen);
        bfem::ScatterSet sc = bfem::total_scatter(s.Y);
        bfem::soft_between_scatter(s.Y, s.tau, sc);
        const bfem::FStepResult f = bfem::fstep_svd(sc, d);

        const Matrix M = sc.S_T_solve.llt().solve(sc.S_B);
        Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
        const Matrix Ud = svd.matrixU().leftCols(d);
        // compare the spanned subspaces through their projectors
        const Matrix P1 = f.U * f.U.transpose();
        const Matrix P2 = Ud * Ud.transpose();
        CHECK((P1 - P2).norm() < 1e-6);
    }
}

TEST_CASE("rank-deficient between-scatter is padded and flagged") {
    std::mt19937_64 gen(28);
    // two of the three soft means coincide exactly, so the between-class
    // scatter has exactly one informative direction
    const int n = 60, p = 6;
    std::normal_distribution<double> nd;
    Matrix Y(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) Y(i, j) = nd(gen) + (i < n / 2 ? 5.0 : 0.0);
    Matrix tau = Matrix::Zero(n, 3);
    for (int i = 0; i < n; ++i) {
        if (i < n / 2) tau(i, 0) = 1.0;
        else tau(i, 1) = tau(i, 2) = 0.5;
    }
    bfem::ScatterSet sc = bfem::total_scatter(Y);
    bfem::soft_between_scatter(Y, tau, sc);

    // the singular-vector solver sees only one informative direction
    const bfem::FStepResult fs = bfem::fstep_svd(sc, 2);
    CHECK(fs.rank_deficient);
    CHECK((fs.U.transpose() * fs.U - Matrix::Identity(2, 2)).norm() < 1e-10);

    // the greedy solver legitimately continues: orthogonally constrained
    // discriminant sequences outrun the rank of the between-scatter, so it
    // must not flag here but must still return an orthonormal frame
    const bfem::FStepResult fo = bfem::fstep_odv(sc, 2);
    CHECK_FALSE(fo.rank_deficient);
    CHECK((fo.U.transpose() * fo.U - Matrix::Identity(2, 2)).norm() < 1e-10);

    // with no class separation at all, both solvers pad and flag
    Matrix uniform = Matrix::Constant(n, 3, 1.0 / 3.0);
    bfem::soft_between_scatter(Y, uniform, sc);
    for (auto method : {bfem::fstep_odv, bfem::fstep_svd}) {
        const bfem::FStepResult f = method(sc, 2);
        CHECK(f.rank_deficient);
        CHECK((f.U.transpose() * f.U - Matrix::Identity(2, 2)).norm() < 1e-10);
    }
}
