#include <catch_amalgamated.hpp>

#include "bfem/selection.hpp"
#include "bfem/simulate.hpp"
#include "oracles.hpp"

using bfem::Matrix;

TEST_CASE("criterion equals the integrated classification likelihood "
          "minus the complexity penalty") {
    const auto sim = bfem::gen_subspace(200, 10, 8.0, 19);
    bfem::FitConfig cfg;
    cfg.K = 3;
    cfg.d = 2;
    cfg.restarts = 4;
    cfg.seed = 2;
    cfg.spec = bfem::SubmodelSpec::from_code("S_B");
    const bfem::FitResult res = bfem::fit(sim.Y, cfg);
    const double got = bfem::icl(sim.Y, res, cfg.spec);

    // oracle: hard assignments, then the exact marginal likelihood of each
    // cluster via the stacked Gaussian system
    Matrix Yc = sim.Y;
    Yc.rowwise() -= res.data_mean.transpose();
    const double loglik = oracle::conjugate_classification_loglik(
        Yc, res.params, res.hyper, res.partition);
    const long gamma =
        bfem::free_param_count(cfg.spec, bfem::Dims{200, 10, 3, 2});
    const double ref = loglik - 0.5 * gamma * std::log(200.0);
    CHECK(got == Catch::Approx(ref).epsilon(1e-6));
}

TEST_CASE("grid search recovers the generating cluster count") {
    // dimension high enough that the complexity penalty dominates the
    // misfit gain of an extra component
    const auto sim = bfem::gen_subspace(500, 60, 3.0, 23);
    bfem::FitConfig base;
    base.restarts = 4;
    base.max_iter = 60;
    base.seed = 5;
    const std::vector<bfem::SubmodelSpec> specs = {
        bfem::SubmodelSpec::from_code("S_B"),
        bfem::SubmodelSpec::from_code("AB")};
    const bfem::SelectionResult res =
        bfem::select(sim.Y, {2, 3, 4}, specs, base);
    REQUIRE(res.table.size() == 6);
    CHECK(res.best().K == 3);
    CHECK(res.best().spec.code() == "S_B");
    // every cell carries the right parameter count
    for (const auto& e : res.table)
        CHECK(e.gamma == bfem::free_param_count(
                             e.spec, bfem::Dims{500, 60, e.K, e.K - 1}));
}

TEST_CASE("table serialization is well-formed") {
    const auto sim = bfem::gen_subspace(120, 6, 8.0, 29);
    bfem::FitConfig base;
    base.restarts = 2;
    base.max_iter = 30;
    base.seed = 1;
    const std::vector<bfem::SubmodelSpec> specs = {
        bfem::SubmodelSpec::from_code("AB")};
    const auto res = bfem::select(sim.Y, {2, 3}, specs, base);
    const std::string csv = bfem::selection_csv(res);
    CHECK(csv.rfind("K,spec,gamma,elbo,icl,converged,flags\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("empty grids are rejected") {
    const auto sim = bfem::gen_subspace(50, 5, 8.0, 31);
    bfem::FitConfig base;
    CHECK_THROWS_AS(bfem::select(sim.Y, {}, {bfem::SubmodelSpec{}}, base),
                    bfem::Error);
    CHECK_THROWS_AS(bfem::select(sim.Y, {2}, {}, base), bfem::Error);
    bfem::SelectionResult empty;
    CHECK_THROWS_AS(empty.best(), bfem::Error);
}
