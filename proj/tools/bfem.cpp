// Command-line front end for the subspace clustering toolkit: fitting,
// model selection, data simulation, image denoising, and evaluation.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bfem/denoise.hpp"
#include "bfem/inference.hpp"
#include "bfem/io.hpp"
#include "bfem/metrics.hpp"
#include "bfem/pgm.hpp"
#include "bfem/selection.hpp"
#include "bfem/simulate.hpp"

namespace {

std::vector<bfem::SubmodelSpec> parse_model_list(const std::string& csv) {
    std::vector<bfem::SubmodelSpec> specs;
    std::stringstream ss(csv);
    std::string code;
    while (std::getline(ss, code, ','))
        if (!code.empty()) specs.push_back(bfem::SubmodelSpec::from_code(code));
    if (specs.empty()) throw bfem::Error("empty model list");
    return specs;
}

int run(int argc, char** argv) {
    CLI::App app{"Bayesian discriminative subspace clustering toolkit"};
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture model to CSV data");
    std::string fit_data, fit_model = "Sk_B", fit_fstep = "odv";
    std::string fit_output = "model.json", fit_labels = "labels.csv";
    int fit_k = 0, fit_d = 0, fit_restarts = 10, fit_max_iter = 100;
    unsigned long long fit_seed = 0;
    bool fit_header = false;
    fit_cmd->add_option("--data", fit_data, "input CSV matrix")->required();
    fit_cmd->add_option("--k", fit_k, "number of clusters")->required();
    fit_cmd->add_option("--d", fit_d, "subspace dimension (default K-1)");
    fit_cmd->add_option("--model", fit_model, "covariance submodel code");
    fit_cmd->add_option("--fstep", fit_fstep, "subspace update: odv|svd")
        ->check(CLI::IsMember({"odv", "svd"}));
    fit_cmd->add_option("--restarts", fit_restarts, "random restarts");
    fit_cmd->add_option("--max-iter", fit_max_iter, "maximum iterations");
    fit_cmd->add_option("--seed", fit_seed, "random seed");
    fit_cmd->add_option("--output", fit_output, "model JSON output path");
    fit_cmd->add_option("--labels", fit_labels, "partition CSV output path");
    fit_cmd->add_flag("--header", fit_header, "skip first CSV row");

    // select
    auto* sel_cmd = app.add_subcommand("select", "Model selection over a grid");
    std::string sel_data, sel_models, sel_out = "selection.csv";
    int sel_kmin = 0, sel_kmax = 0;
    unsigned long long sel_seed = 0;
    int sel_restarts = 10, sel_max_iter = 100;
    bool sel_header = false;
    sel_cmd->add_option("--data", sel_data, "input CSV matrix")->required();
    sel_cmd->add_option("--kmin", sel_kmin, "smallest K")->required();
    sel_cmd->add_option("--kmax", sel_kmax, "largest K")->required();
    sel_cmd->add_option("--models", sel_models, "comma-separated model codes")
        ->required();
    sel_cmd->add_option("--out", sel_out, "output CSV table");
    sel_cmd->add_option("--seed", sel_seed, "random seed");
    sel_cmd->add_option("--restarts", sel_restarts, "random restarts per cell");
    sel_cmd->add_option("--max-iter", sel_max_iter, "maximum iterations");
    sel_cmd->add_flag("--header", sel_header, "skip first CSV row");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate benchmark data");
    sim_cmd->require_subcommand(1);
    auto* sim_chang = sim_cmd->add_subcommand("chang", "two-class benchmark");
    auto* sim_sub = sim_cmd->add_subcommand(
        "subspace", "three-class latent-subspace benchmark");
    int sim_n = 300, sim_p = 25;
    double sim_snr = 3.0;
    unsigned long long sim_seed = 0;
    std::string sim_out_data = "Y.csv", sim_out_labels = "Z.csv", sim_meta;
    for (auto* c : {sim_chang, sim_sub}) {
        c->add_option("--n", sim_n, "sample size");
        c->add_option("--seed", sim_seed, "random seed");
        c->add_option("--out-data", sim_out_data, "data CSV path");
        c->add_option("--out-labels", sim_out_labels, "labels CSV path");
        c->add_option("--meta", sim_meta, "optional metadata JSON path");
    }
    sim_sub->add_option("--p", sim_p, "ambient dimension");
    sim_sub->add_option("--snr", sim_snr, "signal-to-noise ratio in dB");

    // denoise
    auto* den_cmd = app.add_subcommand("denoise", "Patch-based image denoising");
    std::string den_image, den_ref, den_output = "denoised.pgm";
    double den_sigma = 0.0;
    int den_k = 40, den_patch = 8, den_subsample = 50000;
    unsigned long long den_seed = 0;
    den_cmd->add_option("--image", den_image, "noisy PGM image")->required();
    den_cmd->add_option("--sigma", den_sigma, "noise standard deviation")
        ->required();
    den_cmd->add_option("--k", den_k, "number of patch clusters");
    den_cmd->add_option("--patch", den_patch, "patch side length");
    den_cmd->add_option("--subsample", den_subsample,
                        "max patches used for fitting");
    den_cmd->add_option("--ref", den_ref, "optional clean image for PSNR");
    den_cmd->add_option("--output", den_output, "output PGM path");
    den_cmd->add_option("--seed", den_seed, "random seed");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluation metrics");
    eval_cmd->require_subcommand(1);
    auto* eval_ari = eval_cmd->add_subcommand("ari", "adjusted Rand index");
    std::string ari_pred, ari_truth;
    eval_ari->add_option("--pred", ari_pred, "predicted labels CSV")->required();
    eval_ari->add_option("--truth", ari_truth, "reference labels CSV")
        ->required();
    auto* eval_psnr = eval_cmd->add_subcommand("psnr", "peak SNR between images");
    std::string psnr_ref, psnr_test;
    eval_psnr->add_option("--ref", psnr_ref, "reference PGM image")->required();
    eval_psnr->add_option("--test", psnr_test, "test PGM image")->required();

    // repro
    auto* repro_cmd = app.add_subcommand(
        "repro", "Run desk-scale experiments and emit summary tables");
    std::string repro_out = "repro";
    unsigned long long repro_seed = 42;
    repro_cmd->add_option("--out", repro_out, "output directory prefix");
    repro_cmd->add_option("--seed", repro_seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*fit_cmd) {
        const bfem::Matrix Y = bfem::read_csv_matrix(fit_data, fit_header);
        bfem::FitConfig cfg;
        cfg.K = fit_k;
        cfg.d = fit_d;
        cfg.spec = bfem::SubmodelSpec::from_code(fit_model);
        cfg.fstep = fit_fstep == "svd" ? bfem::FStepMethod::SVD
                                       : bfem::FStepMethod::ODV;
        cfg.restarts = fit_restarts;
        cfg.max_iter = fit_max_iter;
        cfg.seed = fit_seed;
        const bfem::FitResult fit = bfem::fit(Y, cfg);
        std::ofstream out(fit_output);
        out << bfem::model_to_json(fit, cfg.spec).dump(2) << '\n';
        bfem::write_csv_labels(fit.partition, fit_labels);
        std::cout << "elbo=" << std::setprecision(10)
                  << fit.elbo_trace.back() << " iters=" << fit.n_iter
                  << " converged=" << (fit.converged ? "yes" : "no") << '\n';
    } else if (*sel_cmd) {
        const bfem::Matrix Y = bfem::read_csv_matrix(sel_data, sel_header);
        bfem::FitConfig base;
        base.restarts = sel_restarts;
        base.max_iter = sel_max_iter;
        base.seed = sel_seed;
        std::vector<int> K_range;
        for (int K = sel_kmin; K <= sel_kmax; ++K) K_range.push_back(K);
        const bfem::SelectionResult res =
            bfem::select(Y, K_range, parse_model_list(sel_models), base);
        std::ofstream out(sel_out);
        out << bfem::selection_csv(res);
        const auto& best = res.best();
        std::cout << "best K=" << best.K << " model=" << best.spec.code()
                  << " icl=" << std::setprecision(10) << best.icl << '\n';
    } else if (*sim_cmd) {
        const bfem::SimOutput sim =
            *sim_chang ? bfem::gen_chang(sim_n, sim_seed)
                       : bfem::gen_subspace(sim_n, sim_p, sim_snr, sim_seed);
        bfem::write_csv_matrix(sim.Y, sim_out_data);
        bfem::write_csv_labels(sim.Z, sim_out_labels);
        if (!sim_meta.empty()) {
            nlohmann::json j;
            j["generator"] = *sim_chang ? "chang" : "subspace";
            j["n"] = sim.Y.rows();
            j["p"] = sim.Y.cols();
            j["seed"] = sim.seed;
            j["snr_db"] = sim.snr_db;
            std::ofstream mo(sim_meta);
            mo << j.dump(2) << '\n';
        }
    } else if (*den_cmd) {
        const bfem::GrayImage noisy = bfem::read_pgm(den_image);
        bfem::DenoiseConfig cfg;
        cfg.K = den_k;
        cfg.f = den_patch;
        cfg.subsample = den_subsample;
        cfg.seed = den_seed;
        bfem::GrayImage ref;
        const bool have_ref = !den_ref.empty();
        if (have_ref) ref = bfem::read_pgm(den_ref);
        const bfem::DenoiseReport rep = bfem::denoise_image(
            noisy, den_sigma, cfg, have_ref ? &ref : nullptr);
        bfem::write_pgm(rep.output, den_output);
        std::cout << std::fixed << std::setprecision(4);
        if (have_ref)
            std::cout << "psnr_noisy=" << rep.psnr_noisy
                      << " psnr_denoised=" << rep.psnr_denoised << '\n';
        else
            std::cout << "denoised " << den_image << " -> " << den_output
                      << '\n';
    } else if (*eval_cmd) {
        std::cout << std::fixed << std::setprecision(4);
        if (*eval_ari) {
            const auto pred = bfem::read_csv_labels(ari_pred);
            const auto truth = bfem::read_csv_labels(ari_truth);
            std::cout << bfem::ari(pred, truth) << '\n';
        } else {
            const bfem::GrayImage ref = bfem::read_pgm(psnr_ref);
            const bfem::GrayImage test = bfem::read_pgm(psnr_test);
            std::cout << bfem::psnr(ref.pixels, test.pixels) << '\n';
        }
    } else if (*repro_cmd) {
        // Desk-scale runs of the simulation benchmarks: clustering accuracy
        // on both generators plus a small model-selection table.
        std::cout << std::fixed << std::setprecision(4);
        {
            const bfem::SimOutput sim = bfem::gen_chang(300, repro_seed);
            bfem::FitConfig cfg;
            cfg.K = 2;
            cfg.seed = repro_seed;
            const bfem::FitResult fit = bfem::fit(sim.Y, cfg);
            std::cout << "chang n=300 ari="
                      << bfem::ari(fit.partition, sim.Z) << '\n';
        }
        {
            const bfem::SimOutput sim =
                bfem::gen_subspace(600, 25, 3.0, repro_seed);
            bfem::FitConfig cfg;
            cfg.K = 3;
            cfg.d = 2;
            cfg.seed = repro_seed;
            const bfem::FitResult fit = bfem::fit(sim.Y, cfg);
            std::cout << "subspace n=600 p=25 snr=3dB ari="
                      << bfem::ari(fit.partition, sim.Z) << '\n';
            bfem::FitConfig base;
            base.seed = repro_seed;
            base.restarts = 3;
            base.max_iter = 50;
            const auto all = bfem::SubmodelSpec::all();
            const std::vector<bfem::SubmodelSpec> specs(all.begin(), all.end());
            const bfem::SelectionResult res =
                bfem::select(sim.Y, {2, 3, 4}, specs, base);
            std::ofstream out(repro_out + "_selection.csv");
            out << bfem::selection_csv(res);
            const auto& best = res.best();
            std::cout << "selection best K=" << best.K
                      << " model=" << best.spec.code() << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error&) {
        return 2;  // CLI11_PARSE already handled; defensive
    } catch (const bfem::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
