/**
 * @file rfit_main.cpp
 * @brief rfit command-line front end.
 *
 * Subcommands: gen, influence, fit, bench, report.
 * Exit codes: 0 success, 2 usage error, 3 numerical error, 4 schema error.
 */

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>

#include "CLI11.hpp"

#include "rfit/pipeline.hpp"

namespace {

int exact_cap_from_env() {
    if (const char* env = std::getenv("RFIT_MAX_EXACT_N")) {
        const int cap = std::atoi(env);
        if (cap > 0) return cap;
    }
    return rfit::kDefaultExactCap;
}

double spread_default(rfit::ModelKind kind) {
    return kind == rfit::ModelKind::Line2D ? 10.0 : 640.0;
}

int run(int argc, char** argv) {
    CLI::App app{"influence-based robust geometric fitting"};
    app.require_subcommand(1);

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "generate a synthetic instance with ground truth");
    std::string gen_kind = "line";
    int gen_n = 100;
    int gen_inliers = 60;
    double gen_sigma = 0.1;
    double gen_spread = 0.0;
    std::uint64_t gen_seed = 1;
    double gen_eps = 0.0;
    std::string gen_out;
    gen->add_option("--kind", gen_kind, "line|triangulation|homography")->required();
    gen->add_option("--n", gen_n, "number of points");
    gen->add_option("--inliers", gen_inliers, "number of inliers");
    gen->add_option("--sigma", gen_sigma, "inlier noise standard deviation");
    gen->add_option("--spread", gen_spread, "outlier box / image side (default 10 line, 640 otherwise)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--eps", gen_eps, "inlier threshold stored in the instance (default per kind)");
    gen->add_option("--out", gen_out, "output instance path")->required();

    // --- influence ---
    auto* infl = app.add_subcommand("influence", "compute per-point influences");
    std::string infl_in, infl_method = "exact", infl_csv;
    std::uint64_t infl_m = 5000, infl_seed = 1;
    double infl_eps = 0.0;
    infl->add_option("--in", infl_in, "instance path")->required();
    infl->add_option("--method", infl_method, "exact|classical|quantum");
    infl->add_option("--m", infl_m, "iterations for the sampled estimators");
    infl->add_option("--eps", infl_eps, "override the instance inlier threshold");
    infl->add_option("--seed", infl_seed, "estimator seed");
    infl->add_option("--out-csv", infl_csv, "write index,alpha,alpha_norm,... CSV here");

    // --- fit ---
    auto* fit = app.add_subcommand("fit", "two-step robust fit (influence, threshold, refit)");
    std::string fit_in, fit_method = "exact", fit_report;
    std::uint64_t fit_m = 5000, fit_seed = 1;
    double fit_gamma = 0.3;
    fit->add_option("--in", fit_in, "instance path")->required();
    fit->add_option("--method", fit_method, "exact|classical|quantum");
    fit->add_option("--m", fit_m, "iterations for the sampled estimators");
    fit->add_option("--gamma", fit_gamma, "normalized-influence threshold in (0,1]");
    fit->add_option("--seed", fit_seed, "estimator seed");
    fit->add_option("--report", fit_report, "write the fit report JSON here");

    // --- bench ---
    auto* bench = app.add_subcommand("bench", "logical oracle query accounting");
    std::string bench_in;
    std::uint64_t bench_m = 8, bench_seed = 1;
    bench->add_option("--in", bench_in, "instance path")->required();
    bench->add_option("--m", bench_m, "iterations");
    bench->add_option("--seed", bench_seed, "sampler seed");

    // --- report ---
    auto* rep = app.add_subcommand("report", "plot-ready files from an influence CSV");
    std::string rep_in, rep_csv, rep_plots = ".";
    rep->add_option("--in", rep_in, "instance path")->required();
    rep->add_option("--csv", rep_csv, "influence CSV produced by the influence subcommand")
        ->required();
    rep->add_option("--plots", rep_plots, "output directory for plot files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return rfit::kExitUsage;
    }
    const int cap = exact_cap_from_env();

    if (*gen) {
        rfit::InstanceConfig cfg;
        cfg.kind = rfit::kind_from_name(gen_kind);
        cfg.n = gen_n;
        cfg.inlier_count = gen_inliers;
        cfg.noise_sigma = gen_sigma;
        cfg.outlier_spread = gen_spread > 0.0 ? gen_spread : spread_default(cfg.kind);
        cfg.seed = gen_seed;
        cfg.eps = gen_eps;
        const rfit::Instance inst = rfit::generate(cfg);
        rfit::emit_instance(inst, gen_out);
        std::cout << "wrote " << gen_out << " (kind=" << rfit::kind_name(inst.kind)
                  << " N=" << inst.size() << " eps=" << inst.eps << ")\n";
        return rfit::kExitOk;
    }

    if (*infl) {
        rfit::Instance inst = rfit::ingest(infl_in);
        if (infl_eps > 0.0) inst.eps = infl_eps;
        const rfit::Dataset data = inst.dataset();
        const rfit::EstimatorKind method = rfit::estimator_from_name(infl_method);

        rfit::InfluenceVector vec;
        std::uint64_t queries = 0;
        switch (method) {
            case rfit::EstimatorKind::Exact:
                vec = rfit::exact_influence_full(data, inst.eps, cap);
                break;
            case rfit::EstimatorKind::Classical: {
                auto [v, trace] = rfit::sample_influence_classical(
                    data, inst.eps, rfit::combinatorial_dim(inst.kind), infl_m, infl_seed);
                vec = std::move(v);
                queries = trace.oracle_queries;
                break;
            }
            case rfit::EstimatorKind::Quantum: {
                const rfit::OracleTable table = rfit::build_oracle_table(data, inst.eps, cap);
                auto [v, record] = rfit::bv_sample(rfit::fwht_spectrum(table), infl_m, infl_seed);
                vec = std::move(v);
                queries = record.oracle_queries;
                break;
            }
        }
        const rfit::InfluenceVector norm = rfit::normalize(vec);
        if (!infl_csv.empty()) rfit::write_influence_csv(inst, vec, norm, 0.3, infl_csv);
        std::cout << "N=" << inst.size() << " eps=" << inst.eps << " method=" << infl_method;
        if (queries) std::cout << " logical_queries=" << queries;
        std::cout << "\n";
        for (int i = 0; i < vec.size(); ++i)
            std::cout << i << ' ' << vec.alphas[static_cast<std::size_t>(i)] << ' '
                      << norm.alphas[static_cast<std::size_t>(i)] << "\n";
        return rfit::kExitOk;
    }

    if (*fit) {
        const rfit::Instance inst = rfit::ingest(fit_in);
        rfit::FitOptions opt;
        opt.method = rfit::estimator_from_name(fit_method);
        opt.m_iters = fit_m;
        opt.gamma = fit_gamma;
        opt.seed = fit_seed;
        opt.n_cap = cap;
        const rfit::FitReport report = rfit::robust_fit(inst, opt);
        if (!fit_report.empty()) rfit::emit_report(report, inst, fit_report);
        int retained = 0;
        for (int m : report.inlier_mask) retained += m;
        std::cout << "retained " << retained << "/" << inst.size() << " points, consensus "
                  << report.consensus_at_refit << " at the refit ("
                  << report.elapsed_seconds << " s)\n";
        std::cerr << "timing: " << report.elapsed_seconds << " s\n";
        return rfit::kExitOk;
    }

    if (*bench) {
        const rfit::Instance inst = rfit::ingest(bench_in);
        const rfit::Dataset data = inst.dataset();
        auto [vec, trace] = rfit::sample_influence_classical(
            data, inst.eps, rfit::combinatorial_dim(inst.kind), bench_m, bench_seed);
        (void)vec;
        // quantum cost is definitional: one logical oracle call per iteration
        rfit::MeasurementRecord record;
        record.oracle_queries = bench_m;
        record.seed = bench_seed;
        const rfit::QueryReport report = rfit::query_report(trace, record);
        std::cout << "instance " << bench_in << " kind=" << rfit::kind_name(inst.kind)
                  << " N=" << inst.size() << " M=" << bench_m << "\n"
                  << report.to_string();
        return rfit::kExitOk;
    }

    if (*rep) {
        const rfit::Instance inst = rfit::ingest(rep_in);
        std::ifstream csv(rep_csv);
        if (!csv) throw rfit::SchemaError(rep_csv + ": cannot open influence CSV");
        std::string line;
        if (!std::getline(csv, line) || line.rfind("index,alpha,alpha_norm", 0) != 0)
            throw rfit::SchemaError(rep_csv + ": expected header index,alpha,alpha_norm,...");
        rfit::InfluenceVector norm;
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            std::size_t p1 = line.find(',');
            std::size_t p2 = line.find(',', p1 + 1);
            std::size_t p3 = line.find(',', p2 + 1);
            if (p1 == std::string::npos || p2 == std::string::npos)
                throw rfit::SchemaError(rep_csv + ": malformed row '" + line + "'");
            const std::string field = line.substr(p2 + 1, p3 == std::string::npos
                                                              ? std::string::npos
                                                              : p3 - p2 - 1);
            norm.alphas.push_back(std::stod(field));
        }
        if (static_cast<int>(norm.alphas.size()) != inst.size())
            throw rfit::SchemaError(rep_csv + ": row count does not match the instance size");
        rfit::write_plot_files(norm, rep_plots);
        std::cout << "wrote " << rep_plots << "/influence_sorted.csv and influence_sorted.gp\n";
        return rfit::kExitOk;
    }

    return rfit::kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rfit::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return rfit::kExitUsage;
    } catch (const rfit::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return rfit::kExitSchema;
    } catch (const rfit::NonpositiveDenominator& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return rfit::kExitNumerical;
    } catch (const rfit::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return rfit::kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rfit::kExitNumerical;
    }
}
