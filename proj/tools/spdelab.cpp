// Command-line front end: simulate | uniqueness | estimate | verify | kernels.
// Exit codes: 0 success, 1 hard-check failure, 2 config error, 3 blow-up.

#include "spde/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

namespace {

using namespace spde;

std::string out_path(const ExperimentSetup& setup, const std::string& name) {
    std::filesystem::create_directories(setup.out_dir);
    return (std::filesystem::path(setup.out_dir) / name).string();
}

int cmd_simulate(const Config& cfg) {
    const ExperimentSetup setup = build_setup(cfg);
    const NoisePath path = sample_noise(setup.noise);
    const PolynomialReaction* F = setup.reaction ? &*setup.reaction : nullptr;
    const HolderDrift* B = setup.drift ? &*setup.drift : nullptr;
    const Field x0 = build_initial_datum(cfg, setup.op);
    const Trajectory traj = solve_mild(setup.op, x0, F, B, path, setup.solver);
    write_trajectory_csv(out_path(setup, "trajectory.csv"), traj);
    write_trajectory_binary(out_path(setup, "trajectory.bin"), traj);
    std::printf("simulate: %zu records, final |X|_E = %s\n", traj.times.size(),
                format_double(sup_norm(traj.states.back())).c_str());
    return 0;
}

int cmd_uniqueness(const Config& cfg) {
    const ExperimentSetup setup = build_setup(cfg);
    const std::string route = cfg.get_string("uniqueness.route", "both");
    std::vector<CurvePoint> curves;
    std::string json = "{}\n";
    nlohmann::ordered_json summary;
    if (route == "refinement" || route == "both") {
        const UniquenessReport r = run_uniqueness_refinement(
            setup, cfg.get_int("uniqueness.levels", 4), cfg.get_int("uniqueness.n_paths", 1));
        curves.insert(curves.end(), r.curves.begin(), r.curves.end());
        summary["refinement"] = nlohmann::ordered_json::parse(uniqueness_report_json(r));
        std::printf("uniqueness refinement: slope %.3f, strictly decreasing %s\n",
                    r.refinement_slope, r.refinement_strictly_decreasing ? "yes" : "no");
    }
    if (route == "mollification" || route == "both") {
        const UniquenessReport r = run_uniqueness_mollification(
            setup, cfg.get_int_list("uniqueness.m_list", {4, 8, 16, 32}),
            cfg.get_int("uniqueness.quadrature_samples", 64));
        curves.insert(curves.end(), r.curves.begin(), r.curves.end());
        summary["mollification"] = nlohmann::ordered_json::parse(uniqueness_report_json(r));
        std::printf("uniqueness mollification: decreasing %s, fit exponent %.3f\n",
                    r.mollification_decreasing ? "yes" : "no", r.mollification_fit_exponent);
    }
    write_curves_csv(out_path(setup, "uniqueness_curves.csv"), curves);
    write_text_file(out_path(setup, "uniqueness_summary.json"), summary.dump(2) + "\n");
    return 0;
}

int cmd_estimate(const Config& cfg) {
    const ExperimentSetup setup = build_setup(cfg);
    EnsembleSpec ens;
    ens.op = &setup.op;
    ens.F = setup.reaction ? &*setup.reaction : nullptr;
    ens.B = setup.drift ? &*setup.drift : nullptr;
    ens.solver = setup.solver;
    ens.n_modes = setup.noise.n_modes;
    ens.seed = setup.noise.seed;
    ens.workers = setup.workers;

    const Field x = build_initial_datum(cfg, setup.op);
    const TestFunctional phi = build_functional(cfg, "estimator");
    const std::string op_name = cfg.get_string("estimator.op", "pt");
    const double t = cfg.get_double("estimator.t", setup.solver.T);
    const std::int64_t n = cfg.get_int("estimator.n_samples", 1000);
    const std::string ledger = out_path(setup, "results.csv");
    const std::string id = cfg.get_string("experiment_id", "estimate");

    if (op_name == "pt") {
        const EstimatorResult r = estimate_Pt(ens, phi, x, t, n);
        append_result_row(ledger, id, "estimate_Pt", phi.digest(), r.mean, r.stderr_of_mean,
                          r.n_samples, r.seed, r.wall_time);
        std::printf("estimate_Pt: %.8g +- %.3g (n=%lld)\n", r.mean, r.stderr_of_mean,
                    static_cast<long long>(r.n_samples));
    } else if (op_name == "bismut") {
        Field h = setup.op.modes.col(cfg.get_int("estimator.h_mode", 0));
        const EstimatorResult r = bismut_elworthy_derivative(ens, phi, x, h, t, n);
        append_result_row(ledger, id, "bismut_elworthy_derivative", phi.digest(), r.mean,
                          r.stderr_of_mean, r.n_samples, r.seed, r.wall_time);
        std::printf("bismut_elworthy: %.8g +- %.3g (n=%lld)\n", r.mean, r.stderr_of_mean,
                    static_cast<long long>(r.n_samples));
    } else if (op_name == "smoothing") {
        std::vector<Field> hs = {setup.op.modes.col(0)};
        if (setup.op.n_modes() > 1) hs.push_back(setup.op.modes.col(1));
        const std::vector<double> ts =
            cfg.get_double_list("estimator.t_grid", {0.002, 0.004, 0.008, 0.016, 0.032});
        const SmoothingFit fit = smoothing_rate_fit(ens, phi, x, hs, ts, n);
        for (std::size_t i = 0; i < fit.ts.size(); ++i)
            append_result_row(ledger, id, "smoothing_point", phi.digest() + "@t=" +
                              format_double(fit.ts[i]), fit.values[i], fit.stderrs[i], n,
                              ens.seed, 0.0);
        append_result_row(ledger, id, "smoothing_rate_fit", phi.digest(), fit.slope, 0.0, n,
                          ens.seed, 0.0);
        std::printf("smoothing fit slope: %.4f\n", fit.slope);
    } else if (op_name == "resolvent") {
        const double lambda = cfg.get_double("estimator.lambda", 10.0);
        const double t_max = cfg.get_double("estimator.t_max", 20.0 / lambda);
        const ResolventResult r =
            estimate_resolvent(ens, phi, x, lambda, t_max, cfg.get_int("estimator.panels", 16), n);
        append_result_row(ledger, id, "estimate_resolvent", phi.digest(), r.value,
                          r.error_budget, r.n_samples, r.seed, 0.0);
        std::printf("resolvent: %.8g (budget %.3g)\n", r.value, r.error_budget);
    } else if (op_name == "vectorial") {
        if (!setup.drift) throw ConfigError("estimator.op=vectorial needs a drift functional");
        const FieldEstimatorResult r = vectorial_Pt(ens, *setup.drift, x, t, n);
        append_result_row(ledger, id, "vectorial_Pt", setup.drift->digest(), sup_norm(r.mean),
                          r.stderr_of_mean.maxCoeff(), r.n_samples, r.seed, r.wall_time);
        std::printf("vectorial_Pt: |mean|_E = %.8g\n", sup_norm(r.mean));
    } else if (op_name == "moments") {
        if (!setup.reaction) throw ConfigError("estimator.op=moments needs a reaction");
        const MomentReport r = moment_estimates(
            setup.op, *setup.reaction, setup.solver, ens.seed,
            cfg.get_int("estimator.n_samples", 128),
            cfg.get_double_list("estimator.x0_levels", {0.0, 2.0, 4.0, 8.0}),
            cfg.get_double("estimator.collapse_big", 100.0),
            cfg.get_double("estimator.collapse_small", 10.0));
        append_result_row(ledger, id, "moment_growth_slope", "sup_t|X|_E vs |x0|_E",
                          r.growth_slope, 0.0, n, ens.seed, 0.0);
        append_result_row(ledger, id, "moment_collapse_ratio", "E|X(t,big)|/E|X(t,small)|",
                          r.collapse_ratio, 0.0, n, ens.seed, 0.0);
        std::printf("moments: growth slope %.4g, collapse ratio %.4g, H-Lipschitz max %.4g\n",
                    r.growth_slope, r.collapse_ratio, r.max_h_lipschitz_ratio);
    } else {
        throw ConfigError("estimator.op must be pt|bismut|smoothing|resolvent|vectorial|moments");
    }
    return 0;
}

int cmd_verify(const Config& cfg) {
    const ExperimentSetup setup = build_setup(cfg);
    const std::vector<CheckResult> results = run_verify_suite(setup);
    write_text_file(out_path(setup, "verify_ledger.csv"), verify_ledger_csv(results));
    write_text_file(out_path(setup, "verify_ledger.json"), verify_ledger_json(results));
    int passed = 0;
    for (const auto& r : results) {
        std::printf("[%s] %-32s observed %.6g bound %.6g (%s)\n", r.pass ? "pass" : "FAIL",
                    r.name.c_str(), r.observed, r.bound, r.hard ? "hard" : "statistical");
        if (r.pass) ++passed;
    }
    std::printf("verify: %d/%zu checks passed\n", passed, results.size());
    return any_hard_failure(results) ? 1 : 0;
}

int cmd_kernels(const Config& cfg) {
    const ExperimentSetup setup = build_setup(cfg);
    const std::vector<double> ts =
        cfg.get_double_list("kernels.t_list", {0.01, 0.05, 0.1, 0.5, 1.0});
    const double tol = cfg.get_double("kernels.bound_tolerance", 1e-6);
    const auto rows = run_kernel_checks(setup.op, ts, tol);
    std::string csv = "t,max_value,min_value,bound,tail,pass\n";
    bool all_pass = true;
    for (const auto& r : rows) {
        csv += format_double(r.t) + ',' + format_double(r.max_value) + ',' +
               format_double(r.min_value) + ',' + format_double(r.bound) + ',' +
               format_double(r.tail) + ',' + (r.pass ? "pass" : "fail") + '\n';
        std::printf("kernel t=%-6g max %.8g <= %.8g  min %.3g  %s\n", r.t, r.max_value, r.bound,
                    r.min_value, r.pass ? "pass" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    write_text_file(out_path(setup, "kernel_checks.csv"), csv);
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for 1-D stochastic reaction-diffusion equations"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;

    app.add_option("--config", config_path, "configuration file (key=value lines)");
    app.add_option("--set", overrides, "override KEY=VALUE (repeatable)")->take_all();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override noise.seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--workers", workers, "worker threads (0 = auto; must not affect results)");

    std::string experiment;
    for (const char* name : {"simulate", "uniqueness", "estimate", "verify", "kernels"}) {
        auto* sub = app.add_subcommand(name);
        sub->callback([&experiment, name]() { experiment = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = config_path.empty() ? Config{} : Config::from_file(config_path);
        for (const std::string& kv : overrides) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw spde::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!out_dir.empty()) cfg.set("output.dir", out_dir);
        if (seed_set) cfg.set("noise.seed", std::to_string(seed));
        if (workers >= 0) cfg.set("workers", std::to_string(workers));
        cfg.set("experiment", experiment);

        if (experiment == "simulate") return cmd_simulate(cfg);
        if (experiment == "uniqueness") return cmd_uniqueness(cfg);
        if (experiment == "estimate") return cmd_estimate(cfg);
        if (experiment == "verify") return cmd_verify(cfg);
        if (experiment == "kernels") return cmd_kernels(cfg);
        std::fprintf(stderr, "unknown experiment\n");
        return 2;
    } catch (const spde::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const spde::BlowUpError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
