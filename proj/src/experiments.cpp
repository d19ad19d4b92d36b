#include "spde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace spde {

namespace {
constexpr double kPi = 3.14159265358979323846;

Field random_span_field(const SpectralOperator& op, std::uint64_t seed, std::uint64_t tag,
                        int max_modes, double mode_decay = 1.0) {
    const int m = std::min(op.n_modes(), max_modes);
    Field x = Field::Zero(op.n_nodes());
    for (int k = 0; k < m; ++k)
        x += keyed_normal(seed, kStreamField, tag, k, 0) / std::pow(1.0 + k, mode_decay) *
             op.modes.col(k);
    return x;
}
}  // namespace

// ---------------------------------------------------------------------------
// Uniqueness experiments.
// ---------------------------------------------------------------------------

namespace {

struct GapCurve {
    std::vector<double> times;
    std::vector<double> sup_gap;  // running sup_{s<=t} |a - b|_E
    std::vector<double> h_gap;    // |a - b|_H at t
};

GapCurve gap_curve(const SpectralOperator& op, const Trajectory& a, const Trajectory& b) {
    GapCurve g;
    double running = 0.0;
    // Compare on the coarser recorded grid; both must contain those times.
    const Trajectory& coarse = a.times.size() <= b.times.size() ? a : b;
    const Trajectory& fine = a.times.size() <= b.times.size() ? b : a;
    for (std::size_t i = 0; i < coarse.times.size(); ++i) {
        const double t = coarse.times[i];
        const Field diff = coarse.states[i] - fine.at_time(t);
        running = std::max(running, sup_norm(diff));
        g.times.push_back(t);
        g.sup_gap.push_back(running);
        g.h_gap.push_back(op.h_norm(diff));
    }
    return g;
}

}  // namespace

UniquenessReport run_uniqueness_refinement(const ExperimentSetup& setup, int levels,
                                           int n_paths) {
    if (levels < 2) throw ConfigError("uniqueness: need at least 2 refinement levels");
    if (n_paths < 1) throw ConfigError("uniqueness: n_paths >= 1");
    if (!setup.drift) throw ConfigError("uniqueness: drift must be present");

    UniquenessReport report;
    report.seed = setup.noise.seed;
    const PolynomialReaction* F = setup.reaction ? &*setup.reaction : nullptr;
    const HolderDrift* B = &*setup.drift;
    const Field x0 = build_initial_datum(setup.raw, setup.op);

    const int stride0 = std::max(1, setup.solver.n_steps() / 64);
    std::vector<std::vector<double>> sup_gaps(levels - 1), h_gaps(levels - 1);
    for (int p = 0; p < n_paths; ++p) {
        NoisePathSpec spec = setup.noise;
        spec.seed = derive_sample_seed(setup.noise.seed, p);
        std::vector<Trajectory> ys;
        for (int L = 0; L < levels; ++L) {
            SolverConfig cfg = setup.solver;
            cfg.dt = setup.solver.dt / (1 << L);
            cfg.record_stride = stride0 * (1 << L);
            const NoisePath path = sample_noise(spec);
            ys.push_back(solve_mild(setup.op, x0, F, B, path, cfg));
            if (p == 0) report.level_dts.push_back(cfg.dt);
            spec = refine(spec);
        }
        for (int L = 0; L + 1 < levels; ++L) {
            const GapCurve g = gap_curve(setup.op, ys[L], ys[L + 1]);
            sup_gaps[L].push_back(g.sup_gap.back());
            double hmax = 0.0;
            for (double v : g.h_gap) hmax = std::max(hmax, v);
            h_gaps[L].push_back(hmax);
            if (p == 0) {
                const std::string tag = "refinement_sup_gap_level_" + std::to_string(L);
                const std::string tagh = "refinement_h_gap_level_" + std::to_string(L);
                for (std::size_t i = 0; i < g.times.size(); ++i) {
                    report.curves.push_back({tag, g.times[i], g.sup_gap[i]});
                    report.curves.push_back({tagh, g.times[i], g.h_gap[i]});
                }
            }
        }
    }

    for (int L = 0; L + 1 < levels; ++L) {
        report.refinement_gaps.push_back(pairwise_sum(sup_gaps[L]) / n_paths);
        report.refinement_gaps_h.push_back(pairwise_sum(h_gaps[L]) / n_paths);
    }
    report.refinement_strictly_decreasing = true;
    for (std::size_t i = 0; i + 1 < report.refinement_gaps.size(); ++i)
        if (!(report.refinement_gaps[i + 1] < report.refinement_gaps[i]))
            report.refinement_strictly_decreasing = false;
    // Positive slope s with gap ~ 2^{-s L} means the levels form a Cauchy
    // ladder toward a single limit on this noise realization.
    std::vector<double> xs, ys2;
    for (std::size_t i = 0; i < report.refinement_gaps.size(); ++i) {
        xs.push_back(std::pow(2.0, static_cast<double>(i)));
        ys2.push_back(report.refinement_gaps[i]);
    }
    report.refinement_slope = -log_log_slope(xs, ys2);
    return report;
}

UniquenessReport run_uniqueness_mollification(const ExperimentSetup& setup,
                                              const std::vector<int>& m_list,
                                              int quadrature_samples) {
    if (!setup.drift) throw ConfigError("uniqueness: drift must be present");
    if (setup.drift->variant == HolderDrift::Variant::Mollified)
        throw ConfigError("uniqueness: configure the unmollified drift");
    if (m_list.size() < 2) throw ConfigError("uniqueness: need >= 2 mollification levels");

    UniquenessReport report;
    report.seed = setup.noise.seed;
    report.m_list = m_list;
    const PolynomialReaction* F = setup.reaction ? &*setup.reaction : nullptr;
    const Field x0 = build_initial_datum(setup.raw, setup.op);

    SolverConfig cfg = setup.solver;
    cfg.record_stride = std::max(1, setup.solver.n_steps() / 64);
    const NoisePath path = sample_noise(setup.noise);

    const Trajectory y_plain = solve_mild(setup.op, x0, F, &*setup.drift, path, cfg);
    std::vector<Trajectory> ys;
    for (int m : m_list) {
        const HolderDrift bm =
            HolderDrift::mollified(*setup.drift, m, quadrature_samples, setup.noise.seed ^ 0x5a);
        ys.push_back(solve_mild(setup.op, x0, F, &bm, path, cfg));
    }

    for (std::size_t i = 0; i < m_list.size(); ++i) {
        const GapCurve gu = gap_curve(setup.op, ys[i], y_plain);
        report.gaps_vs_unmollified.push_back(gu.sup_gap.back());
        const std::string tag = "mollification_gap_vs_plain_m_" + std::to_string(m_list[i]);
        for (std::size_t j = 0; j < gu.times.size(); ++j)
            report.curves.push_back({tag, gu.times[j], gu.sup_gap[j]});
        if (i + 1 < m_list.size()) {
            const GapCurve gs = gap_curve(setup.op, ys[i], ys[i + 1]);
            report.mollification_gaps.push_back(gs.sup_gap.back());
        }
    }
    report.mollification_decreasing = true;
    for (std::size_t i = 0; i + 1 < report.gaps_vs_unmollified.size(); ++i)
        if (!(report.gaps_vs_unmollified[i + 1] < report.gaps_vs_unmollified[i]))
            report.mollification_decreasing = false;
    std::vector<double> ms(m_list.begin(), m_list.end());
    report.mollification_fit_exponent = -log_log_slope(ms, report.gaps_vs_unmollified);
    return report;
}

// ---------------------------------------------------------------------------
// Kernel checks.
// ---------------------------------------------------------------------------

std::vector<KernelCheckRow> run_kernel_checks(const SpectralOperator& op,
                                              const std::vector<double>& ts,
                                              double bound_tolerance) {
    std::vector<KernelCheckRow> rows;
    for (double t : ts) {
        KernelCheckRow row;
        row.t = t;
        row.bound = 1.0 / std::sqrt(4.0 * kPi * t);
        row.tail = heat_kernel_tail_bound(op, t);
        const Eigen::MatrixXd K = heat_kernel(op, t);
        row.max_value = K.maxCoeff();
        row.min_value = K.minCoeff();
        row.pass = row.max_value <= row.bound * (1.0 + bound_tolerance) &&
                   row.min_value >= -1e-12;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Verification registry.
// ---------------------------------------------------------------------------

namespace checks {

CheckResult semigroup_law(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
        const Field x = random_span_field(op, setup.noise.seed, 100 + i, op.n_modes(), 0.5);
        const double t1 = 0.03 + 0.04 * i, t2 = 0.11;
        const Field two_step = apply_semigroup(op, t1, apply_semigroup(op, t2, x));
        const Field one_step = apply_semigroup(op, t1 + t2, x);
        worst = std::max(worst, sup_norm(two_step - one_step));
    }
    return {"spectral.semigroup_law", "|S(t)S(s)x - S(t+s)x|_E <= 1e-10", worst, 1e-10,
            worst <= 1e-10, true};
}

CheckResult sup_contraction(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
        const Field x = random_span_field(op, setup.noise.seed, 200 + i, op.n_modes() / 2, 1.5);
        const double nx = sup_norm(x);
        for (double t : {0.0, 0.01, 0.1, 0.5, 2.0})
            worst = std::max(worst, sup_norm(apply_semigroup(op, t, x)) / nx);
    }
    return {"spectral.sup_contraction", "|S(t)x|_E / |x|_E <= 1", worst, 1.0, worst <= 1.0,
            true};
}

CheckResult ultracontractive_fit(const ExperimentSetup& setup) {
    GridSpec gs = setup.grid;
    gs.boundary = Boundary::Dirichlet;
    const SpectralOperator op = build_operator(gs);
    // Sharp H -> E norm of e^{tA}; random fields only probe it up to a
    // sup-of-Gaussian log factor, so fit the norm itself.
    std::vector<double> ts, vals;
    for (double t = 1e-4; t <= 1.01e-2; t *= std::sqrt(10.0)) ts.push_back(t);
    for (double t : ts) {
        const Eigen::VectorXd decay = (2.0 * op.eigenvalues.array() * t).exp();
        vals.push_back(std::sqrt((op.modes.array().square().matrix() * decay).maxCoeff()));
    }
    const double slope = log_log_slope(ts, vals);
    bool pass = slope >= -0.35 && slope <= -0.15;
    double c_fit = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i)
        c_fit = std::max(c_fit, vals[i] * std::pow(ts[i], 0.25));
    for (int i = 0; i < 12 && pass; ++i) {
        Field x = random_span_field(op, setup.noise.seed, 300 + i, op.n_modes(), 0.0);
        x /= op.h_norm(x);
        for (double t : ts)
            pass = pass && sup_norm(apply_semigroup(op, t, x)) <=
                               c_fit * std::pow(t, -0.25) * (1 + 1e-12);
    }
    return {"spectral.ultracontractive_fit",
            "|e^{tA}|_{H->E} fits c t^{-1/4}, slope in [-0.35, -0.15]", slope, -0.25, pass,
            false};
}

CheckResult linear_exactness(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    NoisePathSpec spec{setup.noise.seed, 1e-3, 200, std::min(op.n_modes(), 16), 0};
    const NoisePath path = sample_noise(spec);
    const Field x0 = random_span_field(op, setup.noise.seed, 400, spec.n_modes, 1.0);
    SolverConfig cfg;
    cfg.dt = spec.dt;
    cfg.T = spec.dt * spec.n_steps;
    cfg.record_stride = 50;
    const Trajectory sol = solve_mild(op, x0, nullptr, nullptr, path, cfg);
    const ConvolutionPath conv = stochastic_convolution(op, path, 50);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        const Field heat = apply_semigroup(op, sol.times[i], x0);
        worst = std::max(worst, sup_norm(sol.states[i] - (conv.states[i] + heat)));
    }
    return {"noise.linear_exactness",
            "|X(t) - (e^{tA}x0 + W_A(t))|_E <= 1e-12 for F = B = 0", worst, 1e-12,
            worst <= 1e-12, true};
}

CheckResult normality(const ExperimentSetup& setup) {
    const int n = setup.raw.get_int("verify.normality_samples", 100000);
    NoisePathSpec spec{0, 0.25, 4, 4, 0};
    const SpectralOperator& op = setup.op;
    std::vector<double> coeff(n);
    Eigen::MatrixXd buffer;
    for (int i = 0; i < n; ++i) {
        spec.seed = derive_sample_seed(setup.noise.seed ^ 0x105, i);
        sample_noise_into(spec, buffer);
        const NoisePath path{spec, buffer};
        const ConvolutionPath conv = stochastic_convolution(op, path, spec.n_steps);
        coeff[i] = conv.mode_states.back()[0];
    }
    double m2 = 0.0, m4 = 0.0;
    for (double c : coeff) {
        m2 += c * c;
        m4 += c * c * c * c;
    }
    m2 /= n;
    m4 /= n;
    const double ratio = m4 / (m2 * m2);
    const bool pass = ratio >= 2.9 && ratio <= 3.1;
    return {"noise.normality_fourth_moment", "m4/m2^2 of W_A mode coefficient in [2.9, 3.1]",
            ratio, 3.0, pass, false};
}

CheckResult shared_path_contract(const ExperimentSetup& setup) {
    NoisePathSpec spec{setup.noise.seed, 1e-3, 64, 8, 0};
    const NoisePath path = sample_noise(spec);
    const Eigen::MatrixXd before = path.increments;
    const SpectralOperator& op = setup.op;
    const ConvolutionPath c1 = stochastic_convolution(op, path, 8);
    SolverConfig cfg;
    cfg.dt = spec.dt;
    cfg.T = spec.dt * spec.n_steps;
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    (void)solve_mild(op, Field::Zero(op.n_nodes()), &f, nullptr, path, cfg);
    const ConvolutionPath c2 = stochastic_convolution(op, path, 8);
    bool identical = (path.increments - before).cwiseAbs().maxCoeff() == 0.0;
    for (std::size_t i = 0; i < c1.states.size(); ++i)
        identical = identical && (c1.states[i] - c2.states[i]).cwiseAbs().maxCoeff() == 0.0;
    return {"noise.shared_path_contract",
            "consumers of one NoisePath observe identical increments", identical ? 0.0 : 1.0,
            0.0, identical, true};
}

CheckResult max_inequality(const ExperimentSetup& setup) {
    const int n = setup.raw.get_int("verify.max_inequality_pairs", 100000);
    const SpectralOperator& op = setup.op;
    const int nodes = op.n_nodes();
    std::int64_t violations = 0;
    for (int i = 0; i < n; ++i) {
        Field x(nodes), y(nodes);
        for (int j = 0; j < nodes; ++j) {
            x[j] = 3.0 * (keyed_unit(setup.noise.seed, kStreamField, 700, i, 2 * j) - 0.5);
            y[j] = 3.0 * (keyed_unit(setup.noise.seed, kStreamField, 701, i, 2 * j + 1) - 0.5);
        }
        const Field px = prefix_max(x), py = prefix_max(y);
        double envelope = 0.0;
        for (int j = 0; j < nodes; ++j) {
            envelope = std::max(envelope, std::abs(x[j] - y[j]));
            if (std::abs(px[j] - py[j]) > envelope) ++violations;
        }
    }
    return {"drift.max_inequality",
            "|prefix_max x - prefix_max y|(xi) <= max_{s<=xi} |x - y|", double(violations),
            0.0, violations == 0, true};
}

CheckResult equi_holder(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    const ScalarHolder b = ScalarHolder::signed_power(0.5);
    const HolderDrift base = HolderDrift::running_max(b);
    std::vector<std::pair<Field, Field>> pairs;
    for (int i = 0; i < 12; ++i)
        pairs.emplace_back(random_span_field(op, setup.noise.seed, 800 + i, 12, 0.7),
                           random_span_field(op, setup.noise.seed, 850 + i, 12, 0.7));
    const double alpha = base.holder_exponent();
    double worst = 0.0;
    for (int m : {4, 8, 16, 32}) {
        const HolderDrift bm = HolderDrift::mollified(base, std::min(m, op.n_modes()), 128,
                                                      setup.noise.seed ^ 0x33);
        worst = std::max(worst, empirical_holder_seminorm(bm, op, pairs, alpha));
    }
    const double bound = 1.1 * base.holder_bound() * std::pow(1.1, alpha);
    return {"drift.equi_holder_mollified",
            "sup_m [B_m]_alpha <= 1.1 [B]_alpha * C_fejer^alpha", worst, bound, worst <= bound,
            true};
}

CheckResult reaction_dissipativity(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    // Odd symmetry.
    const Field x = random_span_field(op, setup.noise.seed, 900, 10, 0.5);
    const double odd = sup_norm(apply_reaction(f, Field(-x)) + apply_reaction(f, x));
    // Lattice constants from a coarse sweep, then a finer verification sweep:
    // (f(s+h)-f(s)) h <= -alpha0 h^{2(m+1)} + c (1 + |s|^gamma).
    const double alpha0 = f.alpha0 / 2.0;
    const double gamma = 2.0 * (f.m + 1);
    auto worst_c = [&](int n) {
        double c = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double s = -6.0 + 12.0 * i / (n - 1);
                const double h = -6.0 + 12.0 * j / (n - 1);
                const double lhs = (-std::pow(s + h, 3) + std::pow(s, 3)) * h +
                                   alpha0 * std::pow(h, gamma);
                c = std::max(c, lhs / (1.0 + std::pow(std::abs(s), gamma)));
            }
        return c;
    };
    const double c_fit = worst_c(60) * 1.05;
    const double c_check = worst_c(100);
    const bool pass = odd <= 1e-12 && c_check <= c_fit;
    return {"drift.reaction_dissipativity",
            "(f(s+h)-f(s))h <= -alpha0 h^{2(m+1)} + c (1+|s|^gamma) on the lattice; f odd",
            c_check, c_fit, pass, true};
}

CheckResult drift_boundedness(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    const ScalarHolder b = ScalarHolder::signed_power(0.5);
    Field g = op.nodes.unaryExpr([](double xi) { return 1.0 + std::sin(2 * kPi * xi); });
    std::vector<HolderDrift> variants = {
        HolderDrift::point_eval(b, 0.3, g), HolderDrift::running_max(b),
        HolderDrift::running_max_abs(b), HolderDrift::pointwise(b),
        HolderDrift::mollified(HolderDrift::running_max(b), 8, 64, setup.noise.seed)};
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
        const Field x = random_span_field(op, setup.noise.seed, 950 + i, 16, 0.4);
        for (const auto& B : variants) {
            const double bound = b.sup() * std::max(1.0, sup_norm(g));
            worst = std::max(worst, sup_norm(apply_drift(B, op, x)) / bound);
        }
    }
    return {"drift.boundedness", "|B(x)|_E <= ||b||_inf max(1, |g|_E)", worst, 1.0,
            worst <= 1.0, true};
}

CheckResult solver_determinism(const ExperimentSetup& setup) {
    const SpectralOperator& op = setup.op;
    NoisePathSpec spec{setup.noise.seed, 1e-3, 128, std::min(16, op.n_modes()), 0};
    const NoisePath path = sample_noise(spec);
    SolverConfig cfg;
    cfg.dt = spec.dt;
    cfg.T = spec.dt * spec.n_steps;
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    const HolderDrift B = HolderDrift::running_max(ScalarHolder::signed_power(0.5));
    const Field x0 = random_span_field(op, setup.noise.seed, 1000, 8, 1.0);
    const Trajectory a = solve_mild(op, x0, &f, &B, path, cfg);
    const Trajectory b2 = solve_mild(op, x0, &f, &B, path, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.states.size(); ++i)
        worst = std::max(worst, (a.states[i] - b2.states[i]).cwiseAbs().maxCoeff());
    return {"solver.determinism", "identical inputs give bit-identical trajectories", worst,
            0.0, worst == 0.0, true};
}

CheckResult convergence_order(const ExperimentSetup& setup) {
    GridSpec gs{64, Boundary::Dirichlet, 16};
    const SpectralOperator op = build_operator(gs);
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    const Field x0 = random_span_field(op, setup.noise.seed, 1100, 8, 1.0);
    const double T = 0.25;
    const double dt0 = 1e-3;
    NoisePathSpec spec{setup.noise.seed ^ 0xc0, dt0, static_cast<int>(T / dt0), gs.n_modes, 0};

    // Reference at dt0 / 16 on the same Brownian motion.
    NoisePathSpec ref_spec = spec;
    for (int i = 0; i < 4; ++i) ref_spec = refine(ref_spec);
    SolverConfig ref_cfg;
    ref_cfg.dt = ref_spec.dt;
    ref_cfg.T = T;
    ref_cfg.record_stride = ref_spec.n_steps;
    const Trajectory ref = solve_mild(op, x0, &f, nullptr, sample_noise(ref_spec), ref_cfg);

    std::vector<double> dts, errs;
    NoisePathSpec level = spec;
    for (int L = 0; L < 3; ++L) {
        SolverConfig cfg;
        cfg.dt = level.dt;
        cfg.T = T;
        cfg.record_stride = level.n_steps;
        const Trajectory sol = solve_mild(op, x0, &f, nullptr, sample_noise(level), cfg);
        dts.push_back(level.dt);
        errs.push_back(op.h_norm(sol.states.back() - ref.states.back()));
        level = refine(level);
    }
    const double slope = log_log_slope(dts, errs);
    return {"solver.convergence_order",
            "strong error against a dt/16 reference fits slope >= 0.9", slope, 0.9,
            slope >= 0.9, false};
}

CheckResult first_variation_fd(const ExperimentSetup& setup) {
    GridSpec gs{48, Boundary::Dirichlet, 24};
    const SpectralOperator op = build_operator(gs);
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    const int pairs = setup.raw.get_int("verify.variation_pairs", 5);
    NoisePathSpec spec{setup.noise.seed ^ 0xfd, 1e-4, 1000, gs.n_modes, 0};
    SolverConfig cfg;
    cfg.dt = spec.dt;
    cfg.T = spec.dt * spec.n_steps;
    const double eps = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        spec.seed = derive_sample_seed(setup.noise.seed ^ 0xfd, i);
        const NoisePath path = sample_noise(spec);
        const Field x = random_span_field(op, setup.noise.seed, 1200 + i, 10, 1.0);
        const Field h = random_span_field(op, setup.noise.seed, 1250 + i, 10, 1.0);
        const Trajectory base = solve_mild(op, x, &f, nullptr, path, cfg);
        const Trajectory eta = first_variation(op, base, f, h, 0.0);
        const Trajectory shifted = solve_mild(op, x + eps * h, &f, nullptr, path, cfg);
        const Field fd = (shifted.states.back() - base.states.back()) / eps;
        worst = std::max(worst, sup_norm(fd - eta.states.back()) / sup_norm(eta.states.back()));
    }
    return {"solver.first_variation_fd",
            "shared-noise finite difference matches the variation within 5%", worst, 0.05,
            worst <= 0.05, true};
}

CheckResult kernel_square_sum(const ExperimentSetup& setup) {
    GridSpec gs{96, Boundary::Neumann, 64};
    const SpectralOperator op = build_operator(gs);
    const PolynomialReaction f =
        PolynomialReaction::cubic(op, setup.raw.get_double("verify.square_sum_alpha", 0.25));
    NoisePathSpec spec{setup.noise.seed ^ 0x55, 2.5e-4, 4000, gs.n_modes, 0};
    SolverConfig cfg;
    cfg.dt = spec.dt;
    cfg.T = 1.0;
    const NoisePath path = sample_noise(spec);
    const Trajectory base = solve_mild(op, Field::Zero(op.n_nodes()), &f, nullptr, path, cfg);

    // Evolve all M variation columns at once; Frobenius norm of the mode
    // matrix is the square-sum by Parseval.
    const int m = gs.n_modes;
    Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(m, m);
    std::vector<double> ts, vals;
    std::vector<double> grid;
    for (double t = 0.01; t <= 1.0 + 1e-9; t *= std::sqrt(10.0)) grid.push_back(t);
    std::size_t next = 0;
    for (int j = 0; j < cfg.n_steps() && next < grid.size(); ++j) {
        const Field mult = apply_reaction_derivative(f, base.states[j], 1);
        const Eigen::MatrixXd vals_nodes = op.modes.leftCols(m) * eta;
        const Eigen::MatrixXd forced =
            op.analysis_map.topRows(m) * (vals_nodes.array().colwise() * mult.array()).matrix();
        const Eigen::VectorXd decay = (op.eigenvalues.head(m).array() * cfg.dt).exp();
        Eigen::VectorXd phiw(m);
        for (int k = 0; k < m; ++k) phiw[k] = cfg.dt * phi1(op.eigenvalues[k] * cfg.dt);
        eta = decay.asDiagonal() * eta + phiw.asDiagonal() * forced;
        const double t = cfg.dt * (j + 1);
        if (std::abs(t - grid[next]) < cfg.dt / 2) {
            ts.push_back(grid[next]);
            vals.push_back(eta.squaredNorm());
            ++next;
        }
    }
    const double slope = log_log_slope(ts, vals);
    const bool pass = slope >= -0.65 && slope <= -0.35;
    return {"solver.kernel_square_sum",
            "log-log slope of sum_i |U_{t,0} e_i|_H^2 in [-0.65, -0.35]", slope, -0.5, pass,
            false};
}

CheckResult chapman_kolmogorov(const ExperimentSetup& setup) {
    GridSpec gs{48, Boundary::Dirichlet, 16};
    const SpectralOperator op = build_operator(gs);
    const int n = setup.raw.get_int("verify.ck_samples", 1500);
    const double t1 = 0.1, t2 = 0.15;
    double worst_sigma = 0.0;
    for (int which = 0; which < 2; ++which) {
        const PolynomialReaction f = which == 0 ? PolynomialReaction::linear(op, 0.5)
                                                : PolynomialReaction::cubic(op, 1.0);
        EnsembleSpec ens;
        ens.op = &op;
        ens.F = &f;
        ens.solver.dt = 1e-3;
        ens.solver.T = t1 + t2;
        ens.n_modes = gs.n_modes;
        ens.seed = setup.noise.seed ^ (0xcc0u + which);
        const TestFunctional phi =
            TestFunctional::bounded_composite(TestFunctional::ScalarMap::Tanh, 0, 1.0);
        const Field x = random_span_field(op, setup.noise.seed, 1300 + which, 8, 1.0);
        const EstimatorResult one = estimate_Pt(ens, phi, x, t1 + t2, n);

        // Two-stage re-simulation: endpoints at t1, fresh continuations to t2.
        // Stage 1 reuses the one-shot ensemble's per-sample seeds, so both
        // estimates ride the same paths up to t1 (common random numbers).
        std::vector<double> vals(n);
        parallel_for(n, ens.workers, [&](std::int64_t i) {
            thread_local Eigen::MatrixXd buffer;
            MildStepper stepper(op, &f, nullptr, ens.solver.dt, ens.solver.blow_up_threshold,
                                ens.n_modes);
            NoisePathSpec s1{derive_sample_seed(ens.seed, i), ens.solver.dt,
                             static_cast<int>(std::lround(t1 / ens.solver.dt)), ens.n_modes, 0};
            sample_noise_into(s1, buffer);
            stepper.set_state(x);
            for (int j = 0; j < s1.n_steps; ++j) stepper.step(buffer.col(j));
            const Field mid = stepper.state();
            NoisePathSpec s2{derive_sample_seed(ens.seed ^ 0x8888, i), ens.solver.dt,
                             static_cast<int>(std::lround(t2 / ens.solver.dt)), ens.n_modes, 0};
            sample_noise_into(s2, buffer);
            stepper.set_state(mid);
            for (int j = 0; j < s2.n_steps; ++j) stepper.step(buffer.col(j));
            vals[static_cast<std::size_t>(i)] =
                phi(op, stepper.state(), stepper.mode_state());
        });
        const MeanStderr two = mean_and_stderr(vals);
        const double sigma = std::sqrt(one.stderr_of_mean * one.stderr_of_mean +
                                       two.stderr_of_mean * two.stderr_of_mean);
        worst_sigma = std::max(worst_sigma, std::abs(one.mean - two.mean) / sigma);
    }
    return {"lab.chapman_kolmogorov",
            "|P_{t1+t2} phi - two-stage estimate| <= 3 combined stderr", worst_sigma, 3.0,
            worst_sigma <= 3.0, false};
}

CheckResult lab_contraction(const ExperimentSetup& setup) {
    GridSpec gs{48, Boundary::Dirichlet, 16};
    const SpectralOperator op = build_operator(gs);
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    EnsembleSpec ens;
    ens.op = &op;
    ens.F = &f;
    ens.solver.dt = 1e-3;
    ens.solver.T = 0.2;
    ens.n_modes = gs.n_modes;
    ens.seed = setup.noise.seed ^ 0xcc;
    const TestFunctional phi =
        TestFunctional::bounded_composite(TestFunctional::ScalarMap::Tanh, 0, 3.0);
    const Field x = random_span_field(op, setup.noise.seed, 1400, 8, 1.0);
    const EstimatorResult r = estimate_Pt(ens, phi, x, 0.2, 400);
    const double ratio = std::abs(r.mean) / phi.sup();
    return {"lab.contraction", "|E phi(X)| <= sup |phi|", ratio, 1.0, ratio <= 1.0, true};
}

CheckResult derivative_linearity(const ExperimentSetup& setup) {
    GridSpec gs{48, Boundary::Dirichlet, 16};
    const SpectralOperator op = build_operator(gs);
    const PolynomialReaction f = PolynomialReaction::cubic(op, 1.0);
    EnsembleSpec ens;
    ens.op = &op;
    ens.F = &f;
    ens.solver.dt = 1e-3;
    ens.solver.T = 0.1;
    ens.n_modes = gs.n_modes;
    ens.seed = setup.noise.seed ^ 0xd1;
    const TestFunctional phi =
        TestFunctional::bounded_composite(TestFunctional::ScalarMap::Tanh, 0, 1.0);
    const Field x = random_span_field(op, setup.noise.seed, 1500, 8, 1.0);
    const Field h = random_span_field(op, setup.noise.seed, 1501, 8, 1.0);
    const EstimatorResult r1 = bismut_elworthy_derivative(ens, phi, x, h, 0.1, 200);
    const EstimatorResult r2 = bismut_elworthy_derivative(ens, phi, x, Field(2.0 * h), 0.1, 200);
    const double diff = std::abs(r2.mean - 2.0 * r1.mean);
    return {"lab.derivative_linearity", "estimator(2h) == 2 estimator(h) bitwise", diff, 0.0,
            diff == 0.0, true};
}

CheckResult resolvent_identity(const ExperimentSetup& setup) {
    GridSpec gs{48, Boundary::Dirichlet, 16};
    const SpectralOperator op = build_operator(gs);
    EnsembleSpec ens;
    ens.op = &op;
    ens.F = nullptr;
    ens.n_modes = gs.n_modes;
    ens.seed = setup.noise.seed ^ 0x4e5;
    const double lambda = 10.0;
    const double t_max = 2.0;
    ens.solver.dt = t_max / 2048;
    ens.solver.T = t_max;
    const int k = 0;
    // Clamp map with wide limits is the identity on the visited range, so the
    // closed form of the linear mode applies while phi stays bounded.
    TestFunctional phi = TestFunctional::bounded_composite(TestFunctional::ScalarMap::Clamp, k, 1.0);
    phi.clamp_lo = -50.0;
    phi.clamp_hi = 50.0;
    const Field x = random_span_field(op, setup.noise.seed, 1600, 8, 1.0);
    const ResolventResult r =
        estimate_resolvent(ens, phi, x, lambda, t_max, 16, setup.raw.get_int("verify.resolvent_samples", 400));
    const double mu = op.eigenvalues[k];
    const double closed = op.h_inner(x, op.modes.col(k)) / (lambda - mu);
    const double err = std::abs(r.value - closed);
    return {"lab.resolvent_identity", "|R(lambda) phi - <x,e_k>/(lambda - mu_k)| <= budget",
            err, r.error_budget, err <= r.error_budget, false};
}

CheckResult harness_replay(const ExperimentSetup& setup) {
    Config cfg = Config::from_string(
        "experiment=simulate\ngrid.n_points=32\ngrid.n_modes=16\nsolver.dt=1e-3\n"
        "solver.T=0.05\nsolver.record_stride=10\nreaction.kind=cubic\n"
        "drift.variant=running_max\ndrift.b=signed_power\ndrift.b_alpha=0.5\n");
    cfg.set("noise.seed", std::to_string(setup.noise.seed));
    auto run_once = [&]() {
        const ExperimentSetup s = build_setup(cfg);
        const NoisePath path = sample_noise(s.noise);
        const PolynomialReaction* F = s.reaction ? &*s.reaction : nullptr;
        const HolderDrift* B = s.drift ? &*s.drift : nullptr;
        const Trajectory traj =
            solve_mild(s.op, build_initial_datum(cfg, s.op), F, B, path, s.solver);
        std::ostringstream out;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            out << format_double(traj.times[i]);
            for (Eigen::Index j = 0; j < traj.states[i].size(); ++j)
                out << ',' << format_double(traj.states[i][j]);
            out << '\n';
        }
        return out.str();
    };
    const bool identical = run_once() == run_once();
    return {"harness.replay", "rerunning a config reproduces outputs byte-for-byte",
            identical ? 0.0 : 1.0, 0.0, identical, true};
}

CheckResult registry_complete(const ExperimentSetup&);

}  // namespace checks

const std::vector<RegisteredCheck>& verify_registry() {
    static const std::vector<RegisteredCheck> registry = {
        {"spectral.semigroup_law", true, checks::semigroup_law},
        {"spectral.sup_contraction", true, checks::sup_contraction},
        {"spectral.ultracontractive_fit", false, checks::ultracontractive_fit},
        {"noise.linear_exactness", true, checks::linear_exactness},
        {"noise.normality_fourth_moment", false, checks::normality},
        {"noise.shared_path_contract", true, checks::shared_path_contract},
        {"drift.max_inequality", true, checks::max_inequality},
        {"drift.equi_holder_mollified", true, checks::equi_holder},
        {"drift.reaction_dissipativity", true, checks::reaction_dissipativity},
        {"drift.boundedness", true, checks::drift_boundedness},
        {"solver.determinism", true, checks::solver_determinism},
        {"solver.convergence_order", false, checks::convergence_order},
        {"solver.first_variation_fd", true, checks::first_variation_fd},
        {"solver.kernel_square_sum", false, checks::kernel_square_sum},
        {"lab.chapman_kolmogorov", false, checks::chapman_kolmogorov},
        {"lab.contraction", true, checks::lab_contraction},
        {"lab.derivative_linearity", true, checks::derivative_linearity},
        {"lab.resolvent_identity", false, checks::resolvent_identity},
        {"harness.replay", true, checks::harness_replay},
        {"harness.registry_complete", true, checks::registry_complete},
    };
    return registry;
}

namespace checks {
CheckResult registry_complete(const ExperimentSetup&) {
    const auto& reg = verify_registry();
    std::vector<std::string> names;
    for (const auto& c : reg) names.push_back(c.name);
    std::sort(names.begin(), names.end());
    const bool unique = std::adjacent_find(names.begin(), names.end()) == names.end();
    const bool pass = unique && reg.size() == 20;
    return {"harness.registry_complete",
            "registry holds each documented module property exactly once",
            static_cast<double>(reg.size()), 20.0, pass, true};
}
}  // namespace checks

std::vector<CheckResult> run_verify_suite(const ExperimentSetup& setup) {
    std::vector<CheckResult> results;
    for (const auto& check : verify_registry()) results.push_back(check.fn(setup));
    return results;
}

std::string verify_ledger_csv(const std::vector<CheckResult>& results) {
    std::ostringstream out;
    out << "check,statement,observed,bound,kind,pass\n";
    for (const auto& r : results) {
        std::string statement = r.statement;
        for (char& ch : statement)
            if (ch == ',') ch = ';';
        out << r.name << ',' << statement << ',' << format_double(r.observed) << ','
            << format_double(r.bound) << ',' << (r.hard ? "hard" : "statistical") << ','
            << (r.pass ? "pass" : "fail") << '\n';
    }
    return out.str();
}

std::string verify_ledger_json(const std::vector<CheckResult>& results) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        arr.push_back({{"check", r.name},
                       {"statement", r.statement},
                       {"observed", r.observed},
                       {"bound", r.bound},
                       {"kind", r.hard ? "hard" : "statistical"},
                       {"pass", r.pass}});
    }
    return arr.dump(2) + "\n";
}

bool any_hard_failure(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (r.hard && !r.pass) return true;
    return false;
}

std::string uniqueness_report_json(const UniquenessReport& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["level_dts"] = report.level_dts;
    j["refinement_gaps_sup"] = report.refinement_gaps;
    j["refinement_gaps_h"] = report.refinement_gaps_h;
    j["refinement_slope"] = report.refinement_slope;
    j["refinement_strictly_decreasing"] = report.refinement_strictly_decreasing;
    j["m_list"] = report.m_list;
    j["mollification_gaps"] = report.mollification_gaps;
    j["gaps_vs_unmollified"] = report.gaps_vs_unmollified;
    j["mollification_fit_exponent"] = report.mollification_fit_exponent;
    j["mollification_decreasing"] = report.mollification_decreasing;
    return j.dump(2) + "\n";
}

}  // namespace spde
