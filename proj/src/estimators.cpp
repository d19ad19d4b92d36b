#include "spde/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

namespace spde {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct ScopedTimer {
    double start = now_seconds();
    double elapsed() const { return now_seconds() - start; }
};

}  // namespace

// ------------------------------ functionals --------------------------------

TestFunctional TestFunctional::mode_coefficient(int k) {
    TestFunctional f;
    f.variant = Variant::ModeCoefficient;
    f.mode = k;
    f.theta = 1.0;
    f.seminorm = 1.0;  // Lipschitz-1 in H
    return f;
}

TestFunctional TestFunctional::sup_norm_functional() {
    TestFunctional f;
    f.variant = Variant::SupNorm;
    f.theta = 1.0;
    f.seminorm = 1.0;  // Lipschitz-1 in E
    return f;
}

TestFunctional TestFunctional::point_value(double xi) {
    TestFunctional f;
    f.variant = Variant::PointValue;
    f.xi = xi;
    f.theta = 1.0;
    f.seminorm = 1.0;
    return f;
}

TestFunctional TestFunctional::bounded_composite(ScalarMap map, int k, double kappa) {
    TestFunctional f;
    f.variant = Variant::BoundedComposite;
    f.map = map;
    f.mode = k;
    f.kappa = kappa;
    return f;
}

double TestFunctional::sup() const {
    if (variant != Variant::BoundedComposite)
        throw std::logic_error("TestFunctional::sup: unbounded variant");
    switch (map) {
        case ScalarMap::Tanh:
        case ScalarMap::Sign:
            return 1.0;
        case ScalarMap::Clamp:
            return std::max(std::abs(clamp_lo), std::abs(clamp_hi));
    }
    return 1.0;
}

double TestFunctional::operator()(const SpectralOperator& op, const Field& x,
                                  const Eigen::VectorXd& mode_coeffs) const {
    switch (variant) {
        case Variant::ModeCoefficient:
            return mode_coeffs[mode];
        case Variant::SupNorm:
            return sup_norm(x);
        case Variant::PointValue:
            return eval_at(op, x, xi);
        case Variant::BoundedComposite: {
            const double s = kappa * mode_coeffs[mode];
            switch (map) {
                case ScalarMap::Tanh:
                    return std::tanh(s);
                case ScalarMap::Sign:
                    return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
                case ScalarMap::Clamp:
                    return std::min(clamp_hi, std::max(clamp_lo, s));
            }
        }
    }
    throw std::logic_error("TestFunctional: unknown variant");
}

std::string TestFunctional::digest() const {
    const char* names[] = {"mode_coefficient", "sup_norm", "point_value", "bounded_composite"};
    const char* maps[] = {"tanh", "sign", "clamp"};
    char buf[160];
    if (variant == Variant::BoundedComposite) {
        std::snprintf(buf, sizeof(buf), "%s(%s,k=%d,kappa=%.17g)",
                      names[static_cast<int>(variant)], maps[static_cast<int>(map)], mode, kappa);
    } else {
        std::snprintf(buf, sizeof(buf), "%s(k=%d,xi=%.17g)", names[static_cast<int>(variant)],
                      mode, xi);
    }
    return buf;
}

// ------------------------------- ensembles ---------------------------------

namespace {

void check_ensemble(const EnsembleSpec& ens, double t) {
    if (!ens.op) throw std::invalid_argument("EnsembleSpec: missing operator");
    if (ens.n_modes < 1 || ens.n_modes > ens.op->n_modes())
        throw std::invalid_argument("EnsembleSpec: bad n_modes");
    if (t < 0.0) throw std::invalid_argument("estimate: t must be >= 0");
}

int steps_for(const EnsembleSpec& ens, double t) {
    const double ratio = t / ens.solver.dt;
    const int n = static_cast<int>(std::lround(ratio));
    if (std::abs(ratio - n) > 1e-6)
        throw std::invalid_argument("estimate: t must be a multiple of solver dt");
    return n;
}

/// Runs `body(sample_index, stepper, path)` over n samples in parallel, with
/// per-sample derived seeds and a reusable noise buffer per worker thread.
void for_each_sample(const EnsembleSpec& ens, int n_steps, std::int64_t n,
                     const std::function<void(std::int64_t, MildStepper&,
                                              const Eigen::MatrixXd&)>& body) {
    if (n_steps < 0) throw std::invalid_argument("ensemble: negative horizon");
    parallel_for(n, ens.workers, [&](std::int64_t i) {
        thread_local Eigen::MatrixXd buffer;
        MildStepper stepper(*ens.op, ens.F, ens.B, ens.solver.dt, ens.solver.blow_up_threshold,
                            ens.n_modes);
        NoisePathSpec spec{derive_sample_seed(ens.seed, i), ens.solver.dt,
                           std::max(1, n_steps), ens.n_modes, 0};
        sample_noise_into(spec, buffer);
        body(i, stepper, buffer);
    });
}

}  // namespace

EstimatorResult estimate_Pt(const EnsembleSpec& ens, const TestFunctional& phi, const Field& x,
                            double t, std::int64_t n) {
    check_ensemble(ens, t);
    if (n < 2) throw std::invalid_argument("estimate_Pt: need n >= 2");
    ScopedTimer timer;
    const int n_steps = steps_for(ens, t);

    std::vector<double> samples(static_cast<std::size_t>(n));
    for_each_sample(ens, n_steps, n,
                    [&](std::int64_t i, MildStepper& stepper, const Eigen::MatrixXd& noise) {
                        stepper.set_state(x);
                        for (int j = 0; j < n_steps; ++j) stepper.step(noise.col(j));
                        samples[static_cast<std::size_t>(i)] =
                            phi(*ens.op, stepper.state(), stepper.mode_state());
                    });

    const MeanStderr ms = mean_and_stderr(samples);
    EstimatorResult r;
    r.mean = ms.mean;
    r.stderr_of_mean = n_steps == 0 ? 0.0 : ms.stderr_of_mean;
    r.n_samples = n;
    r.seed = ens.seed;
    r.wall_time = timer.elapsed();
    return r;
}

std::vector<EstimatorResult> bismut_elworthy_profile(const EnsembleSpec& ens,
                                                     const TestFunctional& phi, const Field& x,
                                                     const Field& h, const std::vector<double>& ts,
                                                     std::int64_t n) {
    check_ensemble(ens, ts.empty() ? 0.0 : ts.back());
    if (n < 2) throw std::invalid_argument("bismut_elworthy: need n >= 2");
    if (sup_norm(h) == 0.0) throw std::invalid_argument("bismut_elworthy: h must be nonzero");
    ScopedTimer timer;

    std::vector<int> step_idx;
    for (std::size_t r = 0; r < ts.size(); ++r) {
        if (!(ts[r] > 0.0)) throw std::invalid_argument("bismut_elworthy: t must be > 0");
        if (r > 0 && !(ts[r] > ts[r - 1]))
            throw std::invalid_argument("bismut_elworthy: ts must be strictly increasing");
        step_idx.push_back(steps_for(ens, ts[r]));
    }
    const int last = *std::max_element(step_idx.begin(), step_idx.end());
    const PolynomialReaction* F = ens.F;

    // samples[r][i]: (1/t_r) phi(X(t_r)) * ito(t_r) for sample i.
    std::vector<std::vector<double>> samples(ts.size(),
                                             std::vector<double>(static_cast<std::size_t>(n)));
    for_each_sample(
        ens, last, n, [&](std::int64_t i, MildStepper& stepper, const Eigen::MatrixXd& noise) {
            stepper.set_state(x);
            Eigen::VectorXd eta = ens.op->analysis_map.topRows(ens.n_modes) * h;
            double ito = 0.0;
            int next_record = 0;
            for (int j = 0; j < last; ++j) {
                // Left-endpoint Ito sum: use eta before advancing anything.
                ito += eta.dot(noise.col(j));
                if (F) {
                    const Field multiplier = apply_reaction_derivative(*F, stepper.state(), 1);
                    stepper.step_variation(eta, multiplier);
                } else {
                    stepper.step_variation(eta, Field::Zero(ens.op->n_nodes()));
                }
                stepper.step(noise.col(j));
                while (next_record < static_cast<int>(step_idx.size()) &&
                       step_idx[next_record] == j + 1) {
                    const double t = ts[next_record];
                    samples[next_record][static_cast<std::size_t>(i)] =
                        phi(*ens.op, stepper.state(), stepper.mode_state()) * ito / t;
                    ++next_record;
                }
            }
        });

    std::vector<EstimatorResult> out;
    for (std::size_t r = 0; r < ts.size(); ++r) {
        const MeanStderr ms = mean_and_stderr(samples[r]);
        EstimatorResult e;
        e.mean = ms.mean;
        e.stderr_of_mean = ms.stderr_of_mean;
        e.n_samples = n;
        e.seed = ens.seed;
        e.wall_time = timer.elapsed();
        if (e.stderr_of_mean > std::abs(e.mean)) {
            e.variance_warning = true;
            std::fprintf(stderr,
                         "bismut_elworthy: stderr %.3g exceeds |mean| %.3g at t = %.3g "
                         "(variance grows like 1/t)\n",
                         e.stderr_of_mean, e.mean, ts[r]);
        }
        out.push_back(e);
    }
    return out;
}

EstimatorResult bismut_elworthy_derivative(const EnsembleSpec& ens, const TestFunctional& phi,
                                           const Field& x, const Field& h, double t,
                                           std::int64_t n) {
    return bismut_elworthy_profile(ens, phi, x, h, {t}, n).front();
}

SmoothingFit smoothing_rate_fit(const EnsembleSpec& ens, const TestFunctional& phi,
                                const Field& x, const std::vector<Field>& h_set,
                                const std::vector<double>& ts, std::int64_t n) {
    if (ts.size() < 2) throw std::invalid_argument("smoothing_rate_fit: need >= 2 times");
    if (h_set.empty()) throw std::invalid_argument("smoothing_rate_fit: empty h set");
    const double decades = std::log10(ts.back() / ts.front());
    if (!(ts.front() < 1.0) || decades < 1.0 - 1e-9)
        throw std::invalid_argument("smoothing_rate_fit: t grid must span >= 1 decade below 1");

    SmoothingFit fit;
    fit.ts = ts;
    fit.values.assign(ts.size(), 0.0);
    fit.stderrs.assign(ts.size(), 0.0);
    for (std::size_t hi = 0; hi < h_set.size(); ++hi) {
        EnsembleSpec sub = ens;
        sub.seed = keyed_u64(ens.seed, kStreamSample, 0x5e0u, hi, 0);
        const auto profile = bismut_elworthy_profile(sub, phi, x, h_set[hi], ts, n);
        for (std::size_t r = 0; r < ts.size(); ++r) {
            if (std::abs(profile[r].mean) > fit.values[r]) {
                fit.values[r] = std::abs(profile[r].mean);
                fit.stderrs[r] = profile[r].stderr_of_mean;
            }
        }
    }
    for (std::size_t r = 0; r < ts.size(); ++r) {
        if (fit.stderrs[r] > 0.3 * fit.values[r])
            throw std::runtime_error(
                "smoothing_rate_fit: point stderr exceeds 30% of its mean; refuse fit");
    }
    fit.slope = log_log_slope(fit.ts, fit.values);
    double sy = 0.0, sx = 0.0;
    for (std::size_t r = 0; r < ts.size(); ++r) {
        sy += std::log(fit.values[r]);
        sx += std::log(ts[r]);
    }
    fit.intercept = (sy - fit.slope * sx) / static_cast<double>(ts.size());
    return fit;
}

// ------------------------------- resolvent ---------------------------------

namespace {
// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGL8Nodes[8] = {-0.9602898564975363, -0.7966664774136267,
                                 -0.5255324099163290, -0.1834346424956498,
                                 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
constexpr double kGL8Weights[8] = {0.1012285362903763, 0.2223810344533745,
                                   0.3137066458778873, 0.3626837833783620,
                                   0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
}  // namespace

ResolventResult estimate_resolvent(const EnsembleSpec& ens, const TestFunctional& phi,
                                   const Field& x, double lambda, double t_max, int panels,
                                   std::int64_t n) {
    check_ensemble(ens, t_max);
    if (!(lambda > 0.0)) throw std::invalid_argument("estimate_resolvent: lambda must be > 0");
    if (panels < 1) throw std::invalid_argument("estimate_resolvent: panels >= 1");
    if (!phi.bounded())
        throw std::invalid_argument("estimate_resolvent: needs a bounded functional");

    const double tail = std::exp(-lambda * t_max) * phi.sup() / lambda;
    if (!(tail <= 1e-6))
        throw std::invalid_argument("estimate_resolvent: truncation tail too large; raise t_max");

    const int total_steps = steps_for(ens, t_max);
    // Snap each node to the solver grid; record the worst snap distance.
    std::vector<int> node_steps;
    std::vector<double> node_weights;
    double snap = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = t_max * p / panels, b = t_max * (p + 1) / panels;
        for (int q = 0; q < 8; ++q) {
            const double t = 0.5 * (a + b) + 0.5 * (b - a) * kGL8Nodes[q];
            const double w = 0.5 * (b - a) * kGL8Weights[q];
            int js = static_cast<int>(std::lround(t / ens.solver.dt));
            js = std::min(std::max(js, 1), total_steps);
            snap = std::max(snap, std::abs(t - js * ens.solver.dt));
            node_steps.push_back(js);
            node_weights.push_back(w);
        }
    }

    // One ensemble sweep; evaluate the integrand at every node time.
    std::vector<std::vector<double>> node_samples(node_steps.size(),
                                                  std::vector<double>(static_cast<std::size_t>(n)));
    std::vector<std::size_t> order(node_steps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return node_steps[a] < node_steps[b]; });

    for_each_sample(ens, total_steps, n,
                    [&](std::int64_t i, MildStepper& stepper, const Eigen::MatrixXd& noise) {
                        stepper.set_state(x);
                        std::size_t next = 0;
                        for (int j = 0; j < total_steps; ++j) {
                            stepper.step(noise.col(j));
                            while (next < order.size() && node_steps[order[next]] == j + 1) {
                                node_samples[order[next]][static_cast<std::size_t>(i)] =
                                    phi(*ens.op, stepper.state(), stepper.mode_state());
                                ++next;
                            }
                        }
                    });

    double value = 0.0;
    double stat_budget = 0.0;
    double damped_weight_mass = 0.0;
    for (std::size_t q = 0; q < node_steps.size(); ++q) {
        const MeanStderr ms = mean_and_stderr(node_samples[q]);
        const double damp = std::exp(-lambda * node_steps[q] * ens.solver.dt);
        value += node_weights[q] * damp * ms.mean;
        // Shared ensemble correlates the nodes; budget conservatively.
        stat_budget += std::abs(node_weights[q]) * damp * ms.stderr_of_mean;
        damped_weight_mass += std::abs(node_weights[q]) * damp;
    }
    // Node snapping shifts each damped integrand value by at most
    // snap * lambda * sup|phi| (the exp factor is evaluated at the snapped
    // time, so only the P_t phi factor moves).
    const double snap_budget = snap * lambda * phi.sup() * damped_weight_mass;

    ResolventResult r;
    r.value = value;
    r.tail_bound = tail;
    r.error_budget = stat_budget + tail + snap_budget;
    r.n_samples = n;
    r.seed = ens.seed;
    return r;
}

FieldEstimatorResult vectorial_Pt(const EnsembleSpec& ens, const HolderDrift& Phi, const Field& x,
                                  double t, std::int64_t n) {
    check_ensemble(ens, t);
    if (n < 2) throw std::invalid_argument("vectorial_Pt: need n >= 2");
    ScopedTimer timer;
    const int n_steps = steps_for(ens, t);

    std::vector<Eigen::VectorXd> values(static_cast<std::size_t>(n));
    for_each_sample(ens, n_steps, n,
                    [&](std::int64_t i, MildStepper& stepper, const Eigen::MatrixXd& noise) {
                        stepper.set_state(x);
                        for (int j = 0; j < n_steps; ++j) stepper.step(noise.col(j));
                        values[static_cast<std::size_t>(i)] =
                            apply_drift(Phi, *ens.op, stepper.state());
                    });

    FieldEstimatorResult r;
    r.mean = pairwise_sum(values) / static_cast<double>(n);
    std::vector<Eigen::VectorXd> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        sq[i] = (values[i] - r.mean).array().square().matrix();
    const Eigen::VectorXd var = pairwise_sum(sq) / static_cast<double>(n - 1);
    r.stderr_of_mean = (var / static_cast<double>(n)).cwiseSqrt();
    r.n_samples = n;
    r.seed = ens.seed;
    r.wall_time = timer.elapsed();
    return r;
}

}  // namespace spde
