#include "spde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spde {

int SolverConfig::n_steps() const {
    const double ratio = T / dt;
    const int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("SolverConfig: T/dt must be a positive integer");
    return n;
}

void SolverConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (!(blow_up_threshold > 0.0))
        throw std::invalid_argument("SolverConfig: blow_up_threshold must be > 0");
    if (record_stride < 1) throw std::invalid_argument("SolverConfig: record_stride >= 1");
    (void)n_steps();
}

double phi1(double z) {
    if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}

const Field& Trajectory::at_time(double t) const { return states[index_of_time(t)]; }

int Trajectory::index_of_time(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return static_cast<int>(i);
    throw std::invalid_argument("Trajectory: time " + std::to_string(t) + " not recorded");
}

MildStepper::MildStepper(const SpectralOperator& op, const PolynomialReaction* F,
                         const HolderDrift* B, double dt, double blow_up_threshold, int n_modes)
    : op_(&op), F_(F), B_(B), dt_(dt), threshold_(blow_up_threshold), m_(n_modes) {
    if (n_modes > op.n_modes())
        throw std::invalid_argument("MildStepper: more modes requested than the operator has");
    mu_ = op.eigenvalues.head(m_);
    decay_ = (mu_.array() * dt_).exp();
    phi_weight_.resize(m_);
    for (int k = 0; k < m_; ++k) phi_weight_[k] = dt_ * phi1(mu_[k] * dt_);
    noise_scale_ = ou_noise_amplitude(mu_, dt_) / std::sqrt(dt_);
    a_ = Eigen::VectorXd::Zero(m_);
    x_ = Field::Zero(op.n_nodes());
}

void MildStepper::set_state(const Field& x0) {
    a_ = op_->analysis_map.topRows(m_) * x0;
    x_ = op_->modes.leftCols(m_) * a_;
    t_ = 0.0;
}

void MildStepper::set_mode_state(const Eigen::VectorXd& a, double t) {
    a_ = a;
    x_ = op_->modes.leftCols(m_) * a_;
    t_ = t;
}

Field MildStepper::synthesize(const Eigen::VectorXd& modes_vec) const {
    return op_->modes.leftCols(m_) * modes_vec;
}

void MildStepper::step(const Eigen::Ref<const Eigen::VectorXd>& increments) {
    Eigen::VectorXd forcing;
    if (F_ || B_) {
        Field vals = F_ ? apply_reaction(*F_, x_) : Field::Zero(op_->n_nodes());
        if (B_) vals += apply_drift(*B_, *op_, x_);
        forcing = op_->analysis_map.topRows(m_) * vals;
        a_ = (decay_.array() * a_.array() + phi_weight_.array() * forcing.array() +
              noise_scale_.array() * increments.array())
                 .matrix();
    } else {
        a_ = (decay_.array() * a_.array() + noise_scale_.array() * increments.array()).matrix();
    }
    x_ = op_->modes.leftCols(m_) * a_;
    t_ += dt_;
    const double s = sup_norm(x_);
    if (!(s <= threshold_)) throw BlowUpError(t_, s);
}

void MildStepper::step_variation(Eigen::VectorXd& var_modes, const Field& multiplier) const {
    const Field var_vals = op_->modes.leftCols(m_) * var_modes;
    const Eigen::VectorXd proj =
        op_->analysis_map.topRows(m_) * (multiplier.array() * var_vals.array()).matrix();
    var_modes = (decay_.array() * var_modes.array() + phi_weight_.array() * proj.array()).matrix();
}

void MildStepper::step_variation_with_source(Eigen::VectorXd& var_modes, const Field& multiplier,
                                             const Field& source) const {
    const Field var_vals = op_->modes.leftCols(m_) * var_modes;
    const Eigen::VectorXd proj =
        op_->analysis_map.topRows(m_) *
        ((multiplier.array() * var_vals.array()).matrix() + source);
    var_modes = (decay_.array() * var_modes.array() + phi_weight_.array() * proj.array()).matrix();
}

Trajectory solve_mild(const SpectralOperator& op, const Field& x0, const PolynomialReaction* F,
                      const HolderDrift* B, const NoisePath& path, const SolverConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_steps();
    if (path.spec.n_steps < n)
        throw std::invalid_argument("solve_mild: noise path shorter than the horizon");
    if (std::abs(path.spec.dt - cfg.dt) > 1e-12 * cfg.dt)
        throw std::invalid_argument("solve_mild: noise path dt does not match solver dt");
    if (!x0.allFinite()) throw std::invalid_argument("solve_mild: non-finite initial datum");

    MildStepper stepper(op, F, B, cfg.dt, cfg.blow_up_threshold, path.spec.n_modes);
    stepper.set_state(x0);

    Trajectory traj;
    traj.noise_provenance = path.spec;
    traj.record_stride = cfg.record_stride;
    traj.drift_digest = (F ? F->digest() : std::string("none")) + ";" +
                        (B ? B->digest() : std::string("none"));
    auto record = [&]() {
        traj.times.push_back(stepper.time());
        traj.mode_states.push_back(stepper.mode_state());
        traj.states.push_back(stepper.state());
    };
    record();
    for (int j = 0; j < n; ++j) {
        stepper.step(path.increments.col(j));
        if ((j + 1) % cfg.record_stride == 0 || j + 1 == n) record();
    }
    return traj;
}

Trajectory first_variation(const SpectralOperator& op, const Trajectory& base,
                           const PolynomialReaction& F, const Field& h, double s) {
    if (base.record_stride != 1)
        throw std::invalid_argument("first_variation: base must be recorded at every step");
    const int start = base.index_of_time(s);
    const int m = static_cast<int>(base.mode_states.front().size());
    const double dt = base.times.size() > 1 ? base.times[1] - base.times[0] : 0.0;
    MildStepper stepper(op, &F, nullptr, dt, std::numeric_limits<double>::infinity(), m);

    Trajectory eta;
    eta.noise_provenance = base.noise_provenance;
    eta.drift_digest = "first_variation;" + base.drift_digest;
    Eigen::VectorXd va = op.analysis_map.topRows(m) * h;
    auto record = [&](int idx) {
        eta.times.push_back(base.times[idx]);
        eta.mode_states.push_back(va);
        eta.states.push_back(op.modes.leftCols(m) * va);
    };
    record(start);
    for (std::size_t j = start; j + 1 < base.times.size(); ++j) {
        const Field multiplier = apply_reaction_derivative(F, base.states[j], 1);
        stepper.step_variation(va, multiplier);
        if (!va.allFinite())
            throw BlowUpError(base.times[j + 1], std::numeric_limits<double>::infinity());
        record(static_cast<int>(j + 1));
    }
    return eta;
}

Trajectory second_variation(const SpectralOperator& op, const Trajectory& base,
                            const PolynomialReaction& F, const Field& h, const Field& k) {
    if (base.record_stride != 1)
        throw std::invalid_argument("second_variation: base must be recorded at every step");
    const int m = static_cast<int>(base.mode_states.front().size());
    const double dt = base.times.size() > 1 ? base.times[1] - base.times[0] : 0.0;
    MildStepper stepper(op, &F, nullptr, dt, std::numeric_limits<double>::infinity(), m);

    Eigen::VectorXd va_h = op.analysis_map.topRows(m) * h;
    Eigen::VectorXd va_k = op.analysis_map.topRows(m) * k;
    Eigen::VectorXd va_2 = Eigen::VectorXd::Zero(m);

    Trajectory zeta;
    zeta.noise_provenance = base.noise_provenance;
    zeta.drift_digest = "second_variation;" + base.drift_digest;
    auto record = [&](int idx) {
        zeta.times.push_back(base.times[idx]);
        zeta.mode_states.push_back(va_2);
        zeta.states.push_back(op.modes.leftCols(m) * va_2);
    };
    record(0);
    for (std::size_t j = 0; j + 1 < base.times.size(); ++j) {
        const Field d1 = apply_reaction_derivative(F, base.states[j], 1);
        const Field d2 = apply_reaction_derivative(F, base.states[j], 2);
        const Field eta_h = op.modes.leftCols(m) * va_h;
        const Field eta_k = op.modes.leftCols(m) * va_k;
        // Pairwise product first keeps the source bitwise symmetric in (h, k).
        const Field source = ((eta_h.array() * eta_k.array()) * d2.array()).matrix();
        stepper.step_variation_with_source(va_2, d1, source);
        stepper.step_variation(va_h, d1);
        stepper.step_variation(va_k, d1);
        if (!va_2.allFinite())
            throw BlowUpError(base.times[j + 1], std::numeric_limits<double>::infinity());
        record(static_cast<int>(j + 1));
    }
    return zeta;
}

VariationOfConstantsReport variation_of_constants_check(
    const SpectralOperator& op, const Field& x0, const PolynomialReaction& F,
    const HolderDrift& B, const NoisePath& path, const SolverConfig& cfg,
    const std::vector<double>& check_times) {
    SolverConfig fine = cfg;
    fine.record_stride = 1;
    const Trajectory Y = solve_mild(op, x0, &F, &B, path, fine);
    const Trajectory X = solve_mild(op, x0, &F, nullptr, path, fine);

    const int m = path.spec.n_modes;
    std::vector<int> check_idx;
    for (double t : check_times) check_idx.push_back(Y.index_of_time(t));
    const int last = *std::max_element(check_idx.begin(), check_idx.end());

    // v(t_r) = sum_{j < r} dt U_{t_r, s_j} B(Y(s_j)); for each s_j the kernel
    // follows the unperturbed re-solve started from Y(s_j), driven by the same
    // noise columns.
    std::vector<Eigen::VectorXd> integral(check_idx.size(), Eigen::VectorXd::Zero(m));
    MildStepper restart(op, &F, nullptr, cfg.dt, cfg.blow_up_threshold, m);
    for (int j = 0; j < last; ++j) {
        restart.set_mode_state(Y.mode_states[j], Y.times[j]);
        Eigen::VectorXd eta = op.analysis_map.topRows(m) * apply_drift(B, op, Y.states[j]);
        // Advance the pair (restarted state, kernel column) from s_j to the
        // last check time, accumulating into every integral it crosses.
        for (int i = j; i < last; ++i) {
            const Field multiplier = apply_reaction_derivative(F, restart.state(), 1);
            restart.step_variation(eta, multiplier);
            restart.step(path.increments.col(i));
            for (std::size_t r = 0; r < check_idx.size(); ++r)
                if (i + 1 == check_idx[r]) integral[r] += cfg.dt * eta;
        }
    }

    VariationOfConstantsReport report;
    for (std::size_t r = 0; r < check_idx.size(); ++r) {
        const int idx = check_idx[r];
        const Field residual = Y.states[idx] - X.states[idx] -
                               op.modes.leftCols(m) * integral[r];
        report.times.push_back(Y.times[idx]);
        report.residual_sup.push_back(sup_norm(residual));
        report.residual_h.push_back(op.h_norm(residual));
        report.max_residual_sup = std::max(report.max_residual_sup, report.residual_sup.back());
        report.max_residual_h = std::max(report.max_residual_h, report.residual_h.back());
    }
    return report;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("log_log_slope: need matching inputs of size >= 2");
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

MomentReport moment_estimates(const SpectralOperator& op, const PolynomialReaction& F,
                              const SolverConfig& cfg, std::uint64_t seed, int n_samples,
                              const std::vector<double>& x0_levels, double collapse_big,
                              double collapse_small) {
    if (n_samples < 100)
        throw std::invalid_argument("moment_estimates: need an ensemble of >= 100 trajectories");
    MomentReport report;
    NoisePathSpec base{seed, cfg.dt, cfg.n_steps(), op.n_modes(), 0};

    SolverConfig run = cfg;
    run.record_stride = std::max(1, cfg.n_steps() / 64);

    Eigen::MatrixXd buffer;
    auto mean_sup = [&](double level, bool at_final_only) {
        double acc = 0.0;
        for (int i = 0; i < n_samples; ++i) {
            NoisePathSpec s = base;
            s.seed = derive_sample_seed(seed, i);
            sample_noise_into(s, buffer);
            NoisePath p{s, buffer};
            const Field x0 = Field::Constant(op.n_nodes(), level);
            const Trajectory traj = solve_mild(op, x0, &F, nullptr, p, run);
            if (at_final_only) {
                acc += sup_norm(traj.states.back());
            } else {
                double best = 0.0;
                for (const Field& st : traj.states) best = std::max(best, sup_norm(st));
                acc += best;
            }
        }
        return acc / n_samples;
    };

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double level : x0_levels) {
        const double v = mean_sup(level, false);
        report.x0_sup_norms.push_back(std::abs(level));
        report.mean_sup_over_t.push_back(v);
        sx += std::abs(level);
        sy += v;
        sxx += level * level;
        sxy += std::abs(level) * v;
    }
    const int nl = static_cast<int>(x0_levels.size());
    report.growth_slope = (nl * sxy - sx * sy) / (nl * sxx - sx * sx);
    report.growth_intercept = (sy - report.growth_slope * sx) / nl;

    report.collapse_ratio = mean_sup(collapse_big, true) / mean_sup(collapse_small, true);

    // Shared-noise H-Lipschitz ratio on random smooth pairs.
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
        NoisePathSpec s = base;
        s.seed = derive_sample_seed(seed ^ 0xabcdef, i);
        sample_noise_into(s, buffer);
        NoisePath p{s, buffer};
        Field x = Field::Zero(op.n_nodes());
        Field y = Field::Zero(op.n_nodes());
        for (int k = 0; k < std::min(6, op.n_modes()); ++k) {
            x += keyed_normal(seed, kStreamField, i, k, 0) * op.modes.col(k);
            y += keyed_normal(seed, kStreamField, i, k, 1) * op.modes.col(k);
        }
        const Trajectory tx = solve_mild(op, x, &F, nullptr, p, run);
        const Trajectory ty = solve_mild(op, y, &F, nullptr, p, run);
        const double ratio =
            op.h_norm(tx.states.back() - ty.states.back()) / op.h_norm(x - y);
        worst = std::max(worst, ratio);
    }
    report.max_h_lipschitz_ratio = worst;
    return report;
}

}  // namespace spde
