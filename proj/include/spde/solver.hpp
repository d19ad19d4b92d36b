#pragma once

#include "spde/drift.hpp"
#include "spde/noise.hpp"
#include "spde/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spde {

/// Trajectory left the dissipative regime numerically; usually means dt is
/// too large for the initial transient.
struct BlowUpError : std::runtime_error {
    double t;
    double sup;
    BlowUpError(double t_, double sup_)
        : std::runtime_error("solver blow-up at t = " + std::to_string(t_) +
                             ", |X|_E = " + std::to_string(sup_)),
          t(t_),
          sup(sup_) {}
};

struct SolverConfig {
    double dt = 1e-4;
    double T = 1.0;
    double blow_up_threshold = 1e6;
    int record_stride = 1;

    int n_steps() const;
    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> states;                    // node values, in the resolved span
    std::vector<Eigen::VectorXd> mode_states;     // spectral coefficients at the same times
    NoisePathSpec noise_provenance;
    std::string drift_digest;
    int record_stride = 1;

    const Field& at_time(double t) const;         // exact recorded time lookup
    int index_of_time(double t) const;
};

/// Exponential-Euler step on the spectral coefficients,
///   a_{j+1} = e^{dt mu} a_j + dt phi1(dt mu) <F(X_j)+B(X_j), e_k> + g_k zeta_j,
/// with the exact Ornstein-Uhlenbeck noise amplitude g_k and zeta drawn from
/// the path increments.  Deterministic given (x0, F, B, path spec, config).
Trajectory solve_mild(const SpectralOperator& op, const Field& x0,
                      const PolynomialReaction* F, const HolderDrift* B,
                      const NoisePath& path, const SolverConfig& cfg);

/// phi1(z) = (e^z - 1)/z, the exponential-integrator weight.
double phi1(double z);

/// First variation along a recorded trajectory: linear equation
/// eta' = A eta + F'(X(t)) eta, eta(s) = h.  Requires record_stride == 1.
Trajectory first_variation(const SpectralOperator& op, const Trajectory& base,
                           const PolynomialReaction& F, const Field& h, double s);

/// Integrated second variation along the same base trajectory:
/// zeta(t) = int_0^t U_{t,s} F''(X(s)) (eta_h(s) eta_k(s)) ds, computed in one
/// forward pass together with the two first variations.
Trajectory second_variation(const SpectralOperator& op, const Trajectory& base,
                            const PolynomialReaction& F, const Field& h, const Field& k);

/// Residual of the nonlinear variation-of-constants identity
///   Y(t) = X(t) + int_0^t U_{t,s} B(Y(s)) ds
/// with X and Y driven by the same path.  The evolution kernel U_{t,s} is the
/// derivative of the unperturbed flow restarted from Y(s) at time s (its
/// multiplier follows the unperturbed re-solve), which makes the identity
/// exact up to time discretization.  The integral is evaluated at the times
/// in `check_times`, each of which must be a multiple of cfg.dt.
struct VariationOfConstantsReport {
    std::vector<double> times;
    std::vector<double> residual_sup;  // |Y - X - integral|_E at each time
    std::vector<double> residual_h;
    double max_residual_sup = 0.0;
    double max_residual_h = 0.0;
};

VariationOfConstantsReport variation_of_constants_check(
    const SpectralOperator& op, const Field& x0, const PolynomialReaction& F,
    const HolderDrift& B, const NoisePath& path, const SolverConfig& cfg,
    const std::vector<double>& check_times);

/// Ensemble statistics for the absorption / Lipschitz estimates.
struct MomentReport {
    std::vector<double> x0_sup_norms;       // |x0|_E per probe
    std::vector<double> mean_sup_over_t;    // E sup_t |X|_E per probe
    double growth_slope = 0.0;              // linear fit of the above
    double growth_intercept = 0.0;
    double collapse_ratio = 0.0;            // E|X(t,x_big)|_E / E|X(t,x_small)|_E
    double max_h_lipschitz_ratio = 0.0;     // shared-noise |X(t,x)-X(t,y)|_H / |x-y|_H
};

MomentReport moment_estimates(const SpectralOperator& op, const PolynomialReaction& F,
                              const SolverConfig& cfg, std::uint64_t seed, int n_samples,
                              const std::vector<double>& x0_levels, double collapse_big,
                              double collapse_small);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Reusable one-step engine behind solve_mild; estimators co-simulate the
/// state and its first variation with it.
class MildStepper {
  public:
    MildStepper(const SpectralOperator& op, const PolynomialReaction* F, const HolderDrift* B,
                double dt, double blow_up_threshold, int n_modes);

    void set_state(const Field& x0);
    void set_mode_state(const Eigen::VectorXd& a, double t);
    void step(const Eigen::Ref<const Eigen::VectorXd>& increments);

    double time() const { return t_; }
    const Eigen::VectorXd& mode_state() const { return a_; }
    const Field& state() const { return x_; }
    const Eigen::VectorXd& eigenvalues() const { return mu_; }

    /// Advance a linear variation with multiplier field evaluated at the
    /// current state (call before step()).
    void step_variation(Eigen::VectorXd& var_modes, const Field& multiplier) const;
    /// Same with an extra pointwise source term.
    void step_variation_with_source(Eigen::VectorXd& var_modes, const Field& multiplier,
                                    const Field& source) const;
    Field synthesize(const Eigen::VectorXd& modes_vec) const;

  private:
    const SpectralOperator* op_;
    const PolynomialReaction* F_;
    const HolderDrift* B_;
    double dt_;
    double threshold_;
    int m_;
    Eigen::VectorXd mu_, decay_, phi_weight_, noise_scale_;
    Eigen::VectorXd a_;
    Field x_;
    double t_ = 0.0;
};

}  // namespace spde
