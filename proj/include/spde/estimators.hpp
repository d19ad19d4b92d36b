#pragma once

#include "spde/parallel.hpp"
#include "spde/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spde {

// ---------------------------------------------------------------------------
// Test functionals phi : E -> R.
// ---------------------------------------------------------------------------

struct TestFunctional {
    enum class Variant { ModeCoefficient, SupNorm, PointValue, BoundedComposite };
    enum class ScalarMap { Tanh, Sign, Clamp };

    Variant variant = Variant::ModeCoefficient;
    int mode = 0;            // ModeCoefficient / BoundedComposite
    double xi = 0.5;         // PointValue
    ScalarMap map = ScalarMap::Tanh;
    double kappa = 1.0;      // slope of the composite map
    double clamp_lo = -1.0, clamp_hi = 1.0;

    // Hoelder metadata when known.
    std::optional<double> theta;
    std::optional<double> seminorm;

    double operator()(const SpectralOperator& op, const Field& x,
                      const Eigen::VectorXd& mode_coeffs) const;
    bool bounded() const { return variant == Variant::BoundedComposite; }
    double sup() const;  // recorded sup bound for bounded variants
    std::string digest() const;

    static TestFunctional mode_coefficient(int k);
    static TestFunctional sup_norm_functional();
    static TestFunctional point_value(double xi);
    static TestFunctional bounded_composite(ScalarMap map, int k, double kappa);
};

// ---------------------------------------------------------------------------
// Estimator results.
// ---------------------------------------------------------------------------

struct EstimatorResult {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
    bool variance_warning = false;  // stderr exceeded |mean|
};

struct FieldEstimatorResult {
    Field mean;
    Field stderr_of_mean;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
};

/// Everything a Monte Carlo run over trajectories needs.
struct EnsembleSpec {
    const SpectralOperator* op = nullptr;
    const PolynomialReaction* F = nullptr;  // may be null (pure Ornstein-Uhlenbeck)
    const HolderDrift* B = nullptr;         // may be null
    SolverConfig solver;
    int n_modes = 0;                        // modes driven by noise
    std::uint64_t seed = 0;
    int workers = 0;
};

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

/// P_t phi(x) = E phi(X(t,x)) by an unbiased sample mean over independent
/// trajectories (Q_t when a drift B is present).
EstimatorResult estimate_Pt(const EnsembleSpec& ens, const TestFunctional& phi, const Field& x,
                            double t, std::int64_t n);

/// Derivative estimator
///   <h, D(P_t phi)(x)> = (1/t) E[ phi(X(t,x)) int_0^t <D_x X(s,x) h, dw(s)> ];
/// the variation and the Ito sum ride along each sampled trajectory.
EstimatorResult bismut_elworthy_derivative(const EnsembleSpec& ens, const TestFunctional& phi,
                                           const Field& x, const Field& h, double t,
                                           std::int64_t n);

/// One trajectory sweep serving several evaluation times: returns the
/// derivative estimate at each time in `ts` (shared samples, common noise).
std::vector<EstimatorResult> bismut_elworthy_profile(const EnsembleSpec& ens,
                                                     const TestFunctional& phi, const Field& x,
                                                     const Field& h, const std::vector<double>& ts,
                                                     std::int64_t n);

struct SmoothingFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> ts;
    std::vector<double> values;   // max over the h set of |derivative|
    std::vector<double> stderrs;  // stderr at the maximizing h
};

/// Log-log fit of the derivative norm against t; refuses the fit when any
/// point's stderr exceeds 30% of its mean.
SmoothingFit smoothing_rate_fit(const EnsembleSpec& ens, const TestFunctional& phi,
                                const Field& x, const std::vector<Field>& h_set,
                                const std::vector<double>& ts, std::int64_t n);

struct ResolventResult {
    double value = 0.0;
    double error_budget = 0.0;  // sum |w_i| stderr_i + tail + node-snapping slack
    double tail_bound = 0.0;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// R(lambda) phi(x) = int_0^infty exp(-lambda t) P_t phi(x) dt via composite
/// Gauss-Legendre on [0, t_max] with one shared trajectory ensemble across
/// the quadrature nodes (nodes snapped to solver steps).
ResolventResult estimate_resolvent(const EnsembleSpec& ens, const TestFunctional& phi,
                                   const Field& x, double lambda, double t_max, int panels,
                                   std::int64_t n);

/// Componentwise semigroup on field-valued maps: E Phi(X(t,x)).
FieldEstimatorResult vectorial_Pt(const EnsembleSpec& ens, const HolderDrift& Phi, const Field& x,
                                  double t, std::int64_t n);

}  // namespace spde
