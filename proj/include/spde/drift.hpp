#pragma once

#include "spde/noise.hpp"
#include "spde/spectral.hpp"

#include <memory>
#include <string>
#include <vector>

namespace spde {

// ---------------------------------------------------------------------------
// Reaction term: Nemytskii operator of f(xi, s) = -alpha(xi) s^{2m+1}
//                + sum_{j<=2m} c_j(xi) s^j.
// ---------------------------------------------------------------------------

struct PolynomialReaction {
    int m = 1;                     // degree parameter; leading power 2m+1
    Field alpha_coef;              // leading coefficient, required > 0 when m >= 1
    std::vector<Field> c;          // c_0 .. c_{2m} on the grid nodes
    double overflow_guard = 1e8;   // reject |x|_E beyond this before evaluating

    // Recorded dissipativity metadata (alpha0 = inf alpha; rho = sup D_s f).
    double alpha0 = 0.0;
    double rho = 0.0;

    static PolynomialReaction cubic(const SpectralOperator& op, double alpha = 1.0);
    /// f(s) = lambda s - s^3  (double-well reaction, rho = lambda).
    static PolynomialReaction allen_cahn(const SpectralOperator& op, double lambda);
    /// f(s) = rho s  (m = 0; the sign constraint on alpha applies only to m >= 1).
    static PolynomialReaction linear(const SpectralOperator& op, double rho);

    std::string digest() const;
};

Field apply_reaction(const PolynomialReaction& f, const Field& x);

/// Pointwise D_s f (order 1) or D^2_s f (order 2) evaluated along x.
Field apply_reaction_derivative(const PolynomialReaction& f, const Field& x, int order);

/// Numerical sup of D_s f over a wide s-lattice (the lattice is widened until
/// the dissipative tail provably dominates).
double sup_reaction_derivative(const PolynomialReaction& f);

// ---------------------------------------------------------------------------
// Bounded Hoelder scalar functions b : R -> R.
// ---------------------------------------------------------------------------

struct ScalarHolder {
    enum class Kind { ClampedSine, SignedPower, DistToInteger, Constant };
    Kind kind = Kind::SignedPower;
    double alpha = 0.5;   // Hoelder exponent
    double scale = 1.0;   // output amplitude
    double value = 0.0;   // Constant kind only

    double operator()(double s) const;
    double holder_constant() const;  // M with |b(s)-b(s')| <= M |s-s'|^alpha
    double holder_exponent() const;
    double sup() const;              // ||b||_inf
    std::string digest() const;

    static ScalarHolder clamped_sine(double scale = 1.0);
    static ScalarHolder signed_power(double alpha, double scale = 1.0);
    static ScalarHolder dist_to_integer(double alpha, double scale = 1.0);
    static ScalarHolder constant(double value);
};

// ---------------------------------------------------------------------------
// Hoelder drift B : E -> E.
// ---------------------------------------------------------------------------

struct HolderDrift {
    enum class Variant { PointEval, RunningMax, RunningMaxAbs, Pointwise, Mollified };

    Variant variant = Variant::RunningMax;
    ScalarHolder b;
    double xi0 = 0.5;  // PointEval only
    Field g;           // PointEval only

    // Mollified only: parameters of the smoothed copy of *inner.
    std::shared_ptr<const HolderDrift> inner;
    int moll_m = 8;
    int moll_samples = 256;
    std::uint64_t moll_seed = 0;

    // When > 0, evaluate on the Fejer mean of the first fejer_m modes instead
    // of the raw field (the projection half of the mollifier, without the
    // bump average).  Ignored by the Mollified variant.
    int fejer_m = 0;

    /// ||B||_{C_b(E,E)} bound: ||b||_inf * |g|_E for PointEval, ||b||_inf otherwise.
    double sup_bound() const;
    /// Hoelder seminorm bound from the scalar constants (|g|_E factor for PointEval).
    double holder_bound() const;
    double holder_exponent() const { return b.holder_exponent(); }
    std::string digest() const;

    static HolderDrift point_eval(ScalarHolder b, double xi0, Field g);
    static HolderDrift running_max(ScalarHolder b);
    static HolderDrift running_max_abs(ScalarHolder b);
    static HolderDrift pointwise(ScalarHolder b);
    static HolderDrift mollified(HolderDrift inner, int m, int quadrature_samples,
                                 std::uint64_t seed);
};

/// Prefix maximum over the node ordering (exactly 1-Lipschitz in sup-norm).
Field prefix_max(const Field& x);

Field apply_drift(const HolderDrift& B, const SpectralOperator& op, const Field& x);

/// Smoothed drift B_m(x) = average of B(P_hat_m(x - T_m xi)) over xi drawn from
/// a product bump density supported in |xi_i| <= 1/m^2.  Monte Carlo in the
/// m-dimensional xi; quadrature_samples must be a power of two so the average
/// of identical summands is exact.
Field mollify_drift(const HolderDrift& B, const SpectralOperator& op, int m, const Field& x,
                    int quadrature_samples, std::uint64_t seed);

/// max over pairs of |B(x)-B(x')|_E / |x-x'|_E^alpha; a lower bound of the
/// true seminorm.  Pairs closer than 1e-12 in sup-norm are skipped.
double empirical_holder_seminorm(const HolderDrift& B, const SpectralOperator& op,
                                 const std::vector<std::pair<Field, Field>>& pairs,
                                 double alpha);

/// Spatial Hoelder seminorm sup |x(xi)-x(eta)| / |xi-eta|^eps over node pairs.
double empirical_space_holder_seminorm(const SpectralOperator& op, const Field& x, double eps);

}  // namespace spde
