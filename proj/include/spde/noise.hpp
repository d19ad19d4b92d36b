#pragma once

#include "spde/spectral.hpp"

#include <cstdint>
#include <vector>

namespace spde {

// ---------------------------------------------------------------------------
// Counter-based random numbers.
//
// Every variate is a pure function of a small key, so any sub-block of any
// stream can be regenerated without walking a generator state.  Streams:
//   kStreamBase     base white-noise increments,      key (seed, mode, step)
//   kStreamBridge   bridge subdivision normals,       key (seed, mode, step, level)
//   kStreamSample   per-sample seed derivation,       key (seed, index)
//   kStreamBump     mollifier quadrature draws,       key (seed, coord, sample, attempt)
//   kStreamField    random test fields,               key (seed, mode, index)
// ---------------------------------------------------------------------------

enum : std::uint64_t {
    kStreamBase = 1,
    kStreamBridge = 2,
    kStreamSample = 3,
    kStreamBump = 4,
    kStreamField = 5,
};

std::uint64_t mix64(std::uint64_t z);

/// Keyed hash: splitmix-style finalizer chained over the key words.
std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                        std::uint64_t b, std::uint64_t c);

/// Uniform in (0,1), 53-bit resolution.
double keyed_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                  std::uint64_t b, std::uint64_t c);

/// Standard normal via Box-Muller on two keyed uniforms.
double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                    std::uint64_t b, std::uint64_t c);

std::uint64_t derive_sample_seed(std::uint64_t base_seed, std::int64_t sample_index);

// ---------------------------------------------------------------------------
// White-noise paths.
// ---------------------------------------------------------------------------

/// Reproducible description of a white-noise increment matrix.
///
/// level = 0 is the base grid.  level = L is obtained from level L-1 by
/// Brownian-bridge subdivision, so all levels realize the SAME Brownian
/// motion: summing the two children of a coarse step recovers the parent
/// increment exactly.
struct NoisePathSpec {
    std::uint64_t seed = 0;
    double dt = 1e-4;   // step size at this level
    int n_steps = 0;    // steps at this level
    int n_modes = 0;
    int level = 0;

    double horizon() const { return dt * n_steps; }
};

/// Halve the step, keep the horizon and the underlying Brownian motion.
NoisePathSpec refine(const NoisePathSpec& spec);

/// Seeded matrix of mode increments; entry (k, j) ~ N(0, dt), independent.
struct NoisePath {
    NoisePathSpec spec;
    Eigen::MatrixXd increments;  // n_modes x n_steps
};

NoisePath sample_noise(const NoisePathSpec& spec);

/// Same as sample_noise but reuses the caller's buffer (Monte Carlo loops).
void sample_noise_into(const NoisePathSpec& spec, Eigen::MatrixXd& increments);

// ---------------------------------------------------------------------------
// Stochastic convolution.
// ---------------------------------------------------------------------------

/// Per-mode exact Ornstein-Uhlenbeck update for W_A:
///   a_k(t+dt) = exp(mu_k dt) a_k(t) + g_k zeta,
///   g_k^2 = (1 - exp(2 mu_k dt)) / (-2 mu_k)   (g_k^2 = dt when mu_k = 0),
/// where zeta = DeltaW_k / sqrt(dt) is the path's increment rescaled to a
/// standard normal.  That rescaling is the documented transformation tying
/// the convolution to the shared Brownian path.
struct ConvolutionPath {
    std::vector<double> times;
    std::vector<Field> states;
    std::vector<Eigen::VectorXd> mode_states;  // coefficients at the same times
    NoisePathSpec noise_provenance;
};

ConvolutionPath stochastic_convolution(const SpectralOperator& op, const NoisePath& path,
                                       int record_stride = 1);

/// OU noise amplitude g_k for one step.
Eigen::VectorXd ou_noise_amplitude(const Eigen::VectorXd& eigenvalues, double dt);

}  // namespace spde
