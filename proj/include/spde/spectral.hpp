#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace spde {

/// A real-valued function on [0,1], sampled on the grid nodes.
/// Spectral coefficients are obtained through a SpectralOperator.
using Field = Eigen::VectorXd;

enum class Boundary { Dirichlet, Neumann };

/// Spatial discretization of [0,1]: N interior nodes plus both endpoints,
/// uniformly spaced, and a spectral truncation of M <= N modes.
struct GridSpec {
    int n_points = 128;                      // interior grid size N
    Boundary boundary = Boundary::Dirichlet;
    int n_modes = 64;                        // spectral truncation M
};

/// Eigenpairs of the second-derivative operator on [0,1] with the given
/// boundary condition, discretized on the grid.
///
/// Dirichlet:  e_k(xi) = sqrt(2) sin(k pi xi),  mu_k = -k^2 pi^2,  k = 1..M
/// Neumann:    e_0 = 1, e_k(xi) = sqrt(2) cos(k pi xi), mu_k = -k^2 pi^2, k = 0..M-1
///
/// Under trapezoidal quadrature on the uniform grid the sampled modes are
/// orthonormal to rounding accuracy as long as M <= N.
struct SpectralOperator {
    GridSpec grid;
    Eigen::VectorXd nodes;         // N+2 nodes including endpoints
    Eigen::VectorXd quad_weights;  // trapezoidal weights
    Eigen::VectorXd eigenvalues;   // M eigenvalues, strictly decreasing
    Eigen::MatrixXd modes;         // (N+2) x M, column k = e_k on the nodes
    Eigen::MatrixXd analysis_map;  // M x (N+2), modes^T diag(quad_weights)

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_modes() const { return static_cast<int>(eigenvalues.size()); }
    double mesh_width() const { return nodes[1] - nodes[0]; }

    /// <x, e_k>_H for all modes.
    Eigen::VectorXd to_modes(const Field& x) const { return analysis_map * x; }
    Field from_modes(const Eigen::VectorXd& coeffs) const { return modes * coeffs; }

    double h_inner(const Field& x, const Field& y) const {
        return (quad_weights.array() * x.array() * y.array()).sum();
    }
    double h_norm(const Field& x) const { return std::sqrt(h_inner(x, x)); }
};

inline double sup_norm(const Field& x) { return x.cwiseAbs().maxCoeff(); }

/// Linear interpolation of a grid field at a point xi in [0,1].
double eval_at(const SpectralOperator& op, const Field& x, double xi);

SpectralOperator build_operator(const GridSpec& grid);

/// e^{tA} x.  Resolved modes decay as exp(mu_k t); the component outside the
/// truncated span is left unchanged, so t = 0 is the exact identity and the
/// semigroup law holds to rounding accuracy.
Field apply_semigroup(const SpectralOperator& op, double t, const Field& x);

/// Yosida smoothing J_n = n R(n, A): mode-wise multiplier n / (n - mu_k).
Field yosida_smooth(const SpectralOperator& op, double n, const Field& x);

/// Truncated heat kernel K_t(xi, theta) = sum_k exp(mu_k t) e_k(xi) e_k(theta)
/// on the node grid.  Rejects t so small that the spectral tail beyond the
/// truncation exceeds 1e-8.
Eigen::MatrixXd heat_kernel(const SpectralOperator& op, double t);

/// Upper bound on the sup-norm contribution of the modes dropped by the
/// truncation, by geometric domination of the Gaussian-tail series.
double heat_kernel_tail_bound(const SpectralOperator& op, double t);

/// Fejer mean of the partial spectral sums: mode i (0-based) is kept with
/// weight (m - i)/m, i < m.  Sup-norm bounded uniformly in m.
Field fejer_projection(const SpectralOperator& op, int m, const Field& x);

}  // namespace spde
