#include "spde/spectral.hpp"

#include <cmath>
#include <limits>

namespace spde {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SpectralOperator build_operator(const GridSpec& grid) {
    if (grid.n_points < 1) throw std::invalid_argument("GridSpec: n_points must be >= 1");
    if (grid.n_modes < 1) throw std::invalid_argument("GridSpec: n_modes must be >= 1");
    if (grid.n_modes > grid.n_points)
        throw std::invalid_argument("GridSpec: n_modes > n_points would alias the grid");

    const int n_nodes = grid.n_points + 2;
    const int m = grid.n_modes;
    const double h = 1.0 / (grid.n_points + 1);

    SpectralOperator op;
    op.grid = grid;
    op.nodes = Eigen::VectorXd::LinSpaced(n_nodes, 0.0, 1.0);
    op.quad_weights = Eigen::VectorXd::Constant(n_nodes, h);
    op.quad_weights[0] = h / 2.0;
    op.quad_weights[n_nodes - 1] = h / 2.0;

    op.eigenvalues.resize(m);
    op.modes.resize(n_nodes, m);
    const double root2 = std::sqrt(2.0);
    for (int i = 0; i < m; ++i) {
        // Dirichlet wavenumbers start at 1, Neumann at 0.
        const int k = (grid.boundary == Boundary::Dirichlet) ? i + 1 : i;
        op.eigenvalues[i] = -static_cast<double>(k) * k * kPi * kPi;
        for (int j = 0; j < n_nodes; ++j) {
            const double xi = op.nodes[j];
            if (grid.boundary == Boundary::Dirichlet) {
                op.modes(j, i) = root2 * std::sin(k * kPi * xi);
            } else {
                op.modes(j, i) = (k == 0) ? 1.0 : root2 * std::cos(k * kPi * xi);
            }
        }
    }
    op.analysis_map = op.modes.transpose() * op.quad_weights.asDiagonal();
    return op;
}

double eval_at(const SpectralOperator& op, const Field& x, double xi) {
    if (xi < 0.0 || xi > 1.0) throw std::invalid_argument("eval_at: xi outside [0,1]");
    const double h = op.mesh_width();
    const double pos = xi / h;
    const int j = std::min(static_cast<int>(pos), op.n_nodes() - 2);
    const double w = pos - j;
    return (1.0 - w) * x[j] + w * x[j + 1];
}

Field apply_semigroup(const SpectralOperator& op, double t, const Field& x) {
    if (t < 0.0) throw std::invalid_argument("apply_semigroup: t must be >= 0");
    Eigen::VectorXd a = op.to_modes(x);
    Eigen::VectorXd delta = ((op.eigenvalues.array() * t).exp() - 1.0) * a.array();
    return x + op.modes * delta;
}

Field yosida_smooth(const SpectralOperator& op, double n, const Field& x) {
    if (!(n > 0.0)) throw std::invalid_argument("yosida_smooth: n must be > 0");
    Eigen::VectorXd a = op.to_modes(x);
    // multiplier - 1 = mu_k / (n - mu_k)
    Eigen::VectorXd delta =
        (op.eigenvalues.array() / (n - op.eigenvalues.array())) * a.array();
    return x + op.modes * delta;
}

double heat_kernel_tail_bound(const SpectralOperator& op, double t) {
    // First dropped wavenumber.
    const int k0 = (op.grid.boundary == Boundary::Dirichlet) ? op.n_modes() + 1
                                                             : op.n_modes();
    // sum_{k >= k0} 2 exp(-k^2 pi^2 t) <= 2 exp(-k0^2 pi^2 t) / (1 - r),
    // r = exp(-(2 k0 + 1) pi^2 t) dominates successive term ratios.
    const double head = 2.0 * std::exp(-static_cast<double>(k0) * k0 * kPi * kPi * t);
    const double r = std::exp(-(2.0 * k0 + 1.0) * kPi * kPi * t);
    if (r >= 1.0) return std::numeric_limits<double>::infinity();
    return head / (1.0 - r);
}

Eigen::MatrixXd heat_kernel(const SpectralOperator& op, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be > 0");
    const double tail = heat_kernel_tail_bound(op, t);
    if (!(tail <= 1e-8))
        throw std::invalid_argument("heat_kernel: truncated series unconverged at this t");
    Eigen::VectorXd decay = (op.eigenvalues.array() * t).exp();
    return op.modes * decay.asDiagonal() * op.modes.transpose();
}

Field fejer_projection(const SpectralOperator& op, int m, const Field& x) {
    if (m < 1 || m > op.n_modes())
        throw std::invalid_argument("fejer_projection: need 1 <= m <= n_modes");
    Eigen::VectorXd a = op.to_modes(x);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(op.n_modes());
    for (int i = 0; i < m; ++i) w[i] = static_cast<double>(m - i) / m;
    return op.modes * (w.array() * a.array()).matrix();
}

}  // namespace spde
