#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/noise.hpp"
#include "spde/spectral.hpp"

#include <cmath>

using namespace spde;

namespace {
constexpr double kPi = 3.14159265358979323846;

Field random_trig_field(const SpectralOperator& op, std::uint64_t tag, int max_modes,
                        double decay = 1.0) {
    Field x = Field::Zero(op.n_nodes());
    const int m = std::min(op.n_modes(), max_modes);
    for (int k = 0; k < m; ++k)
        x += keyed_normal(7, kStreamField, tag, k, 0) / std::pow(1.0 + k, decay) *
             op.modes.col(k);
    return x;
}
}  // namespace

TEST_CASE("closed-form eigenpairs") {
    // 63 interior nodes put xi = 1/2 on the grid.
    const SpectralOperator dir = build_operator({63, Boundary::Dirichlet, 32});
    CHECK(dir.eigenvalues[0] == doctest::Approx(-kPi * kPi).epsilon(1e-14));
    CHECK(eval_at(dir, dir.modes.col(0), 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    // Dirichlet modes vanish at both ends.
    CHECK(dir.modes.col(5)[0] == doctest::Approx(0.0).epsilon(1e-12));

    const SpectralOperator neu = build_operator({64, Boundary::Neumann, 32});
    CHECK(neu.eigenvalues[0] == 0.0);
    CHECK((neu.modes.col(0).array() - 1.0).abs().maxCoeff() == 0.0);
    // Strictly decreasing eigenvalues.
    for (int k = 1; k < neu.n_modes(); ++k) CHECK(neu.eigenvalues[k] < neu.eigenvalues[k - 1]);
}

TEST_CASE("grid quadrature orthonormality oracle") {
    for (Boundary bc : {Boundary::Dirichlet, Boundary::Neumann}) {
        const SpectralOperator op = build_operator({32, bc, 8});
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                const double expected = i == j ? 1.0 : 0.0;
                CHECK(std::abs(op.h_inner(op.modes.col(i), op.modes.col(j)) - expected) < 1e-10);
            }
    }
}

TEST_CASE("build_operator rejects aliasing truncation") {
    CHECK_THROWS_AS(build_operator({16, Boundary::Dirichlet, 17}), std::invalid_argument);
    CHECK_THROWS_AS(build_operator({16, Boundary::Dirichlet, 0}), std::invalid_argument);
}

TEST_CASE("semigroup identity, single-mode decay, constant invariance") {
    const SpectralOperator dir = build_operator({48, Boundary::Dirichlet, 24});
    const Field x = random_trig_field(dir, 1, 24, 0.3);
    CHECK(sup_norm(apply_semigroup(dir, 0.0, x) - x) == 0.0);

    const double t = 0.037;
    const Field decayed = apply_semigroup(dir, t, Field(dir.modes.col(0)));
    CHECK(sup_norm(decayed - std::exp(-kPi * kPi * t) * dir.modes.col(0)) < 1e-14);

    const SpectralOperator neu = build_operator({48, Boundary::Neumann, 24});
    const Field c = Field::Constant(neu.n_nodes(), 3.25);
    CHECK(sup_norm(apply_semigroup(neu, 1.7, c) - c) < 1e-12);

    CHECK_THROWS_AS(apply_semigroup(dir, -0.1, x), std::invalid_argument);
}

TEST_CASE("semigroup law and contraction") {
    const SpectralOperator op = build_operator({64, Boundary::Dirichlet, 48});
    for (int i = 0; i < 10; ++i) {
        const Field x = random_trig_field(op, 10 + i, 48, 0.4);
        const double t1 = 0.01 + 0.03 * i, t2 = 0.21;
        const Field ab = apply_semigroup(op, t1, apply_semigroup(op, t2, x));
        CHECK(sup_norm(ab - apply_semigroup(op, t1 + t2, x)) < 1e-10);
        for (double t : {0.0, 0.004, 0.09, 1.4}) {
            CHECK(sup_norm(apply_semigroup(op, t, x)) <= sup_norm(x));
            CHECK(op.h_norm(apply_semigroup(op, t, x)) <= op.h_norm(x) * (1 + 1e-14));
        }
    }
}

TEST_CASE("ultracontractive smoothing exponent window") {
    const SpectralOperator op = build_operator({128, Boundary::Dirichlet, 96});
    // Sharp H -> E norm of e^{tA}: max_xi sqrt(sum_k e^{2 mu_k t} e_k(xi)^2).
    auto h_to_e_norm = [&](double t) {
        const Eigen::VectorXd decay = (2.0 * op.eigenvalues.array() * t).exp();
        return std::sqrt((op.modes.array().square().matrix() * decay).maxCoeff());
    };
    std::vector<double> ts, vals;
    for (double t = 1e-4; t < 1.05e-2; t *= std::sqrt(10.0)) {
        ts.push_back(t);
        vals.push_back(h_to_e_norm(t));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(ts.size());
    for (int i = 0; i < n; ++i) {
        sx += std::log(ts[i]);
        sy += std::log(vals[i]);
        sxx += std::log(ts[i]) * std::log(ts[i]);
        sxy += std::log(ts[i]) * std::log(vals[i]);
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope > -0.35);
    CHECK(slope < -0.15);

    // The fitted envelope dominates random H-normalized fields.
    const double c_fit = [&]() {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c = std::max(c, vals[i] * std::pow(ts[i], 0.25));
        return c;
    }();
    for (int i = 0; i < 20; ++i) {
        Field x = random_trig_field(op, 40 + i, 96, 0.0);
        x /= op.h_norm(x);
        for (double t : ts)
            CHECK(sup_norm(apply_semigroup(op, t, x)) <=
                  c_fit * std::pow(t, -0.25) * (1 + 1e-12));
    }
}

TEST_CASE("yosida smoothing") {
    const SpectralOperator op = build_operator({48, Boundary::Dirichlet, 24});
    // Spectral action on a single mode.
    const int k = 4;
    const double mu = op.eigenvalues[k];
    const Field jx = yosida_smooth(op, 100.0, Field(op.modes.col(k)));
    CHECK(sup_norm(jx - (100.0 / (100.0 - mu)) * op.modes.col(k)) < 1e-12);

    // Direct-evaluation oracle: |J_n x - x|_E < 1e-3 for large n on a smooth field.
    const Field x = random_trig_field(op, 60, 8, 1.0);
    CHECK(sup_norm(yosida_smooth(op, 1e6, x) - x) < 1e-3);

    // Sweep oracle: monotone decrease of the approximation error in n.
    double prev = std::numeric_limits<double>::infinity();
    for (double n : {10.0, 100.0, 1e3, 1e4, 1e5}) {
        const double err = sup_norm(yosida_smooth(op, n, x) - x);
        CHECK(err < prev);
        prev = err;
    }
    CHECK_THROWS_AS(yosida_smooth(op, 0.0, x), std::invalid_argument);
}

TEST_CASE("heat kernel: quadrature oracle, bound, symmetry, gate") {
    const SpectralOperator op = build_operator({96, Boundary::Dirichlet, 64});
    const double t = 0.02;
    const Eigen::MatrixXd K = heat_kernel(op, t);

    // Row-integrating the kernel reproduces the semigroup on a resolved field.
    const Field x = random_trig_field(op, 70, 64, 1.2);
    const Field via_kernel = K * (op.quad_weights.array() * x.array()).matrix();
    CHECK(sup_norm(via_kernel - apply_semigroup(op, t, x)) < 1e-8);

    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    for (double tb : {0.01, 0.05, 0.1, 0.5, 1.0}) {
        const Eigen::MatrixXd Kb = heat_kernel(op, tb);
        CHECK(Kb.maxCoeff() <= (1.0 + 1e-6) / std::sqrt(4.0 * kPi * tb));
        CHECK(Kb.minCoeff() >= -1e-12);
    }

    // Unconverged truncation is rejected.
    CHECK_THROWS_AS(heat_kernel(op, 1e-7), std::invalid_argument);
    const SpectralOperator tiny = build_operator({8, Boundary::Dirichlet, 4});
    CHECK_THROWS_AS(heat_kernel(tiny, 0.01), std::invalid_argument);
}

TEST_CASE("fejer projection") {
    const SpectralOperator op = build_operator({64, Boundary::Dirichlet, 64});
    // Mode 1 sits in every partial sum, so it passes through unchanged.
    const Field e1 = op.modes.col(0);
    CHECK(sup_norm(fejer_projection(op, 3, e1) - e1) < 1e-12);

    // Sweep oracle: sup-norm error decreases toward zero on a Hoelder field.
    Field x(op.n_nodes());
    for (int j = 0; j < op.n_nodes(); ++j)
        x[j] = std::sqrt(std::abs(op.nodes[j] - 0.37)) * std::sin(3.0 * op.nodes[j]);
    double prev = std::numeric_limits<double>::infinity();
    for (int m : {4, 8, 16, 32, 64}) {
        const double err = sup_norm(fejer_projection(op, m, x) - x);
        CHECK(err < prev);
        prev = err;
    }

    // Randomized bound oracle: uniform sup-norm ratio over trigonometric fields.
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const Field y = random_trig_field(op, 100 + i, 64, 0.6);
        for (int m : {2, 4, 8, 16, 32, 64})
            worst = std::max(worst, sup_norm(fejer_projection(op, m, y)) / sup_norm(y));
    }
    CHECK(worst <= 1.1);
}
