#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/noise.hpp"
#include "spde/solver.hpp"

#include <cmath>

using namespace spde;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("same spec gives bit-identical increments") {
    const NoisePathSpec spec{123, 1e-3, 64, 8, 0};
    const NoisePath a = sample_noise(spec);
    const NoisePath b = sample_noise(spec);
    CHECK((a.increments - b.increments).cwiseAbs().maxCoeff() == 0.0);
    const NoisePath c = sample_noise({124, 1e-3, 64, 8, 0});
    CHECK((a.increments - c.increments).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("per-mode variance and cross-mode correlation oracles") {
    const int n_steps = 100000;
    const double dt = 2e-3;
    const NoisePath p = sample_noise({2024, dt, n_steps, 3, 0});

    for (int k = 0; k < 3; ++k) {
        const auto row = p.increments.row(k);
        const double mean = row.mean();
        const double var = (row.array() - mean).square().sum() / (n_steps - 1);
        // Var estimate of N(0, dt): stderr ~ dt sqrt(2/n).
        const double se = dt * std::sqrt(2.0 / n_steps);
        CHECK(std::abs(var - dt) < 3 * se);
        CHECK(std::abs(mean) < 3 * std::sqrt(dt / n_steps));
    }
    for (int k = 0; k < 3; ++k)
        for (int l = k + 1; l < 3; ++l) {
            const double corr =
                (p.increments.row(k).array() * p.increments.row(l).array()).mean() / dt;
            CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n_steps)));
        }
}

TEST_CASE("bridge refinement preserves the Brownian motion") {
    const NoisePathSpec coarse{77, 1e-2, 32, 4, 0};
    const NoisePath c = sample_noise(coarse);
    const NoisePath f = sample_noise(refine(coarse));
    const NoisePath ff = sample_noise(refine(refine(coarse)));
    // Children sum to their parent exactly, across two levels.
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 32; ++j) {
            CHECK(f.increments(k, 2 * j) + f.increments(k, 2 * j + 1) ==
                  doctest::Approx(c.increments(k, j)).epsilon(1e-15));
            const double four = ff.increments(k, 4 * j) + ff.increments(k, 4 * j + 1) +
                                ff.increments(k, 4 * j + 2) + ff.increments(k, 4 * j + 3);
            CHECK(four == doctest::Approx(c.increments(k, j)).epsilon(1e-14));
        }
    // Refined halves have the right variance.
    const int n = 32 * 2;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += f.increments(0, j) * f.increments(0, j);
    var /= n;
    CHECK(std::abs(var - 5e-3) < 4 * 5e-3 * std::sqrt(2.0 / n));
}

TEST_CASE("stochastic convolution starts at zero and matches the OU stationary law") {
    const SpectralOperator op = build_operator({32, Boundary::Dirichlet, 16});
    const NoisePathSpec spec{5, 0.125, 8, 16, 0};
    const ConvolutionPath one = stochastic_convolution(op, sample_noise(spec), 1);
    CHECK(one.times.front() == 0.0);
    CHECK(sup_norm(one.states.front()) == 0.0);

    // Stationary variance oracle 1/(2 k^2 pi^2) at t = 1, 10^5 samples.
    const int n = 100000;
    std::vector<double> sum2(4, 0.0);
    Eigen::MatrixXd buffer;
    for (int i = 0; i < n; ++i) {
        NoisePathSpec s = spec;
        s.n_modes = 4;
        s.seed = derive_sample_seed(99, i);
        sample_noise_into(s, buffer);
        const NoisePath p{s, buffer};
        const ConvolutionPath conv = stochastic_convolution(op, p, 8);
        for (int k = 0; k < 4; ++k) sum2[k] += conv.mode_states.back()[k] * conv.mode_states.back()[k];
    }
    for (int k = 0; k < 4; ++k) {
        const int wave = k + 1;
        const double target = 1.0 / (2.0 * wave * wave * kPi * kPi);
        const double var = sum2[k] / n;
        const double se = target * std::sqrt(2.0 / n);
        CHECK(std::abs(var - target) < 3 * se);
    }
}

TEST_CASE("Ito isometry closed form for E|W_A(t)|_H^2") {
    const SpectralOperator op = build_operator({32, Boundary::Dirichlet, 8});
    const double t = 0.35, dt = 0.05;
    const int n = 40000;
    double target = 0.0;
    for (int k = 1; k <= 8; ++k)
        target += (1.0 - std::exp(-2.0 * k * k * kPi * kPi * t)) / (2.0 * k * k * kPi * kPi);

    std::vector<double> h2(n);
    Eigen::MatrixXd buffer;
    for (int i = 0; i < n; ++i) {
        NoisePathSpec s{derive_sample_seed(7, i), dt, 7, 8, 0};
        sample_noise_into(s, buffer);
        const ConvolutionPath conv = stochastic_convolution(op, {s, buffer}, 7);
        h2[i] = conv.mode_states.back().squaredNorm();
    }
    double mean = 0.0, var = 0.0;
    for (double v : h2) mean += v;
    mean /= n;
    for (double v : h2) var += (v - mean) * (v - mean);
    var /= (n - 1);
    CHECK(std::abs(mean - target) < 3 * std::sqrt(var / n));
}

TEST_CASE("normality of mode coefficients (fourth-moment ratio)") {
    const int n = 100000;
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = keyed_normal(31337, kStreamBase, 0, i, 0);
    double m2 = 0.0, m4 = 0.0;
    for (double v : z) {
        m2 += v * v;
        m4 += v * v * v * v;
    }
    m2 /= n;
    m4 /= n;
    CHECK(m4 / (m2 * m2) > 2.9);
    CHECK(m4 / (m2 * m2) < 3.1);
}

TEST_CASE("solver linear exactness against convolution plus heat flow") {
    const SpectralOperator op = build_operator({48, Boundary::Dirichlet, 24});
    const NoisePathSpec spec{11, 5e-4, 400, 24, 0};
    const NoisePath path = sample_noise(spec);
    Field x0 = Field::Zero(op.n_nodes());
    for (int k = 0; k < 6; ++k)
        x0 += keyed_normal(3, kStreamField, 0, k, 0) / (1.0 + k) * op.modes.col(k);

    SolverConfig cfg;
    cfg.dt = spec.dt;
    cfg.T = spec.dt * spec.n_steps;
    cfg.record_stride = 40;
    const Trajectory sol = solve_mild(op, x0, nullptr, nullptr, path, cfg);
    const ConvolutionPath conv = stochastic_convolution(op, path, 40);
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        const Field heat = apply_semigroup(op, sol.times[i], x0);
        CHECK(sup_norm(sol.states[i] - (conv.states[i] + heat)) < 1e-12);
    }
}

TEST_CASE("mode-count mismatch is rejected") {
    const SpectralOperator op = build_operator({16, Boundary::Dirichlet, 4});
    const NoisePath p = sample_noise({1, 1e-2, 4, 8, 0});
    CHECK_THROWS_AS(stochastic_convolution(op, p, 1), std::invalid_argument);
}
