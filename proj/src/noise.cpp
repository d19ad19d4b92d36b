#include "spde/noise.hpp"

#include <cmath>

namespace spde {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                        std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ stream);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

double keyed_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                  std::uint64_t b, std::uint64_t c) {
    const std::uint64_t u = keyed_u64(seed, stream, a, b, c);
    return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                    std::uint64_t b, std::uint64_t c) {
    const double u1 = keyed_unit(seed, stream, a, b, 2 * c);
    const double u2 = keyed_unit(seed, stream, a, b, 2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t derive_sample_seed(std::uint64_t base_seed, std::int64_t sample_index) {
    return keyed_u64(base_seed, kStreamSample, static_cast<std::uint64_t>(sample_index), 0, 0);
}

NoisePathSpec refine(const NoisePathSpec& spec) {
    NoisePathSpec fine = spec;
    fine.dt = spec.dt / 2.0;
    fine.n_steps = spec.n_steps * 2;
    fine.level = spec.level + 1;
    return fine;
}

void sample_noise_into(const NoisePathSpec& spec, Eigen::MatrixXd& increments) {
    if (spec.n_modes < 1 || spec.n_steps < 1)
        throw std::invalid_argument("NoisePathSpec: n_modes and n_steps must be positive");
    if (!(spec.dt > 0.0)) throw std::invalid_argument("NoisePathSpec: dt must be > 0");
    if (spec.level < 0 || spec.n_steps % (1 << spec.level) != 0)
        throw std::invalid_argument("NoisePathSpec: n_steps not divisible by 2^level");

    const int base_steps = spec.n_steps >> spec.level;
    const double base_dt = spec.dt * (1 << spec.level);

    increments.resize(spec.n_modes, spec.n_steps);
    std::vector<double> cur(spec.n_steps), next(spec.n_steps);
    for (int k = 0; k < spec.n_modes; ++k) {
        const double root_base = std::sqrt(base_dt);
        for (int j = 0; j < base_steps; ++j)
            cur[j] = root_base * keyed_normal(spec.seed, kStreamBase, k, j, 0);
        int steps = base_steps;
        double dt_level = base_dt;
        for (int level = 1; level <= spec.level; ++level) {
            dt_level /= 2.0;
            // Split [t, t+2dt] into halves: children dW/2 +- xi, xi ~ N(0, dt/2... )
            const double root_half = std::sqrt(dt_level / 2.0);
            for (int j = 0; j < steps; ++j) {
                const double xi =
                    root_half * keyed_normal(spec.seed, kStreamBridge, k, j, level);
                next[2 * j] = cur[j] / 2.0 + xi;
                next[2 * j + 1] = cur[j] / 2.0 - xi;
            }
            steps *= 2;
            cur.swap(next);
        }
        for (int j = 0; j < spec.n_steps; ++j) increments(k, j) = cur[j];
    }
}

NoisePath sample_noise(const NoisePathSpec& spec) {
    NoisePath p;
    p.spec = spec;
    sample_noise_into(spec, p.increments);
    return p;
}

Eigen::VectorXd ou_noise_amplitude(const Eigen::VectorXd& eigenvalues, double dt) {
    Eigen::VectorXd g(eigenvalues.size());
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        const double mu = eigenvalues[k];
        if (mu == 0.0) {
            g[k] = std::sqrt(dt);
        } else {
            g[k] = std::sqrt((1.0 - std::exp(2.0 * mu * dt)) / (-2.0 * mu));
        }
    }
    return g;
}

ConvolutionPath stochastic_convolution(const SpectralOperator& op, const NoisePath& path,
                                       int record_stride) {
    if (op.n_modes() < path.spec.n_modes)
        throw std::invalid_argument("stochastic_convolution: operator has fewer modes than path");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");

    const int m = path.spec.n_modes;
    const double dt = path.spec.dt;
    const Eigen::VectorXd mu = op.eigenvalues.head(m);
    const Eigen::VectorXd decay = (mu.array() * dt).exp();
    // g_k / sqrt(dt): rescales the raw increment to the OU innovation.
    const Eigen::VectorXd scale = ou_noise_amplitude(mu, dt) / std::sqrt(dt);

    ConvolutionPath out;
    out.noise_provenance = path.spec;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    auto record = [&](double t) {
        out.times.push_back(t);
        out.mode_states.push_back(a);
        out.states.push_back(op.modes.leftCols(m) * a);
    };
    record(0.0);
    for (int j = 0; j < path.spec.n_steps; ++j) {
        a = (decay.array() * a.array() + scale.array() * path.increments.col(j).array())
                .matrix();
        if ((j + 1) % record_stride == 0 || j + 1 == path.spec.n_steps)
            record(dt * (j + 1));
    }
    return out;
}

}  // namespace spde
