#include "spde/drift.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace spde {

// ------------------------------- reaction ---------------------------------

PolynomialReaction PolynomialReaction::cubic(const SpectralOperator& op, double alpha) {
    PolynomialReaction f;
    f.m = 1;
    f.alpha_coef = Field::Constant(op.n_nodes(), alpha);
    f.c.assign(3, Field::Zero(op.n_nodes()));
    f.alpha0 = alpha;
    f.rho = 0.0;
    return f;
}

PolynomialReaction PolynomialReaction::allen_cahn(const SpectralOperator& op, double lambda) {
    PolynomialReaction f = cubic(op, 1.0);
    f.c[1] = Field::Constant(op.n_nodes(), lambda);
    f.rho = lambda;
    return f;
}

PolynomialReaction PolynomialReaction::linear(const SpectralOperator& op, double rho) {
    PolynomialReaction f;
    f.m = 0;
    f.alpha_coef = Field::Constant(op.n_nodes(), -rho);
    f.c.assign(1, Field::Zero(op.n_nodes()));
    f.alpha0 = -rho;
    f.rho = rho;
    return f;
}

std::string PolynomialReaction::digest() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "poly(m=%d,alpha0=%.17g,rho=%.17g,nc=%zu)", m, alpha0, rho,
                  c.size());
    return buf;
}

namespace {

void check_overflow(const PolynomialReaction& f, const Field& x) {
    const double s = sup_norm(x);
    if (!(s <= f.overflow_guard)) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "apply_reaction: |x|_E = %.3g beyond overflow guard %.3g",
                      s, f.overflow_guard);
        throw std::runtime_error(buf);
    }
}

}  // namespace

Field apply_reaction(const PolynomialReaction& f, const Field& x) {
    check_overflow(f, x);
    const int lead = 2 * f.m + 1;
    Field out = Field::Zero(x.size());
    // Horner over the full polynomial: -alpha s^{2m+1} + sum c_j s^j.
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double s = x[i];
        double acc = -f.alpha_coef[i];
        for (int j = lead - 1; j >= 0; --j) {
            const double cj = (j < static_cast<int>(f.c.size())) ? f.c[j][i] : 0.0;
            acc = acc * s + cj;
        }
        out[i] = acc;
    }
    return out;
}

Field apply_reaction_derivative(const PolynomialReaction& f, const Field& x, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("apply_reaction_derivative: order must be 1 or 2");
    check_overflow(f, x);
    const int lead = 2 * f.m + 1;
    Field out = Field::Zero(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double s = x[i];
        double acc = 0.0;
        if (order == 1) {
            acc = -f.alpha_coef[i] * lead;
            for (int j = lead - 1; j >= 1; --j) {
                const double cj = (j < static_cast<int>(f.c.size())) ? f.c[j][i] : 0.0;
                acc = acc * s + j * cj;
            }
        } else {
            acc = -f.alpha_coef[i] * lead * (lead - 1);
            for (int j = lead - 1; j >= 2; --j) {
                const double cj = (j < static_cast<int>(f.c.size())) ? f.c[j][i] : 0.0;
                acc = acc * s + j * (j - 1) * cj;
            }
        }
        out[i] = acc;
    }
    return out;
}

double sup_reaction_derivative(const PolynomialReaction& f) {
    // For m >= 1 the derivative tends to -inf; widen the lattice until the
    // endpoint values sit below the interior max, then take the lattice max.
    const int lead = 2 * f.m + 1;
    auto derivative_at = [&](double s, Eigen::Index node) {
        double acc = -f.alpha_coef[node] * lead;
        for (int j = lead - 1; j >= 1; --j) {
            const double cj = (j < static_cast<int>(f.c.size())) ? f.c[j][node] : 0.0;
            acc = acc * s + j * cj;
        }
        return acc;
    };
    double radius = 4.0;
    for (int iter = 0; iter < 40; ++iter) {
        const int n = 20001;
        double best = -std::numeric_limits<double>::infinity();
        double edge = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double s = -radius + 2.0 * radius * i / (n - 1);
            for (Eigen::Index node = 0; node < f.alpha_coef.size(); ++node) {
                const double d = derivative_at(s, node);
                best = std::max(best, d);
                if (i == 0 || i == n - 1) edge = std::max(edge, d);
            }
        }
        if (f.m == 0 || edge < best) return best;
        radius *= 2.0;
    }
    throw std::runtime_error("sup_reaction_derivative: lattice did not stabilize");
}

// ----------------------------- scalar Hoelder ------------------------------

ScalarHolder ScalarHolder::clamped_sine(double scale) {
    return {Kind::ClampedSine, 1.0, scale, 0.0};
}
ScalarHolder ScalarHolder::signed_power(double alpha, double scale) {
    return {Kind::SignedPower, alpha, scale, 0.0};
}
ScalarHolder ScalarHolder::dist_to_integer(double alpha, double scale) {
    return {Kind::DistToInteger, alpha, scale, 0.0};
}
ScalarHolder ScalarHolder::constant(double value) {
    return {Kind::Constant, 1.0, 1.0, value};
}

double ScalarHolder::operator()(double s) const {
    switch (kind) {
        case Kind::ClampedSine:
            return scale * std::sin(s);
        case Kind::SignedPower: {
            const double a = std::min(1.0, std::pow(std::abs(s), alpha));
            return scale * (s < 0 ? -a : a);
        }
        case Kind::DistToInteger: {
            const double d = std::abs(s - std::nearbyint(s));
            return scale * std::pow(d, alpha);
        }
        case Kind::Constant:
            return value;
    }
    return 0.0;
}

double ScalarHolder::holder_constant() const {
    switch (kind) {
        case Kind::ClampedSine:
            return scale;  // |sin|' <= 1
        case Kind::SignedPower:
            return scale * std::pow(2.0, 1.0 - alpha);
        case Kind::DistToInteger:
            return scale;  // dist(.,Z) is 1-Lipschitz and u^alpha is alpha-Hoelder with M = 1
        case Kind::Constant:
            return 0.0;
    }
    return 0.0;
}

double ScalarHolder::holder_exponent() const {
    return (kind == Kind::ClampedSine || kind == Kind::Constant) ? 1.0 : alpha;
}

double ScalarHolder::sup() const {
    switch (kind) {
        case Kind::ClampedSine:
            return scale;
        case Kind::SignedPower:
            return scale;
        case Kind::DistToInteger:
            return scale * std::pow(0.5, alpha);
        case Kind::Constant:
            return std::abs(value);
    }
    return 0.0;
}

std::string ScalarHolder::digest() const {
    const char* names[] = {"clamped_sine", "signed_power", "dist_to_integer", "constant"};
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%s(alpha=%.17g,scale=%.17g,value=%.17g)",
                  names[static_cast<int>(kind)], alpha, scale, value);
    return buf;
}

// ------------------------------ Hoelder drift ------------------------------

HolderDrift HolderDrift::point_eval(ScalarHolder b, double xi0, Field g) {
    HolderDrift d;
    d.variant = Variant::PointEval;
    d.b = b;
    d.xi0 = xi0;
    d.g = std::move(g);
    return d;
}
HolderDrift HolderDrift::running_max(ScalarHolder b) {
    HolderDrift d;
    d.variant = Variant::RunningMax;
    d.b = b;
    return d;
}
HolderDrift HolderDrift::running_max_abs(ScalarHolder b) {
    HolderDrift d;
    d.variant = Variant::RunningMaxAbs;
    d.b = b;
    return d;
}
HolderDrift HolderDrift::pointwise(ScalarHolder b) {
    HolderDrift d;
    d.variant = Variant::Pointwise;
    d.b = b;
    return d;
}
HolderDrift HolderDrift::mollified(HolderDrift inner, int m, int quadrature_samples,
                                   std::uint64_t seed) {
    if (inner.variant == Variant::Mollified)
        throw std::invalid_argument("HolderDrift: cannot mollify an already mollified drift");
    HolderDrift d;
    d.variant = Variant::Mollified;
    d.b = inner.b;
    d.inner = std::make_shared<HolderDrift>(std::move(inner));
    d.moll_m = m;
    d.moll_samples = quadrature_samples;
    d.moll_seed = seed;
    return d;
}

double HolderDrift::sup_bound() const {
    const HolderDrift& base = (variant == Variant::Mollified) ? *inner : *this;
    if (base.variant == Variant::PointEval) return base.b.sup() * sup_norm(base.g);
    return base.b.sup();
}

double HolderDrift::holder_bound() const {
    const HolderDrift& base = (variant == Variant::Mollified) ? *inner : *this;
    if (base.variant == Variant::PointEval)
        return base.b.holder_constant() * sup_norm(base.g);
    return base.b.holder_constant();
}

std::string HolderDrift::digest() const {
    const char* names[] = {"point_eval", "running_max", "running_max_abs", "pointwise",
                           "mollified"};
    char buf[256];
    if (variant == Variant::Mollified) {
        std::snprintf(buf, sizeof(buf), "mollified(%s,m=%d,nq=%d,seed=%llu)",
                      inner->digest().c_str(), moll_m, moll_samples,
                      static_cast<unsigned long long>(moll_seed));
    } else if (variant == Variant::PointEval) {
        std::snprintf(buf, sizeof(buf), "%s(b=%s,xi0=%.17g,|g|=%.17g)",
                      names[static_cast<int>(variant)], b.digest().c_str(), xi0, sup_norm(g));
    } else {
        std::snprintf(buf, sizeof(buf), "%s(b=%s)", names[static_cast<int>(variant)],
                      b.digest().c_str());
    }
    return buf;
}

Field prefix_max(const Field& x) {
    Field out(x.size());
    double running = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        running = std::max(running, x[i]);
        out[i] = running;
    }
    return out;
}

Field apply_drift(const HolderDrift& B, const SpectralOperator& op, const Field& x) {
    if (B.variant == HolderDrift::Variant::Mollified)
        return mollify_drift(*B.inner, op, B.moll_m, x, B.moll_samples, B.moll_seed);
    Field projected;
    const Field* argp = &x;
    if (B.fejer_m > 0) {
        projected = fejer_projection(op, B.fejer_m, x);
        argp = &projected;
    }
    const Field& arg = *argp;
    switch (B.variant) {
        case HolderDrift::Variant::PointEval: {
            const double v = B.b(eval_at(op, arg, B.xi0));
            return v * B.g;
        }
        case HolderDrift::Variant::RunningMax: {
            Field pm = prefix_max(arg);
            return pm.unaryExpr([&](double s) { return B.b(s); });
        }
        case HolderDrift::Variant::RunningMaxAbs: {
            Field pm = prefix_max(arg.cwiseAbs());
            return pm.unaryExpr([&](double s) { return B.b(s); });
        }
        case HolderDrift::Variant::Pointwise:
            return arg.unaryExpr([&](double s) { return B.b(s); });
        case HolderDrift::Variant::Mollified:
            break;
    }
    throw std::logic_error("apply_drift: unknown variant");
}

namespace {

/// Draw from the 1-D density proportional to exp(-1/(1-u^2)) on (-1,1) by
/// rejection; deterministic in (seed, coord, sample, attempt).
double bump_coordinate(std::uint64_t seed, std::uint64_t coord, std::uint64_t sample) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const double u =
            2.0 * keyed_unit(seed, kStreamBump, coord, sample, 2 * attempt) - 1.0;
        const double accept = std::exp(1.0 - 1.0 / (1.0 - u * u));
        if (keyed_unit(seed, kStreamBump, coord, sample, 2 * attempt + 1) < accept) return u;
    }
}

}  // namespace

Field mollify_drift(const HolderDrift& B, const SpectralOperator& op, int m, const Field& x,
                    int quadrature_samples, std::uint64_t seed) {
    if (B.variant == HolderDrift::Variant::Mollified)
        throw std::invalid_argument("mollify_drift: drift is already mollified");
    if (m < 1 || m > op.n_modes())
        throw std::invalid_argument("mollify_drift: need 1 <= m <= n_modes");
    if (quadrature_samples < 1 ||
        (quadrature_samples & (quadrature_samples - 1)) != 0)
        throw std::invalid_argument("mollify_drift: quadrature_samples must be a power of two");

    const double radius = 1.0 / (static_cast<double>(m) * m);
    // Fejer weights over the first m modes.
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) w[i] = static_cast<double>(m - i) / m;
    const Eigen::VectorXd a = op.analysis_map.topRows(m) * x;

    std::vector<Field> values(quadrature_samples);
    Eigen::VectorXd xi(m);
    for (int s = 0; s < quadrature_samples; ++s) {
        for (int i = 0; i < m; ++i)
            xi[i] = radius * bump_coordinate(seed, i, static_cast<std::uint64_t>(s));
        const Field shifted = op.modes.leftCols(m) * (w.array() * (a - xi).array()).matrix();
        values[s] = apply_drift(B, op, shifted);
    }
    // Pairwise average; exact for identical summands since n is a power of two.
    int n = quadrature_samples;
    while (n > 1) {
        for (int i = 0; i < n / 2; ++i) values[i] = values[2 * i] + values[2 * i + 1];
        n /= 2;
        for (int i = 0; i < n; ++i) values[i] /= 2.0;
    }
    return values[0];
}

double empirical_holder_seminorm(const HolderDrift& B, const SpectralOperator& op,
                                 const std::vector<std::pair<Field, Field>>& pairs,
                                 double alpha) {
    if (pairs.empty()) throw std::invalid_argument("empirical_holder_seminorm: no pairs");
    double best = 0.0;
    int used = 0;
    for (const auto& [x, y] : pairs) {
        const double dist = sup_norm(x - y);
        if (dist < 1e-12) {
            std::fprintf(stderr, "empirical_holder_seminorm: skipping degenerate pair\n");
            continue;
        }
        const double num = sup_norm(apply_drift(B, op, x) - apply_drift(B, op, y));
        best = std::max(best, num / std::pow(dist, alpha));
        ++used;
    }
    if (used == 0) throw std::invalid_argument("empirical_holder_seminorm: all pairs degenerate");
    return best;
}

double empirical_space_holder_seminorm(const SpectralOperator& op, const Field& x, double eps) {
    double best = 0.0;
    for (int i = 0; i < op.n_nodes(); ++i)
        for (int j = i + 1; j < op.n_nodes(); ++j) {
            const double d = std::abs(op.nodes[j] - op.nodes[i]);
            best = std::max(best, std::abs(x[j] - x[i]) / std::pow(d, eps));
        }
    return best;
}

}  // namespace spde
