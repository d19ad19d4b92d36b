#include "spde/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spde {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = value;
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": bad number '" + it->second + "'");
    return v;
}

int Config::get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("config key " + key + ": expected integer");
    return i;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
        throw ConfigError("config key " + key + ": bad unsigned integer '" + it->second + "'");
    return static_cast<std::uint64_t>(v);
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::istringstream in(it->second);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (errno != 0 || end == tok.c_str() || *end != '\0')
            throw ConfigError("config key " + key + ": bad list entry '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
    std::vector<double> dflt(fallback.begin(), fallback.end());
    const auto ds = get_double_list(key, dflt);
    std::vector<int> out;
    for (double d : ds) {
        const int i = static_cast<int>(d);
        if (static_cast<double>(i) != d)
            throw ConfigError("config key " + key + ": expected integer list");
        out.push_back(i);
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

ExperimentSetup build_setup(const Config& cfg) {
    ExperimentSetup s;
    s.raw = cfg;

    s.grid.n_points = cfg.get_int("grid.n_points", 128);
    const std::string bc = cfg.get_string("grid.boundary", "dirichlet");
    if (bc == "dirichlet") {
        s.grid.boundary = Boundary::Dirichlet;
    } else if (bc == "neumann") {
        s.grid.boundary = Boundary::Neumann;
    } else {
        throw ConfigError("grid.boundary must be dirichlet or neumann");
    }
    s.grid.n_modes = cfg.get_int("grid.n_modes", 64);
    try {
        s.op = build_operator(s.grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }

    s.solver.dt = cfg.get_double("solver.dt", 1e-4);
    s.solver.T = cfg.get_double("solver.T", 1.0);
    s.solver.blow_up_threshold = cfg.get_double("solver.blow_up_threshold", 1e6);
    s.solver.record_stride = cfg.get_int("solver.record_stride", 1);
    try {
        s.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }

    const std::string rk = cfg.get_string("reaction.kind", "cubic");
    if (rk == "cubic") {
        s.reaction = PolynomialReaction::cubic(s.op, cfg.get_double("reaction.alpha", 1.0));
    } else if (rk == "allen_cahn") {
        s.reaction =
            PolynomialReaction::allen_cahn(s.op, cfg.get_double("reaction.lambda", 1.0));
    } else if (rk == "linear") {
        s.reaction = PolynomialReaction::linear(s.op, cfg.get_double("reaction.rho", 0.0));
    } else if (rk == "none") {
        s.reaction.reset();
    } else {
        throw ConfigError("reaction.kind must be cubic|allen_cahn|linear|none");
    }

    const std::string dv = cfg.get_string("drift.variant", "none");
    if (dv != "none") {
        ScalarHolder b;
        const std::string bk = cfg.get_string("drift.b", "signed_power");
        const double balpha = cfg.get_double("drift.b_alpha", 0.5);
        const double bscale = cfg.get_double("drift.b_scale", 1.0);
        if (bk == "clamped_sine") {
            b = ScalarHolder::clamped_sine(bscale);
        } else if (bk == "signed_power") {
            b = ScalarHolder::signed_power(balpha, bscale);
        } else if (bk == "dist_to_integer") {
            b = ScalarHolder::dist_to_integer(balpha, bscale);
        } else if (bk == "constant") {
            b = ScalarHolder::constant(cfg.get_double("drift.b_value", 1.0));
        } else {
            throw ConfigError("drift.b must be clamped_sine|signed_power|dist_to_integer|constant");
        }

        HolderDrift base;
        const std::string gk = cfg.get_string("drift.g", "one");
        Field g;
        if (gk == "one") {
            g = Field::Constant(s.op.n_nodes(), 1.0);
        } else if (gk == "mode1") {
            g = s.op.modes.col(0);
        } else if (gk == "holder") {
            const double eps = cfg.get_double("drift.g_eps", 0.5);
            g = s.op.nodes
                    .unaryExpr([&](double xi) { return std::pow(std::abs(xi - 0.5), eps); })
                    .matrix();
        } else {
            throw ConfigError("drift.g must be one|mode1|holder");
        }
        const double xi0 = cfg.get_double("drift.xi0", 0.5);
        if (dv == "point_eval") {
            base = HolderDrift::point_eval(b, xi0, g);
        } else if (dv == "running_max") {
            base = HolderDrift::running_max(b);
        } else if (dv == "running_max_abs") {
            base = HolderDrift::running_max_abs(b);
        } else if (dv == "pointwise") {
            base = HolderDrift::pointwise(b);
        } else if (dv == "mollified") {
            const std::string iv = cfg.get_string("drift.inner", "running_max");
            HolderDrift inner;
            if (iv == "point_eval") {
                inner = HolderDrift::point_eval(b, xi0, g);
            } else if (iv == "running_max") {
                inner = HolderDrift::running_max(b);
            } else if (iv == "running_max_abs") {
                inner = HolderDrift::running_max_abs(b);
            } else if (iv == "pointwise") {
                inner = HolderDrift::pointwise(b);
            } else {
                throw ConfigError("drift.inner must name an unmollified variant");
            }
            base = HolderDrift::mollified(inner, cfg.get_int("drift.m", 8),
                                          cfg.get_int("drift.quadrature_samples", 256),
                                          cfg.get_u64("drift.moll_seed", 7));
        } else {
            throw ConfigError(
                "drift.variant must be none|point_eval|running_max|running_max_abs|pointwise|"
                "mollified");
        }
        s.drift = base;
    }

    s.noise.seed = cfg.get_u64("noise.seed", 42);
    s.noise.dt = cfg.get_double("noise.dt", s.solver.dt);
    s.noise.n_steps = cfg.get_int("noise.n_steps", s.solver.n_steps());
    s.noise.n_modes = cfg.get_int("noise.n_modes", s.grid.n_modes);
    s.noise.level = cfg.get_int("noise.level", 0);
    if (s.noise.n_modes > s.grid.n_modes)
        throw ConfigError("noise.n_modes exceeds grid.n_modes");

    s.workers = cfg.get_int("workers", 0);
    if (s.workers < 0) throw ConfigError("workers must be >= 0");
    s.out_dir = cfg.get_string("output.dir", "out");
    return s;
}

Field build_initial_datum(const Config& cfg, const SpectralOperator& op) {
    const std::string kind = cfg.get_string("x0.kind", "zero");
    if (kind == "zero") return Field::Zero(op.n_nodes());
    if (kind == "constant")
        return Field::Constant(op.n_nodes(), cfg.get_double("x0.value", 1.0));
    if (kind == "mode") {
        const int k = cfg.get_int("x0.mode", 0);
        if (k < 0 || k >= op.n_modes()) throw ConfigError("x0.mode out of range");
        return cfg.get_double("x0.value", 1.0) * op.modes.col(k);
    }
    if (kind == "gaussian_modes") {
        const int k_max = std::min(op.n_modes(), cfg.get_int("x0.modes", 8));
        const std::uint64_t seed = cfg.get_u64("x0.seed", 1);
        const double amp = cfg.get_double("x0.value", 1.0);
        Field x = Field::Zero(op.n_nodes());
        for (int k = 0; k < k_max; ++k)
            x += amp * keyed_normal(seed, kStreamField, 0, k, 0) / (1.0 + k) * op.modes.col(k);
        return x;
    }
    throw ConfigError("x0.kind must be zero|constant|mode|gaussian_modes");
}

TestFunctional build_functional(const Config& cfg, const std::string& prefix) {
    const std::string phi = cfg.get_string(prefix + ".phi", "mode");
    const int k = cfg.get_int(prefix + ".phi_mode", 0);
    const double kappa = cfg.get_double(prefix + ".phi_kappa", 1.0);
    if (phi == "mode") return TestFunctional::mode_coefficient(k);
    if (phi == "sup") return TestFunctional::sup_norm_functional();
    if (phi == "point")
        return TestFunctional::point_value(cfg.get_double(prefix + ".phi_xi", 0.5));
    if (phi == "tanh")
        return TestFunctional::bounded_composite(TestFunctional::ScalarMap::Tanh, k, kappa);
    if (phi == "sign")
        return TestFunctional::bounded_composite(TestFunctional::ScalarMap::Sign, k, kappa);
    if (phi == "clamp")
        return TestFunctional::bounded_composite(TestFunctional::ScalarMap::Clamp, k, kappa);
    throw ConfigError(prefix + ".phi must be mode|sup|point|tanh|sign|clamp");
}

}  // namespace spde
