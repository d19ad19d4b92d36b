#pragma once

#include "spde/drift.hpp"
#include "spde/estimators.hpp"
#include "spde/solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spde {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat dotted key-value configuration (grid.n_points=128).  Lines are
/// key=value; '#' starts a comment.  CLI --set overrides file keys.
class Config {
  public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    /// Canonical "key=value\n" dump in sorted key order.
    std::string canonical() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

/// Typed experiment assembly from a Config.
struct ExperimentSetup {
    GridSpec grid;
    SpectralOperator op;
    SolverConfig solver;
    std::optional<PolynomialReaction> reaction;
    std::optional<HolderDrift> drift;
    NoisePathSpec noise;
    int workers = 0;
    std::string out_dir = "out";
    Config raw;
};

ExperimentSetup build_setup(const Config& cfg);

/// Initial datum from config (x0.kind = zero|constant|mode|gaussian_modes).
Field build_initial_datum(const Config& cfg, const SpectralOperator& op);

/// Functional from config (estimator.phi = mode|sup|point|tanh|sign|clamp).
TestFunctional build_functional(const Config& cfg, const std::string& prefix);

}  // namespace spde
