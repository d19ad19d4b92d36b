#pragma once

#include "spde/config.hpp"
#include "spde/io.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spde {

// ---------------------------------------------------------------------------
// Pathwise-uniqueness experiments.
// ---------------------------------------------------------------------------

struct UniquenessReport {
    std::uint64_t seed = 0;

    // Refinement route: levels solve the same equation at dt / 2^L, all driven
    // by one Brownian motion through bridge subdivision.
    std::vector<double> level_dts;
    std::vector<double> refinement_gaps;    // mean over paths of sup_t |Y^L - Y^{L+1}|_E
    std::vector<double> refinement_gaps_h;  // mean over paths of sup_t |Y^L - Y^{L+1}|_H
    double refinement_slope = 0.0;          // fitted slope of log2(gap) against level
    bool refinement_strictly_decreasing = false;

    // Mollification route: same noise, drifts B_m for increasing m.
    std::vector<int> m_list;
    std::vector<double> mollification_gaps;     // sup_t |Y^(m_i) - Y^(m_{i+1})|_E
    std::vector<double> gaps_vs_unmollified;    // sup_t |Y^(m_i) - Y|_E
    double mollification_fit_exponent = 0.0;    // gap ~ c m^{-a}
    bool mollification_decreasing = false;

    std::vector<CurvePoint> curves;  // long-format divergence curves
};

UniquenessReport run_uniqueness_refinement(const ExperimentSetup& setup, int levels,
                                           int n_paths);

UniquenessReport run_uniqueness_mollification(const ExperimentSetup& setup,
                                              const std::vector<int>& m_list,
                                              int quadrature_samples);

// ---------------------------------------------------------------------------
// Kernel checks.
// ---------------------------------------------------------------------------

struct KernelCheckRow {
    double t = 0.0;
    double max_value = 0.0;
    double min_value = 0.0;
    double bound = 0.0;  // (4 pi t)^{-1/2}
    double tail = 0.0;
    bool pass = false;
};

std::vector<KernelCheckRow> run_kernel_checks(const SpectralOperator& op,
                                              const std::vector<double>& ts,
                                              double bound_tolerance);

// ---------------------------------------------------------------------------
// Verification suite.
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    std::string statement;  // human-readable inequality that was checked
    double observed = 0.0;
    double bound = 0.0;
    bool pass = false;
    bool hard = false;  // deterministic identity, vs statistical 3-sigma gate
};

struct RegisteredCheck {
    std::string name;
    bool hard;
    std::function<CheckResult(const ExperimentSetup&)> fn;
};

/// One registered invariant per module property; the registry-count test keeps
/// this list in lockstep with the documented properties.
const std::vector<RegisteredCheck>& verify_registry();

std::vector<CheckResult> run_verify_suite(const ExperimentSetup& setup);

/// Machine-readable ledger, one row per check.
std::string verify_ledger_csv(const std::vector<CheckResult>& results);
std::string verify_ledger_json(const std::vector<CheckResult>& results);

bool any_hard_failure(const std::vector<CheckResult>& results);

/// JSON summary for uniqueness reports.
std::string uniqueness_report_json(const UniquenessReport& report);

}  // namespace spde
