#pragma once

#include "spde/estimators.hpp"
#include "spde/solver.hpp"

#include <string>
#include <vector>

namespace spde {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Locale-independent shortest round-trip formatting ("%.17g").
std::string format_double(double v);

/// CSV rows (time, grid values), header "time,x_0,...".
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Compact binary layout.  Header: magic "SPDETRAJ", u32 version, u32 n_nodes,
/// u32 n_modes, f64 dt, f64 T, u64 seed, u32 n_records; then per record one
/// f64 time followed by n_nodes f64 values.  Native little-endian.
void write_trajectory_binary(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_binary(const std::string& path);

/// Appending CSV ledger for estimator results:
/// experiment_id,op,params_digest,mean,stderr,n,seed,wall_time.
/// wall_time is timing metadata; byte-for-byte replay comparisons strip it.
void append_result_row(const std::string& path, const std::string& experiment_id,
                       const std::string& op_name, const std::string& params_digest,
                       double mean, double stderr_of_mean, std::int64_t n, std::uint64_t seed,
                       double wall_time);

/// Plot-ready long format: one row per (curve, abscissa).
struct CurvePoint {
    std::string curve;
    double x;
    double y;
};
void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& points);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Strips the wall_time column (the final field) from a results-ledger CSV so
/// replays can be compared byte-for-byte.
std::string strip_wall_time_column(const std::string& csv);

}  // namespace spde
