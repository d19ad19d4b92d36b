#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace spde {

/// Number of workers to use; 0 picks hardware concurrency.
int resolve_workers(int requested);

/// Runs fn(i) for i in [0, n) on a small thread pool.  Each index writes its
/// own output slot, so results are identical for every worker count.
void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn);

/// Fixed-shape pairwise summation; the reduction tree depends only on n.
double pairwise_sum(const double* data, std::int64_t n);
double pairwise_sum(const std::vector<double>& v);
Eigen::VectorXd pairwise_sum(const std::vector<Eigen::VectorXd>& v);

struct MeanStderr {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
};

/// Sample mean and stderr = sd/sqrt(n) with the pairwise reduction.
MeanStderr mean_and_stderr(const std::vector<double>& samples);

}  // namespace spde
