#include "spde/parallel.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace spde {

int resolve_workers(int requested) {
    if (requested < 0) throw std::invalid_argument("workers must be >= 0");
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn) {
    workers = resolve_workers(workers);
    if (n <= 0) return;
    if (workers == 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    auto body = [&]() {
        try {
            for (;;) {
                const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n || failed.load(std::memory_order_relaxed)) break;
                fn(i);
            }
        } catch (...) {
            std::scoped_lock lock(error_mutex);
            if (!failed.exchange(true)) error = std::current_exception();
        }
    };
    const int spawn = static_cast<int>(std::min<std::int64_t>(workers, n));
    pool.reserve(spawn);
    for (int w = 0; w < spawn; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (failed) std::rethrow_exception(error);
}

double pairwise_sum(const double* data, std::int64_t n) {
    if (n == 0) return 0.0;
    if (n == 1) return data[0];
    const std::int64_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), static_cast<std::int64_t>(v.size()));
}

namespace {
Eigen::VectorXd pairwise_sum_range(const std::vector<Eigen::VectorXd>& v, std::size_t lo,
                                   std::size_t n) {
    if (n == 1) return v[lo];
    const std::size_t half = n / 2;
    return pairwise_sum_range(v, lo, half) + pairwise_sum_range(v, lo + half, n - half);
}
}  // namespace

Eigen::VectorXd pairwise_sum(const std::vector<Eigen::VectorXd>& v) {
    if (v.empty()) throw std::invalid_argument("pairwise_sum: empty input");
    return pairwise_sum_range(v, 0, v.size());
}

MeanStderr mean_and_stderr(const std::vector<double>& samples) {
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
    if (n < 2) throw std::invalid_argument("mean_and_stderr: need n >= 2");
    const double mean = pairwise_sum(samples) / static_cast<double>(n);
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace spde
