#include "linksim/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace linksim::engine {

BinomialCI wilson_interval(std::int64_t successes, std::int64_t trials) {
    if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be > 0");
    if (successes < 0 || successes > trials) {
        throw std::invalid_argument("wilson_interval: successes out of range");
    }
    constexpr double z = 1.959963984540054; // 95%
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2n = z * z / n;
    const double center = (p + 0.5 * z2n) / (1.0 + z2n);
    const double hw = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n) / (1.0 + z2n);
    return {p, std::max(0.0, center - hw), std::min(1.0, center + hw)};
}

EstimateWithCI mean_with_ci(std::span<const double> values) {
    const auto n = static_cast<std::int64_t>(values.size());
    if (n == 0) return {};
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(n);
    if (n == 1) return {mean, 0.0, 1};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double hw = 1.959963984540054 * sd / std::sqrt(static_cast<double>(n));
    return {mean, hw, n};
}

double batch_means_halfwidth(std::span<const double> stream, int batches) {
    const auto n = static_cast<std::int64_t>(stream.size());
    if (batches < 2 || n < 2 * batches) return 0.0;
    const std::int64_t per = n / batches;
    std::vector<double> means(batches);
    for (int b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::int64_t i = b * per; i < (b + 1) * per; ++i) s += stream[i];
        means[b] = s / static_cast<double>(per);
    }
    return mean_with_ci(means).halfwidth_95;
}

void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& body) {
    if (n <= 0) return;
    workers = std::max(1, workers);
    if (workers == 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    const int n_threads = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 on the combined value
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

EstimateWithCI run_replicated(const std::function<double(std::uint64_t)>& simulation,
                              const ExperimentPlan& plan) {
    if (plan.replications < 1) {
        throw std::invalid_argument("run_replicated: replications must be >= 1");
    }
    const int reps = plan.replications;
    std::vector<double> per_rep(reps);
    std::vector<std::string> failures(reps);
    parallel_for(reps, plan.workers, [&](std::int64_t i) {
        try {
            per_rep[i] = simulation(plan.base_seed + static_cast<std::uint64_t>(i));
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    for (int i = 0; i < reps; ++i) {
        if (!failures[i].empty()) {
            throw std::runtime_error("run_replicated: replication with seed " +
                                     std::to_string(plan.base_seed + i) +
                                     " failed: " + failures[i]);
        }
    }
    return mean_with_ci(per_rep);
}

bool SweepTable::complete() const {
    for (const auto& r : rows) {
        if (!r.has_value()) return false;
    }
    return true;
}

std::size_t SweepTable::failures() const {
    std::size_t k = 0;
    for (const auto& r : rows) {
        if (!r.has_value()) ++k;
    }
    return k;
}

SweepTable run_sweep(std::vector<std::string> columns, std::int64_t n_points,
                     const ExperimentPlan& plan,
                     const std::function<std::vector<double>(std::int64_t, std::uint64_t)>& point_eval) {
    if (n_points <= 0) throw std::invalid_argument("run_sweep: empty sweep axis");
    SweepTable table;
    table.columns = std::move(columns);
    table.rows.resize(n_points);
    table.errors.resize(n_points);
    parallel_for(n_points, plan.workers, [&](std::int64_t i) {
        try {
            auto row = point_eval(i, derive_seed(plan.base_seed, static_cast<std::uint64_t>(i)));
            if (row.empty()) throw std::runtime_error("evaluator returned an empty row");
            if (row.size() != table.columns.size()) {
                throw std::runtime_error("evaluator row width does not match columns");
            }
            table.rows[i] = std::move(row);
        } catch (const std::exception& e) {
            table.errors[i] = e.what();
        }
    });
    return table;
}

} // namespace linksim::engine
