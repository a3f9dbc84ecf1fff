#ifndef LINKSIM_SIM_ENGINE_HPP
#define LINKSIM_SIM_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linksim/errors.hpp"

namespace linksim::engine {

struct EstimateWithCI {
    double mean = 0.0;
    double halfwidth_95 = 0.0;
    std::int64_t n = 0;
};

// Wilson score interval for a binomial proportion at 95% confidence.
// Preferred over the normal approximation for small outage rates.
struct BinomialCI {
    double p_hat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double halfwidth() const { return 0.5 * (hi - lo); }
};

BinomialCI wilson_interval(std::int64_t successes, std::int64_t trials);

// Mean and 95% halfwidth of a sample of independent values.
EstimateWithCI mean_with_ci(std::span<const double> values);

// 95% halfwidth from contiguous batch means of a single dependent stream.
double batch_means_halfwidth(std::span<const double> stream, int batches = 20);

// Runs body(0..n-1) on up to `workers` threads. Each index must write only
// its own output slot; aggregation stays with the caller, in index order.
void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& body);

// Deterministic per-task seed stream (splitmix64 mix of base and index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct ExperimentPlan {
    std::uint64_t base_seed = 1;
    int replications = 20;
    std::int64_t slots_or_packets = 50'000;
    int workers = 1;
};

// Executes `replications` independent runs with seeds base_seed + i and
// aggregates the per-replication means. The result is identical for any
// worker count.
EstimateWithCI run_replicated(const std::function<double(std::uint64_t seed)>& simulation,
                              const ExperimentPlan& plan);

struct SweepTable {
    std::vector<std::string> columns;
    // one entry per sweep point; nullopt where the evaluator failed
    std::vector<std::optional<std::vector<double>>> rows;
    std::vector<std::string> errors; // aligned with rows; empty string = ok

    bool complete() const;
    std::size_t failures() const;
};

// Evaluates every sweep point with a deterministic per-point seed derived
// from (base_seed, index). Failures are recorded and the sweep continues.
SweepTable run_sweep(std::vector<std::string> columns, std::int64_t n_points,
                     const ExperimentPlan& plan,
                     const std::function<std::vector<double>(std::int64_t index,
                                                             std::uint64_t seed)>& point_eval);

} // namespace linksim::engine

#endif
