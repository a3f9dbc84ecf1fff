#ifndef LINKSIM_RATE_ADAPT_HPP
#define LINKSIM_RATE_ADAPT_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "linksim/channel.hpp"
#include "linksim/numerics.hpp"
#include "linksim/sim_engine.hpp"

namespace linksim::rate_adapt {

// Static CSI quantizer: thresholds g1 < g2 < ... < gN (gN+1 = +inf), one
// transmit power, and the derived rate ladder r_i = log(1 + g_i * P).
// Region boundaries follow the optimal rule: region i >= 2 starts at
// threshold i, region 1 is [0, threshold_2) with its rate point inside.
class QuantizerConfig {
public:
    QuantizerConfig(std::vector<double> thresholds, double power);

    const std::vector<double>& thresholds() const { return thresholds_; }
    double power() const { return power_; }
    int regions() const { return static_cast<int>(thresholds_.size()); }
    std::vector<double> rates() const;

    // region index (1-based) the gain falls into
    int region_of(double gain) const;

private:
    std::vector<double> thresholds_;
    double power_;
};

// Expected decodable rate of the static scheme (closed form under the
// Rayleigh marginal): sum_n log(1+g_n P) (e^-g_n - e^-g_{n+1}).
double static_throughput(const QuantizerConfig& config);

// Best static quantizer with `regions` thresholds at power P. Exhaustive
// (refined) grid search for few regions; cyclic coordinate ascent on the
// same 1-D grids once the tensor grid becomes intractable.
QuantizerConfig optimize_static_quantizer(int regions, double power,
                                          const numerics::SearchGrid& grid,
                                          int workers = 1);

// Closed forms of the no-CSIT and perfect-CSIT throughputs.
double throughput_no_csit(double power);
double throughput_perfect_csit(double power);

enum class FeedbackTiming {
    SameBlock, // feedback precedes the transmission it steers (default)
    NextBlock  // feedback computed on one block applies to the next
};

struct RateControllerState {
    double rate;       // current transmission rate, npcu
    double delta;      // multiplicative adaptation coefficient, in (0,1)
    FeedbackTiming timing = FeedbackTiming::SameBlock;
    double rate_floor = 1e-3; // keeps the rate strictly positive in deep fades

    RateControllerState(double rate_, double delta_,
                        FeedbackTiming timing_ = FeedbackTiming::SameBlock,
                        double rate_floor_ = 1e-3);
};

// Receiver report: 1 iff log(1+gP) > R(1+delta), strict.
bool alg1_feedback(double gain, double power, const RateControllerState& state);

// Transmitter update: R <- R(1+delta) on reward, R(1-delta) on punishment,
// clamped to the rate floor.
RateControllerState alg1_update(RateControllerState state, bool alpha);

struct ThroughputResult {
    double throughput = 0.0;    // npcu
    double ci_halfwidth = 0.0;  // 95%, Monte Carlo runs only
    std::int64_t slots = 0;
};

struct Alg1SlotRecord {
    std::int64_t slot;
    double gain;
    bool alpha;
    double rate;  // rate the codeword was sent at
    bool decoded;
};
using Alg1Observer = std::function<void(const Alg1SlotRecord&)>;

// One reinforcement rate-adaptation trace over a fresh fading stream.
// Outage slots contribute zero. The halfwidth comes from contiguous batch
// means; replication-level CIs are the sim-engine's job.
ThroughputResult simulate_alg1(const channel::FadingParams& params, double power,
                               const RateControllerState& initial, std::int64_t slots,
                               const Alg1Observer* observer = nullptr);

// Monte Carlo counterpart of static_throughput over the same fading stream
// abstraction (iid slots when beta = 0).
ThroughputResult simulate_static_quantizer(const channel::FadingParams& params,
                                           const QuantizerConfig& config,
                                           std::int64_t slots);

struct Alg1TuneOptions {
    numerics::SearchGrid rate_grid{0.1, 6.0, 60, 2};
    numerics::SearchGrid delta_grid{0.01, 0.5, 50, 2};
    std::int64_t search_slots = 100'000;
    int final_replications = 20;
    std::int64_t final_slots_per_replication = 50'000;
    FeedbackTiming timing = FeedbackTiming::SameBlock;
    double rate_floor = 1e-3;
    int workers = 1;
};

struct Alg1TuneResult {
    RateControllerState initial;
    double search_throughput = 0.0;   // common-random-number search value
    ThroughputResult final_result;    // fresh replicated estimate
};

// Exhaustive search over (initial rate, delta) maximizing the simulated
// throughput. All candidates share the seed params.seed (common random
// numbers); the winner is re-estimated on fresh replications with seeds
// params.seed + 1 ... params.seed + replications.
Alg1TuneResult tune_alg1(const channel::FadingParams& params, double power,
                         const Alg1TuneOptions& options = {});

} // namespace linksim::rate_adapt

#endif
