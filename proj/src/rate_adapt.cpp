#include "linksim/rate_adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace linksim::rate_adapt {

QuantizerConfig::QuantizerConfig(std::vector<double> thresholds, double power)
    : thresholds_(std::move(thresholds)), power_(power) {
    if (thresholds_.empty()) {
        throw std::invalid_argument("QuantizerConfig: needs at least one threshold");
    }
    if (!(power_ > 0.0) || !std::isfinite(power_)) {
        throw std::invalid_argument("QuantizerConfig: power must be positive and finite");
    }
    if (!(thresholds_.front() >= 0.0)) {
        throw std::invalid_argument("QuantizerConfig: thresholds must be non-negative");
    }
    for (std::size_t i = 0; i + 1 < thresholds_.size(); ++i) {
        if (!(thresholds_[i] < thresholds_[i + 1])) {
            throw std::invalid_argument("QuantizerConfig: thresholds must be strictly increasing");
        }
    }
}

std::vector<double> QuantizerConfig::rates() const {
    std::vector<double> r(thresholds_.size());
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        r[i] = std::log1p(thresholds_[i] * power_);
    }
    return r;
}

int QuantizerConfig::region_of(double gain) const {
    // region 1 is [0, t2); region i >= 2 is [t_i, t_{i+1})
    int region = 1;
    for (std::size_t i = 1; i < thresholds_.size(); ++i) {
        if (gain >= thresholds_[i]) {
            region = static_cast<int>(i) + 1;
        } else {
            break;
        }
    }
    return region;
}

double static_throughput(const QuantizerConfig& config) {
    const auto& g = config.thresholds();
    const double P = config.power();
    const int n = config.regions();
    double eta = 0.0;
    for (int i = 0; i < n; ++i) {
        const double upper_mass = (i + 1 < n) ? std::exp(-g[i + 1]) : 0.0;
        eta += std::log1p(g[i] * P) * (std::exp(-g[i]) - upper_mass);
    }
    return eta;
}

QuantizerConfig optimize_static_quantizer(int regions, double power,
                                          const numerics::SearchGrid& grid, int workers) {
    if (regions < 1) throw std::invalid_argument("optimize_static_quantizer: regions >= 1");
    if (!(power > 0.0)) throw std::invalid_argument("optimize_static_quantizer: power > 0");

    auto objective_of = [power](std::span<const double> pt) {
        std::vector<double> th(pt.begin(), pt.end());
        return static_throughput(QuantizerConfig(th, power));
    };

    if (regions <= 3) {
        std::vector<numerics::SearchGrid> grids(regions, grid);
        numerics::GridSearchOptions opts;
        opts.workers = workers;
        opts.pre_feasible = [](std::span<const double> pt) {
            for (std::size_t i = 0; i + 1 < pt.size(); ++i) {
                if (!(pt[i] < pt[i + 1])) return false;
            }
            return pt[0] >= 0.0;
        };
        const auto best = numerics::grid_search(objective_of, grids, numerics::SearchMode::Maximize, opts);
        return QuantizerConfig(best.coords, power);
    }

    // Tensor grids blow up past a few regions; cyclic coordinate ascent with
    // the same 1-D resolution converges to the same kind of refined optimum.
    std::vector<double> th(regions);
    for (int i = 0; i < regions; ++i) {
        // equal-probability initialization under the Exp(1) marginal
        const double q = static_cast<double>(i + 1) / (regions + 1);
        th[i] = std::min(grid.upper, std::max(grid.lower, -std::log1p(-q)));
    }
    std::sort(th.begin(), th.end());
    for (int i = 1; i < regions; ++i) th[i] = std::max(th[i], th[i - 1] + 1e-9);

    double best_value = static_throughput(QuantizerConfig(th, power));
    const double span = grid.upper - grid.lower;
    const double eps_gap = 1e-12 * std::max(1.0, span);
    for (int sweep = 0; sweep < 200; ++sweep) {
        bool improved = false;
        for (int i = 0; i < regions; ++i) {
            const double lo = (i == 0) ? grid.lower : th[i - 1] + eps_gap;
            const double hi = (i + 1 < regions) ? th[i + 1] - eps_gap : grid.upper;
            if (!(lo < hi)) continue;
            numerics::SearchGrid line(lo, hi, grid.points, grid.refinement_rounds);
            auto line_obj = [&](std::span<const double> pt) {
                std::vector<double> cand = th;
                cand[i] = pt[0];
                return objective_of(cand);
            };
            const auto best = numerics::grid_search(line_obj, {line}, numerics::SearchMode::Maximize);
            if (best.value > best_value + 1e-14 * std::max(1.0, std::abs(best_value))) {
                best_value = best.value;
                th[i] = best.coords[0];
                improved = true;
            }
        }
        if (!improved) break;
    }
    return QuantizerConfig(th, power);
}

double throughput_no_csit(double power) {
    if (!(power > 0.0)) throw std::invalid_argument("throughput_no_csit: power > 0");
    const double w = numerics::lambert_w(power);
    return w * std::exp(-std::expm1(w) / power);
}

double throughput_perfect_csit(double power) {
    if (!(power > 0.0)) throw std::invalid_argument("throughput_perfect_csit: power > 0");
    return numerics::exp_integral_e1_scaled(1.0 / power);
}

RateControllerState::RateControllerState(double rate_, double delta_, FeedbackTiming timing_,
                                         double rate_floor_)
    : rate(rate_), delta(delta_), timing(timing_), rate_floor(rate_floor_) {
    if (!(rate_floor > 0.0)) {
        throw std::invalid_argument("RateControllerState: rate_floor must be > 0");
    }
    if (!(rate >= rate_floor)) {
        throw std::invalid_argument("RateControllerState: rate must be >= rate_floor");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("RateControllerState: delta must lie strictly in (0, 1)");
    }
}

bool alg1_feedback(double gain, double power, const RateControllerState& state) {
    if (!(gain >= 0.0)) throw std::domain_error("alg1_feedback: gain must be >= 0");
    return std::log1p(gain * power) > state.rate * (1.0 + state.delta);
}

RateControllerState alg1_update(RateControllerState state, bool alpha) {
    const double factor = alpha ? (1.0 + state.delta) : (1.0 - state.delta);
    state.rate = std::max(state.rate * factor, state.rate_floor);
    return state;
}

ThroughputResult simulate_alg1(const channel::FadingParams& params, double power,
                               const RateControllerState& initial, std::int64_t slots,
                               const Alg1Observer* observer) {
    if (slots < 1) throw std::invalid_argument("simulate_alg1: slots must be >= 1");
    if (!(power > 0.0)) throw std::invalid_argument("simulate_alg1: power must be > 0");

    channel::FadingChannel ch(params);
    const double delta = initial.delta;
    const double floor = initial.rate_floor;
    const double up = 1.0 + delta;
    const double down = 1.0 - delta;
    double rate = initial.rate;
    const bool same_block = (initial.timing == FeedbackTiming::SameBlock);

    double sum = 0.0;
    const int batches = 20;
    const std::int64_t per_batch = slots / batches;
    std::vector<double> batch_sums;
    batch_sums.reserve(batches);
    double cur_batch = 0.0;
    std::int64_t in_batch = 0;

    for (std::int64_t t = 0; t < slots; ++t) {
        const double g = ch.step_gain();
        const double capacity = std::log1p(g * power);
        bool alpha;
        double sent_rate;
        bool decoded;
        if (same_block) {
            alpha = capacity > rate * up;
            rate = std::max(rate * (alpha ? up : down), floor);
            sent_rate = rate;
            decoded = capacity > sent_rate;
        } else {
            sent_rate = rate;
            decoded = capacity > sent_rate;
            alpha = capacity > rate * up;
            rate = std::max(rate * (alpha ? up : down), floor);
        }
        const double reward = decoded ? sent_rate : 0.0;
        sum += reward;
        if (observer) {
            (*observer)({t, g, alpha, sent_rate, decoded});
        }
        if (per_batch > 0) {
            cur_batch += reward;
            if (++in_batch == per_batch && static_cast<std::int64_t>(batch_sums.size()) < batches) {
                batch_sums.push_back(cur_batch / static_cast<double>(per_batch));
                cur_batch = 0.0;
                in_batch = 0;
            }
        }
    }

    ThroughputResult res;
    res.slots = slots;
    res.throughput = sum / static_cast<double>(slots);
    if (static_cast<int>(batch_sums.size()) == batches) {
        res.ci_halfwidth = engine::mean_with_ci(batch_sums).halfwidth_95;
    }
    return res;
}

ThroughputResult simulate_static_quantizer(const channel::FadingParams& params,
                                           const QuantizerConfig& config, std::int64_t slots) {
    if (slots < 1) throw std::invalid_argument("simulate_static_quantizer: slots must be >= 1");
    channel::FadingChannel ch(params);
    const auto& th = config.thresholds();
    const std::vector<double> rates = config.rates();

    double sum = 0.0;
    const int batches = 20;
    const std::int64_t per_batch = slots / batches;
    std::vector<double> batch_sums;
    batch_sums.reserve(batches);
    double cur_batch = 0.0;
    std::int64_t in_batch = 0;

    for (std::int64_t t = 0; t < slots; ++t) {
        const double g = ch.step_gain();
        const int region = config.region_of(g);
        // within region i the codeword survives iff g >= threshold i; this is
        // automatic for regions >= 2 and a real test only in region 1
        const double reward = (g >= th[region - 1]) ? rates[region - 1] : 0.0;
        sum += reward;
        if (per_batch > 0) {
            cur_batch += reward;
            if (++in_batch == per_batch && static_cast<std::int64_t>(batch_sums.size()) < batches) {
                batch_sums.push_back(cur_batch / static_cast<double>(per_batch));
                cur_batch = 0.0;
                in_batch = 0;
            }
        }
    }

    ThroughputResult res;
    res.slots = slots;
    res.throughput = sum / static_cast<double>(slots);
    if (static_cast<int>(batch_sums.size()) == batches) {
        res.ci_halfwidth = engine::mean_with_ci(batch_sums).halfwidth_95;
    }
    return res;
}

Alg1TuneResult tune_alg1(const channel::FadingParams& params, double power,
                         const Alg1TuneOptions& options) {
    auto objective = [&](std::span<const double> pt) {
        const RateControllerState cand(pt[0], pt[1], options.timing, options.rate_floor);
        const channel::FadingParams search_params(params.beta, params.seed);
        return simulate_alg1(search_params, power, cand, options.search_slots).throughput;
    };
    numerics::GridSearchOptions gopts;
    gopts.workers = options.workers;
    const auto best = numerics::grid_search(objective, {options.rate_grid, options.delta_grid},
                                            numerics::SearchMode::Maximize, gopts);

    const RateControllerState winner(best.coords[0], best.coords[1], options.timing,
                                     options.rate_floor);
    engine::ExperimentPlan plan;
    plan.base_seed = params.seed + 1;
    plan.replications = options.final_replications;
    plan.slots_or_packets = options.final_slots_per_replication;
    plan.workers = options.workers;
    const auto final_est = engine::run_replicated(
        [&](std::uint64_t seed) {
            const channel::FadingParams rep_params(params.beta, seed);
            return simulate_alg1(rep_params, power, winner, plan.slots_or_packets).throughput;
        },
        plan);

    Alg1TuneResult result{winner, best.value,
                          {final_est.mean, final_est.halfwidth_95,
                           plan.slots_or_packets * options.final_replications}};
    return result;
}

} // namespace linksim::rate_adapt
