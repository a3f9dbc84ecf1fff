#include "linksim/harq_power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace linksim::harq {

HarqConfig::HarqConfig(double rate_, int max_rounds_, double outage_target_)
    : rate(rate_), max_rounds(max_rounds_), outage_target(outage_target_) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("HarqConfig: rate must be positive and finite");
    }
    if (max_rounds < 1) throw std::invalid_argument("HarqConfig: max_rounds must be >= 1");
    if (!(outage_target > 0.0 && outage_target < 1.0)) {
        throw std::invalid_argument("HarqConfig: outage_target must lie in (0, 1)");
    }
}

double HarqConfig::snr_threshold() const { return std::expm1(rate); }

StaticPowerPolicy::StaticPowerPolicy(std::vector<double> powers_) : powers(std::move(powers_)) {
    if (powers.empty()) throw std::invalid_argument("StaticPowerPolicy: needs at least one round");
    for (double p : powers) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("StaticPowerPolicy: powers must be positive and finite");
        }
    }
}

StaticPowerPolicy StaticPowerPolicy::uniform(double power, int rounds) {
    return StaticPowerPolicy(std::vector<double>(static_cast<std::size_t>(rounds), power));
}

PowerControllerState::PowerControllerState(double power_, std::vector<double> d_,
                                           std::vector<double> d_up_, double power_floor_,
                                           double power_cap_)
    : power(power_), d(std::move(d_)), d_up(std::move(d_up_)),
      power_floor(power_floor_), power_cap(power_cap_) {
    if (!(power_floor > 0.0) || !(power_cap > power_floor)) {
        throw std::invalid_argument("PowerControllerState: requires 0 < power_floor < power_cap");
    }
    if (!(power >= power_floor && power <= power_cap)) {
        throw std::invalid_argument("PowerControllerState: power outside [floor, cap]");
    }
    if (d.empty() || d.size() != d_up.size()) {
        throw std::invalid_argument("PowerControllerState: d and d_up must have equal size >= 1");
    }
    for (double v : d) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw std::invalid_argument("PowerControllerState: each d_m must lie in [0, 1)");
        }
    }
    for (double v : d_up) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("PowerControllerState: each d'_m must be >= 0 and finite");
        }
    }
}

bool packet_decodes_at(int round, double accumulated_snr_prev, double accumulated_snr_now,
                       double rate) {
    if (round < 1) throw std::invalid_argument("packet_decodes_at: round must be >= 1");
    if (!(accumulated_snr_prev <= accumulated_snr_now)) {
        throw std::invalid_argument("packet_decodes_at: MRC sum cannot decrease");
    }
    return accumulated_snr_now >= std::expm1(rate);
}

namespace {

struct StaticDriver {
    const double* powers;
    double power(int m) const { return powers[m - 1]; }
    void decoded(int) {}
    void failed(int) {}
};

struct ControllerDriver {
    double p;
    const double* d;
    const double* d_up;
    double lo, hi;

    double power(int) const { return p; }
    void decoded(int m) { p = std::min(hi, std::max(lo, p * (1.0 - d[m - 1]))); }
    void failed(int m) { p = std::min(hi, std::max(lo, p * (1.0 + d_up[m - 1]))); }
};

template <typename Driver>
HarqSimResult run_rtd_chain(channel::FadingChannel& ch, const HarqConfig& cfg, Driver& drv,
                            std::int64_t packets, const HarqObserver* observer,
                            ChannelMode mode) {
    if (packets < 1) throw std::invalid_argument("HARQ simulation: packets must be >= 1");
    const bool fresh_window = (mode == ChannelMode::PerPacketStationary);
    const double theta = cfg.snr_threshold();
    const int max_rounds = cfg.max_rounds;

    HarqSimResult res;
    res.packets = packets;
    res.stop_counts.assign(max_rounds, 0);

    std::int64_t outages = 0;
    double ratio_sum = 0.0;

    const int batches = 20;
    const std::int64_t per_batch = packets / batches;
    std::vector<double> batch_means;
    batch_means.reserve(batches);
    double cur_batch = 0.0;
    std::int64_t in_batch = 0;

    for (std::int64_t p = 0; p < packets; ++p) {
        double snr = 0.0;
        double energy = 0.0;
        bool ok = false;
        int stop_round = max_rounds;
        for (int m = 1; m <= max_rounds; ++m) {
            const double g =
                (fresh_window && m == 1) ? ch.restart_stationary().g : ch.step_gain();
            const double pw = drv.power(m);
            snr += g * pw;
            energy += pw;
            ok = snr >= theta;
            if (observer) {
                (*observer)({p, m, g, pw, snr, ok, !ok && m == max_rounds});
            }
            if (ok) {
                drv.decoded(m);
                stop_round = m;
                break;
            }
            drv.failed(m);
        }
        if (!ok) ++outages;
        ++res.stop_counts[stop_round - 1];
        const double ratio = energy / stop_round;
        ratio_sum += ratio;
        if (per_batch > 0) {
            cur_batch += ratio;
            if (++in_batch == per_batch && static_cast<std::int64_t>(batch_means.size()) < batches) {
                batch_means.push_back(cur_batch / static_cast<double>(per_batch));
                cur_batch = 0.0;
                in_batch = 0;
            }
        }
    }

    res.avg_power = ratio_sum / static_cast<double>(packets);
    if (static_cast<int>(batch_means.size()) == batches) {
        res.avg_power_ci = engine::mean_with_ci(batch_means).halfwidth_95;
    }
    res.outage_prob = static_cast<double>(outages) / static_cast<double>(packets);
    res.outage_ci = engine::wilson_interval(outages, packets);
    res.stop_histogram.resize(res.stop_counts.size());
    for (std::size_t m = 0; m < res.stop_counts.size(); ++m) {
        res.stop_histogram[m] =
            static_cast<double>(res.stop_counts[m]) / static_cast<double>(packets);
    }
    return res;
}

} // namespace

HarqSimResult simulate_harq_static(const channel::FadingParams& params, const HarqConfig& config,
                                   const StaticPowerPolicy& policy, std::int64_t packets,
                                   const HarqObserver* observer, ChannelMode mode) {
    if (static_cast<int>(policy.powers.size()) != config.max_rounds) {
        throw std::invalid_argument("simulate_harq_static: policy size must equal max_rounds");
    }
    channel::FadingChannel ch(params);
    StaticDriver drv{policy.powers.data()};
    return run_rtd_chain(ch, config, drv, packets, observer, mode);
}

PowerControllerState alg2_on_decode(PowerControllerState state, int round) {
    if (round < 1 || round > static_cast<int>(state.d.size())) {
        throw std::invalid_argument("alg2_on_decode: round out of range");
    }
    state.power = std::min(state.power_cap,
                           std::max(state.power_floor, state.power * (1.0 - state.d[round - 1])));
    return state;
}

PowerControllerState alg2_on_failure(PowerControllerState state, int round) {
    if (round < 1 || round > static_cast<int>(state.d_up.size())) {
        throw std::invalid_argument("alg2_on_failure: round out of range");
    }
    state.power = std::min(state.power_cap, std::max(state.power_floor,
                                                     state.power * (1.0 + state.d_up[round - 1])));
    return state;
}

HarqSimResult simulate_alg2(const channel::FadingParams& params, const HarqConfig& config,
                            const PowerControllerState& initial, std::int64_t packets,
                            const HarqObserver* observer, PowerControllerState* final_state) {
    if (static_cast<int>(initial.d.size()) != config.max_rounds) {
        throw std::invalid_argument("simulate_alg2: controller size must equal max_rounds");
    }
    channel::FadingChannel ch(params);
    ControllerDriver drv{initial.power, initial.d.data(), initial.d_up.data(),
                         initial.power_floor, initial.power_cap};
    HarqSimResult res = run_rtd_chain(ch, config, drv, packets, observer, ChannelMode::Continuous);
    if (final_state) {
        PowerControllerState out = initial;
        out.power = drv.p;
        *final_state = out;
    }
    return res;
}

namespace {

double outage_m2_quadrature(double beta, double rate, double p1, double p2, double tol) {
    const double theta = std::expm1(rate);
    numerics::QuadratureOptions opts;
    opts.tol = tol;
    auto f = [beta](double x, double y) { return channel::joint_gain_pdf(x, y, beta); };
    // The integration rectangle can be enormous when a power is tiny, while
    // the density lives near the origin; clip the ranges to where the mass
    // is (marginal e^-x, conditional ~ exp(-(sqrt y - beta sqrt x)^2 / c))
    // so the adaptive rule cannot mistake an empty first pass for zero.
    const double c = 1.0 - beta * beta;
    const double x_cap = 65.0;
    auto y_cap = [beta, c](double x) {
        const double s = beta * std::sqrt(x) + std::sqrt(65.0 * c);
        return s * s + 5.0;
    };
    return numerics::quadrature_2d(
        f, 0.0, std::min(theta / p1, x_cap), [](double) { return 0.0; },
        [theta, p1, p2, y_cap](double x) {
            return std::min((theta - x * p1) / p2, y_cap(x));
        },
        opts);
}

} // namespace

double outage_probability(const channel::FadingParams& params, const HarqConfig& config,
                          const StaticPowerPolicy& policy, std::int64_t mc_packets) {
    if (static_cast<int>(policy.powers.size()) != config.max_rounds) {
        throw std::invalid_argument("outage_probability: policy size must equal max_rounds");
    }
    const double theta = config.snr_threshold();
    if (config.max_rounds == 1) {
        return channel::gain_cdf(theta / policy.powers[0]);
    }
    if (config.max_rounds == 2) {
        if (params.beta == 1.0) {
            // fully-correlated limit: g1 = g2, single exponential variable
            return channel::gain_cdf(theta / (policy.powers[0] + policy.powers[1]));
        }
        return outage_m2_quadrature(params.beta, config.rate, policy.powers[0],
                                    policy.powers[1], 1e-11);
    }
    const channel::FadingParams mc_params(params.beta, engine::derive_seed(params.seed, 0xA70));
    return simulate_harq_static(mc_params, config, policy, mc_packets).outage_prob;
}

std::vector<double> stop_probabilities(const channel::FadingParams& params,
                                       const HarqConfig& config, const StaticPowerPolicy& policy,
                                       std::int64_t mc_packets) {
    if (static_cast<int>(policy.powers.size()) != config.max_rounds) {
        throw std::invalid_argument("stop_probabilities: policy size must equal max_rounds");
    }
    const double theta = config.snr_threshold();
    if (config.max_rounds == 1) return {1.0};
    if (config.max_rounds == 2) {
        // A_1: decoded in round 1 (marginal is Exp(1) at any beta).
        // A_2: everything else -- the chain stops at round 2 decoded or not.
        const double a1 = std::exp(-theta / policy.powers[0]);
        return {a1, 1.0 - a1};
    }
    const channel::FadingParams mc_params(params.beta, engine::derive_seed(params.seed, 0xA71));
    return simulate_harq_static(mc_params, config, policy, mc_packets).stop_histogram;
}

double static_avg_power(const StaticPowerPolicy& policy, const std::vector<double>& stop_probs) {
    if (policy.powers.size() != stop_probs.size()) {
        throw std::invalid_argument("static_avg_power: size mismatch");
    }
    double cumulative = 0.0;
    double avg = 0.0;
    for (std::size_t m = 0; m < policy.powers.size(); ++m) {
        cumulative += policy.powers[m];
        avg += cumulative / static_cast<double>(m + 1) * stop_probs[m];
    }
    return avg;
}

double solve_uniform_power(const channel::FadingParams& params, const HarqConfig& config) {
    const double eps = config.outage_target;
    const double theta = config.snr_threshold();
    if (config.max_rounds == 1) {
        return theta / (-std::log1p(-eps));
    }
    auto outage_at = [&](double p) {
        return outage_probability(params, config,
                                  StaticPowerPolicy::uniform(p, config.max_rounds));
    };
    double lo = theta * 1e-3;
    double hi = theta;
    while (outage_at(lo) < eps && lo > 1e-12) lo *= 0.1;
    int grow = 0;
    while (outage_at(hi) > eps) {
        hi *= 4.0;
        if (++grow > 40) {
            throw InfeasibleError("solve_uniform_power: target outage unreachable");
        }
    }
    auto f = [&](double p) { return outage_at(p) - eps; };
    return numerics::bisect(f, lo, hi, 1e-9 * hi);
}

namespace {

// P_last achieving outage == eps for the given leading powers by bisection
// in dB; returns NaN when the equality cannot bind inside [floor, cap].
double solve_last_round_power(const channel::FadingParams& params, const HarqConfig& config,
                              std::vector<double> powers_head, double eps) {
    const double db_lo = -90.0;
    const double db_hi = 90.0;
    auto outage_at_db = [&](double db) {
        std::vector<double> full = powers_head;
        full.push_back(numerics::db_to_linear(db));
        return outage_probability(params, config, StaticPowerPolicy(full)) - eps;
    };
    const double at_lo = outage_at_db(db_lo);
    const double at_hi = outage_at_db(db_hi);
    if (!(at_lo > 0.0) || !(at_hi < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double db = numerics::bisect(outage_at_db, db_lo, db_hi, 1e-7);
    return numerics::db_to_linear(db);
}

} // namespace

StaticPowerPolicy optimize_static_powers(const channel::FadingParams& params,
                                         const HarqConfig& config,
                                         const numerics::SearchGrid& p1_grid, int workers) {
    const double eps = config.outage_target;
    const int M = config.max_rounds;
    if (M == 1) {
        return StaticPowerPolicy({config.snr_threshold() / (-std::log1p(-eps))});
    }

    // grid coordinates are powers in dB for rounds 1..M-1
    auto policy_for = [&](std::span<const double> pt) -> StaticPowerPolicy {
        std::vector<double> head(pt.size());
        for (std::size_t i = 0; i < pt.size(); ++i) head[i] = numerics::db_to_linear(pt[i]);
        const double last = solve_last_round_power(params, config, head, eps);
        if (!std::isfinite(last)) {
            throw InfeasibleError("optimize_static_powers: constraint cannot bind");
        }
        head.push_back(last);
        return StaticPowerPolicy(head);
    };
    auto objective = [&](std::span<const double> pt) {
        double avg = std::numeric_limits<double>::quiet_NaN();
        try {
            const StaticPowerPolicy pol = policy_for(pt);
            avg = static_avg_power(pol, stop_probabilities(params, config, pol));
        } catch (const InfeasibleError&) {
        }
        return avg;
    };

    std::vector<numerics::SearchGrid> grids(static_cast<std::size_t>(M - 1), p1_grid);
    numerics::GridSearchOptions opts;
    opts.workers = workers;
    const auto best = numerics::grid_search(objective, grids, numerics::SearchMode::Minimize, opts);
    return policy_for(best.coords);
}

namespace {

struct CandidateEval {
    double avg_power = std::numeric_limits<double>::infinity();
    double outage = 1.0;
    double outage_hw = 0.0;
    bool evaluated = false;
};

struct CandidateSpace {
    std::vector<double> p_db_axis;
    std::vector<double> d_values;
    std::vector<double> d_up_values;
    int rounds;

    std::int64_t size() const {
        std::int64_t n = static_cast<std::int64_t>(p_db_axis.size());
        for (int k = 0; k < rounds; ++k) n *= static_cast<std::int64_t>(d_values.size());
        for (int k = 0; k < rounds; ++k) n *= static_cast<std::int64_t>(d_up_values.size());
        return n;
    }

    PowerControllerState decode(std::int64_t idx, double floor, double cap) const {
        const auto nd = static_cast<std::int64_t>(d_values.size());
        const auto nu = static_cast<std::int64_t>(d_up_values.size());
        std::vector<double> dup(rounds);
        std::vector<double> d(rounds);
        for (int k = rounds - 1; k >= 0; --k) {
            dup[k] = d_up_values[idx % nu];
            idx /= nu;
        }
        for (int k = rounds - 1; k >= 0; --k) {
            d[k] = d_values[idx % nd];
            idx /= nd;
        }
        const double p = numerics::db_to_linear(p_db_axis[idx]);
        return PowerControllerState(p, std::move(d), std::move(dup), floor, cap);
    }
};

} // namespace

Alg2TuneResult tune_alg2(const channel::FadingParams& params, const HarqConfig& config,
                         const Alg2TuneOptions& options) {
    const double eps = config.outage_target;
    const int M = config.max_rounds;
    if (options.d_values.empty() || options.d_up_values.empty()) {
        throw std::invalid_argument("tune_alg2: empty coefficient grid");
    }

    const double uniform_power = solve_uniform_power(params, config);
    const double uniform_db = numerics::linear_to_db(uniform_power);

    numerics::SearchGrid p_grid = options.p_initial_db_grid;
    if (options.p_grid_is_default) {
        p_grid = numerics::SearchGrid(uniform_db - 10.0, uniform_db + 10.0, 25, 1);
    }

    CandidateSpace space;
    space.rounds = M;
    space.d_values = options.d_values;
    std::sort(space.d_values.begin(), space.d_values.end());
    space.d_up_values = options.d_up_values;
    std::sort(space.d_up_values.begin(), space.d_up_values.end());
    space.p_db_axis.resize(p_grid.points);
    for (int i = 0; i < p_grid.points; ++i) {
        space.p_db_axis[i] =
            p_grid.lower + (p_grid.upper - p_grid.lower) * i / (p_grid.points - 1);
    }

    const std::int64_t total = space.size();
    auto evaluate = [&](const PowerControllerState& ctl, std::int64_t packets) {
        const channel::FadingParams crn(params.beta, params.seed);
        const HarqSimResult r = simulate_alg2(crn, config, ctl, packets);
        CandidateEval ev;
        ev.avg_power = r.avg_power;
        ev.outage = r.outage_prob;
        ev.outage_hw = r.outage_ci.halfwidth();
        ev.evaluated = true;
        return ev;
    };

    // Pass 1: cheap screen of the full grid.
    std::vector<CandidateEval> screen(total);
    engine::parallel_for(total, options.workers, [&](std::int64_t i) {
        screen[i] = evaluate(space.decode(i, options.power_floor, options.power_cap),
                             options.screen_packets);
    });

    double best_screen_power = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < total; ++i) {
        const auto& ev = screen[i];
        if (ev.outage <= eps + 3.0 * ev.outage_hw) {
            best_screen_power = std::min(best_screen_power, ev.avg_power);
        }
    }
    if (!std::isfinite(best_screen_power)) {
        throw InfeasibleError("tune_alg2: no candidate meets the outage target in screening");
    }

    const double keep_below = best_screen_power *
                              numerics::db_to_linear(options.screen_power_margin_db);
    std::vector<std::int64_t> shortlist;
    for (std::int64_t i = 0; i < total; ++i) {
        const auto& ev = screen[i];
        if (ev.outage <= eps + 3.0 * ev.outage_hw && ev.avg_power <= keep_below) {
            shortlist.push_back(i);
        }
    }
    constexpr std::size_t kMaxShortlist = 60'000;
    if (shortlist.size() > kMaxShortlist) {
        std::sort(shortlist.begin(), shortlist.end(), [&](std::int64_t a, std::int64_t b) {
            if (screen[a].avg_power != screen[b].avg_power) {
                return screen[a].avg_power < screen[b].avg_power;
            }
            return a < b;
        });
        shortlist.resize(kMaxShortlist);
        std::sort(shortlist.begin(), shortlist.end());
    }

    // Pass 2: full-length evaluation of the shortlist; spec feasibility rule.
    struct Ranked {
        double avg_power;
        double outage;
        std::int64_t order; // deterministic tie-break
        PowerControllerState controller;
    };
    std::vector<CandidateEval> full(shortlist.size());
    engine::parallel_for(static_cast<std::int64_t>(shortlist.size()), options.workers,
                         [&](std::int64_t k) {
                             full[k] = evaluate(space.decode(shortlist[k], options.power_floor,
                                                             options.power_cap),
                                                options.search_packets);
                         });
    std::vector<Ranked> ranked;
    for (std::size_t k = 0; k < shortlist.size(); ++k) {
        if (full[k].outage <= eps + 2.0 * full[k].outage_hw) {
            ranked.push_back({full[k].avg_power, full[k].outage, shortlist[k],
                              space.decode(shortlist[k], options.power_floor, options.power_cap)});
        }
    }
    if (ranked.empty()) {
        throw InfeasibleError("tune_alg2: no candidate meets the outage target at search length");
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.avg_power != b.avg_power) return a.avg_power < b.avg_power;
        return a.order < b.order;
    });

    // Refinement rounds zoom the P_initial axis around the incumbent with the
    // d coefficients frozen.
    double spacing = (p_grid.upper - p_grid.lower) / (p_grid.points - 1);
    for (int round = 1; round <= p_grid.refinement_rounds; ++round) {
        const Ranked& incumbent = ranked.front();
        const double center = numerics::linear_to_db(incumbent.controller.power);
        const double lo = std::max(p_grid.lower, center - spacing);
        const double hi = std::min(p_grid.upper, center + spacing);
        spacing = (hi - lo) / (p_grid.points - 1);
        std::vector<CandidateEval> refine(p_grid.points);
        std::vector<PowerControllerState> ctls;
        ctls.reserve(p_grid.points);
        for (int i = 0; i < p_grid.points; ++i) {
            PowerControllerState c = incumbent.controller;
            c.power = numerics::db_to_linear(lo + spacing * i);
            c.power = std::min(options.power_cap, std::max(options.power_floor, c.power));
            ctls.push_back(std::move(c));
        }
        engine::parallel_for(p_grid.points, options.workers, [&](std::int64_t i) {
            refine[i] = evaluate(ctls[i], options.search_packets);
        });
        for (int i = 0; i < p_grid.points; ++i) {
            if (refine[i].outage <= eps + 2.0 * refine[i].outage_hw) {
                ranked.push_back({refine[i].avg_power, refine[i].outage, total + i, ctls[i]});
            }
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            if (a.avg_power != b.avg_power) return a.avg_power < b.avg_power;
            return a.order < b.order;
        });
    }

    // Validation walk: fresh seeds, pooled Wilson outage, replication-level
    // power CI; first candidate meeting the constraint wins.
    const int reps = std::max(1, options.validation_replications);
    const std::int64_t packets_per_rep =
        std::max<std::int64_t>(1, options.validation_packets / reps);
    const int attempts =
        std::min<int>(options.max_validation_attempts, static_cast<int>(ranked.size()));
    for (int a = 0; a < attempts; ++a) {
        const PowerControllerState& ctl = ranked[a].controller;
        std::vector<double> rep_powers(reps);
        std::vector<HarqSimResult> rep_results(reps);
        engine::parallel_for(reps, options.workers, [&](std::int64_t r) {
            const channel::FadingParams rp(params.beta,
                                           params.seed + 1 + static_cast<std::uint64_t>(r));
            rep_results[r] = simulate_alg2(rp, config, ctl, packets_per_rep);
            rep_powers[r] = rep_results[r].avg_power;
        });
        HarqSimResult validation;
        validation.packets = packets_per_rep * reps;
        validation.stop_counts.assign(M, 0);
        std::int64_t outages = 0;
        for (const auto& rr : rep_results) {
            for (int m = 0; m < M; ++m) validation.stop_counts[m] += rr.stop_counts[m];
            outages += llround(rr.outage_prob * static_cast<double>(rr.packets));
        }
        const auto power_est = engine::mean_with_ci(rep_powers);
        validation.avg_power = power_est.mean;
        validation.avg_power_ci = power_est.halfwidth_95;
        validation.outage_prob =
            static_cast<double>(outages) / static_cast<double>(validation.packets);
        validation.outage_ci = engine::wilson_interval(outages, validation.packets);
        validation.stop_histogram.resize(M);
        for (int m = 0; m < M; ++m) {
            validation.stop_histogram[m] = static_cast<double>(validation.stop_counts[m]) /
                                           static_cast<double>(validation.packets);
        }
        if (validation.outage_prob <= eps + 3.0 * validation.outage_ci.halfwidth()) {
            return Alg2TuneResult{ctl, validation, ranked[a].avg_power, uniform_power};
        }
    }
    throw InfeasibleError("tune_alg2: no search winner survived validation");
}

} // namespace linksim::harq
