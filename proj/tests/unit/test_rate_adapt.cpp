#include <doctest.h>

#include <cmath>
#include <vector>

#include "linksim/rate_adapt.hpp"

using namespace linksim;
using namespace linksim::rate_adapt;
using linksim::channel::FadingParams;

// closed-form references, frozen from the independent oracles
namespace ref {
constexpr double no_csit_1 = 0.2643804473496343;
constexpr double no_csit_10 = 1.0878078601534825;
constexpr double no_csit_100 = 2.54511046850994;
constexpr double perfect_1 = 0.5963473623231941;
constexpr double perfect_10 = 2.0146425447084517;
constexpr double n2_example = 0.3599076227501262; // log(1.5)(e^-.5-e^-1.5)+log(2.5)e^-1.5
} // namespace ref

TEST_CASE("QuantizerConfig validates its invariants") {
    CHECK_THROWS_AS(QuantizerConfig({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig({0.5, 0.5}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig({1.5, 0.5}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig({-0.1, 0.5}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig({0.5}, 0.0), std::invalid_argument);
    const QuantizerConfig q({0.5, 1.5}, 2.0);
    const auto r = q.rates();
    CHECK(r[0] == doctest::Approx(std::log(2.0)));
    CHECK(r[1] == doctest::Approx(std::log(4.0)));
    CHECK(r[0] < r[1]); // rates inherit the threshold ordering
}

TEST_CASE("static_throughput closed form") {
    CHECK(static_throughput(QuantizerConfig({0.5, 1.5}, 1.0)) ==
          doctest::Approx(ref::n2_example).epsilon(1e-12));
    // a zero first threshold earns nothing
    CHECK(static_throughput(QuantizerConfig({0.0}, 123.0)) == 0.0);
    // N = 1 at the Eq.-(9) maximizer reproduces the no-CSIT value
    const double P = 10.0;
    const double g1 = std::expm1(numerics::lambert_w(P)) / P;
    CHECK(static_throughput(QuantizerConfig({g1}, P)) ==
          doctest::Approx(ref::no_csit_10).epsilon(1e-12));
}

TEST_CASE("throughput_no_csit against the grid-maximizer oracle") {
    CHECK(throughput_no_csit(1.0) == doctest::Approx(ref::no_csit_1).epsilon(1e-12));
    CHECK(throughput_no_csit(10.0) == doctest::Approx(ref::no_csit_10).epsilon(1e-12));
    CHECK(throughput_no_csit(100.0) == doctest::Approx(ref::no_csit_100).epsilon(1e-12));
    CHECK(throughput_no_csit(1e-9) < 1e-8); // vanishes with the power
    for (double P : {1.0, 10.0}) {
        numerics::SearchGrid g(0.0, 6.0, 300, 2);
        const auto best = numerics::grid_search(
            [P](std::span<const double> pt) {
                return std::exp(-pt[0]) * std::log1p(pt[0] * P);
            },
            {g}, numerics::SearchMode::Maximize);
        CHECK(throughput_no_csit(P) == doctest::Approx(best.value).epsilon(1e-4));
    }
}

TEST_CASE("throughput_perfect_csit against quadrature and ordering") {
    CHECK(throughput_perfect_csit(1.0) == doctest::Approx(ref::perfect_1).epsilon(1e-10));
    CHECK(throughput_perfect_csit(10.0) == doctest::Approx(ref::perfect_10).epsilon(1e-10));
    CHECK(throughput_perfect_csit(1e-9) < 1e-8);
    const double inf = std::numeric_limits<double>::infinity();
    for (double P : {0.5, 10.0, 50.0}) {
        const double q = numerics::quadrature_1d(
            [P](double g) { return std::exp(-g) * std::log1p(g * P); }, 0.0, inf, 1e-10);
        CHECK(throughput_perfect_csit(P) == doctest::Approx(q).epsilon(1e-6));
    }
    for (double snr_db = 0.0; snr_db <= 20.0; snr_db += 2.5) {
        const double P = numerics::db_to_linear(snr_db);
        CHECK(throughput_perfect_csit(P) >= throughput_no_csit(P));
    }
}

TEST_CASE("optimize_static_quantizer: N=1 equals the closed form, N=2 dominates") {
    numerics::SearchGrid grid(0.0, 10.0, 200, 2);
    for (double snr_db : {0.0, 5.0, 10.0, 15.0, 20.0}) {
        const double P = numerics::db_to_linear(snr_db);
        const auto q1 = optimize_static_quantizer(1, P, grid);
        const auto q2 = optimize_static_quantizer(2, P, grid);
        const double eta1 = static_throughput(q1);
        const double eta2 = static_throughput(q2);
        CHECK(eta1 == doctest::Approx(throughput_no_csit(P)).epsilon(1e-5));
        CHECK(eta2 >= eta1);
        CHECK(eta2 <= throughput_perfect_csit(P));
    }
}

TEST_CASE("many-region quantizer approaches perfect CSIT from below") {
    const double P = 10.0;
    numerics::SearchGrid grid(0.0, 10.0, 200, 2);
    const auto q64 = optimize_static_quantizer(64, P, grid);
    const double eta = static_throughput(q64);
    const double perfect = throughput_perfect_csit(P);
    CHECK(eta < perfect);
    CHECK(eta > 0.98 * perfect);
}

TEST_CASE("alg1_feedback threshold semantics") {
    const RateControllerState st(1.0, 0.1);
    CHECK(!alg1_feedback(0.0, 1.0, st));
    CHECK(alg1_feedback(std::expm1(1.2), 1.0, st));        // 1.2 > 1.1
    CHECK(!alg1_feedback(std::expm1(1.05), 1.0, st));      // 1.05 < 1.1
    CHECK_THROWS_AS(alg1_feedback(-1.0, 1.0, st), std::domain_error);

    // strictness at the exact boundary: hunt for a gain whose capacity lands
    // bit-exactly on R(1+delta)
    const double threshold = st.rate * (1.0 + st.delta);
    double g = std::expm1(threshold);
    bool found = false;
    for (int k = 0; k < 200 && !found; ++k) {
        const double cand = std::nextafter(g, k % 2 ? 0.0 : 1e9);
        if (std::log1p(cand) == threshold) {
            CHECK(!alg1_feedback(cand, 1.0, st)); // equality is not a reward
            found = true;
        }
        g = cand;
    }
    if (std::log1p(std::expm1(threshold)) == threshold) {
        CHECK(!alg1_feedback(std::expm1(threshold), 1.0, st));
        found = true;
    }
    CHECK(found);
}

TEST_CASE("alg1_update multiplies and clamps") {
    RateControllerState st(1.0, 0.1);
    CHECK(alg1_update(st, true).rate == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(alg1_update(st, false).rate == doctest::Approx(0.9).epsilon(1e-15));
    const auto cycled = alg1_update(alg1_update(st, true), false);
    CHECK(cycled.rate == doctest::Approx(0.99).epsilon(1e-14)); // not an identity
    RateControllerState low(0.0011, 0.5, FeedbackTiming::SameBlock, 1e-3);
    for (int i = 0; i < 50; ++i) low = alg1_update(low, false);
    CHECK(low.rate == 1e-3); // floor holds
    CHECK_THROWS_AS(RateControllerState(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(RateControllerState(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(RateControllerState(1e-9, 0.1), std::invalid_argument);
}

TEST_CASE("same-block feedback never rewards into an outage") {
    std::int64_t rewarded = 0, rewarded_outages = 0;
    Alg1Observer obs = [&](const Alg1SlotRecord& r) {
        if (r.alpha) {
            ++rewarded;
            if (!r.decoded) ++rewarded_outages;
        }
    };
    const RateControllerState init(1.0, 0.15);
    simulate_alg1(FadingParams(0.9, 31), 10.0, init, 200'000, &obs);
    CHECK(rewarded > 1000);
    CHECK(rewarded_outages == 0);
}

TEST_CASE("next-block timing sends the first slot at the initial rate") {
    std::vector<Alg1SlotRecord> first;
    Alg1Observer obs = [&](const Alg1SlotRecord& r) {
        if (first.size() < 2) first.push_back(r);
    };
    const RateControllerState init(2.0, 0.2, FeedbackTiming::NextBlock);
    simulate_alg1(FadingParams(0.5, 3), 5.0, init, 100, &obs);
    CHECK(first[0].rate == 2.0);
    // second slot reflects the first slot's feedback
    const double expected = first[0].alpha ? 2.0 * 1.2 : 2.0 * 0.8;
    CHECK(first[1].rate == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("fully-correlated channel: rate locks onto the capacity") {
    const double delta = 0.02;
    FadingParams params(1.0, 77); // g frozen at its initial draw
    channel::FadingChannel probe(params);
    const double g = probe.state().g;
    const double capacity = std::log1p(g * 10.0);
    const RateControllerState init(std::max(0.01, capacity), delta);
    const auto res = simulate_alg1(params, 10.0, init, 50'000);
    CHECK(res.throughput > capacity * (1.0 - 3.0 * delta));
    CHECK(res.throughput <= capacity);
}

TEST_CASE("static quantizer simulation matches Eq.-(7) closed form") {
    const QuantizerConfig q({0.5, 1.5}, 1.0);
    const auto sim = simulate_static_quantizer(FadingParams(0.0, 8), q, 400'000);
    const double analytic = static_throughput(q);
    CHECK(sim.ci_halfwidth > 0.0);
    CHECK(std::abs(sim.throughput - analytic) <= 3.0 * sim.ci_halfwidth);
    // correlation does not change the marginal, so Eq. (7) still holds
    const auto sim_corr = simulate_static_quantizer(FadingParams(0.9, 8), q, 400'000);
    CHECK(std::abs(sim_corr.throughput - analytic) <= 4.0 * sim_corr.ci_halfwidth);
}

TEST_CASE("tune_alg1 at reduced scale: argmax, bound, and correlation ordering") {
    const double P = 10.0;
    Alg1TuneOptions opts;
    opts.rate_grid = numerics::SearchGrid(0.2, 4.0, 12, 1);
    opts.delta_grid = numerics::SearchGrid(0.02, 0.4, 10, 1);
    opts.search_slots = 20'000;
    opts.final_replications = 10;
    opts.final_slots_per_replication = 20'000;
    opts.workers = 2;

    const FadingParams p09(0.9, 1234);
    const auto tuned = tune_alg1(p09, P, opts);

    // argmax property against audited grid points under the search seed
    for (double rate : {0.5, 1.0, 2.0}) {
        for (double delta : {0.05, 0.1, 0.3}) {
            const RateControllerState cand(rate, delta);
            const double v = simulate_alg1(p09, P, cand, opts.search_slots).throughput;
            CHECK(tuned.search_throughput >= v - 1e-12);
        }
    }
    // information upper bound
    CHECK(tuned.final_result.throughput <=
          throughput_perfect_csit(P) + 3.0 * tuned.final_result.ci_halfwidth);

    const auto t00 = tune_alg1(FadingParams(0.0, 1234), P, opts);
    const auto t02 = tune_alg1(FadingParams(0.2, 1234), P, opts);
    CHECK(tuned.final_result.throughput > t02.final_result.throughput);
    CHECK(std::abs(t00.final_result.throughput - t02.final_result.throughput) <
          0.06 * t02.final_result.throughput);
}
