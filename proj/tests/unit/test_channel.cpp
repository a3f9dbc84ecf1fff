#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "linksim/channel.hpp"
#include "linksim/numerics.hpp"

using namespace linksim;
using namespace linksim::channel;

namespace {

double ks_statistic_exp1(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = -std::expm1(-samples[i]);
        d = std::max(d, std::abs((i + 1.0) / n - F));
        d = std::max(d, std::abs(F - i / n));
    }
    return d;
}

double lag1_autocorr(const std::vector<double>& x) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = x[i] - mean;
        den += c * c;
        if (i + 1 < n) num += c * (x[i + 1] - mean);
    }
    return num / den;
}

} // namespace

TEST_CASE("FadingParams validates beta") {
    CHECK_THROWS_AS(FadingParams(1.3, 1), std::invalid_argument);
    CHECK_THROWS_AS(FadingParams(-0.1, 1), std::invalid_argument);
    CHECK_NOTHROW(FadingParams(0.0, 1));
    CHECK_NOTHROW(FadingParams(1.0, 1));
}

TEST_CASE("identical (beta, seed) gives bit-identical trajectories") {
    FadingChannel a(FadingParams(0.9, 42));
    FadingChannel b(FadingParams(0.9, 42));
    CHECK(a.state().h == b.state().h);
    for (int i = 0; i < 1000; ++i) {
        const auto& sa = a.step();
        const auto& sb = b.step();
        CHECK(sa.h == sb.h);
        CHECK(sa.g == sb.g);
        CHECK(sa.t == sb.t);
    }
}

TEST_CASE("gain is |h|^2 and slot index advances") {
    FadingChannel ch(FadingParams(0.5, 7));
    CHECK(ch.state().t == 0);
    for (int i = 1; i <= 50; ++i) {
        const auto& s = ch.step();
        CHECK(s.g == std::norm(s.h));
        CHECK(s.t == static_cast<std::uint64_t>(i));
    }
}

TEST_CASE("stationary initialization has unit mean gain across seeds") {
    double sum = 0.0;
    const int seeds = 4000;
    for (int s = 0; s < seeds; ++s) {
        sum += FadingChannel(FadingParams(0.9, 1000 + s)).state().g;
    }
    CHECK(sum / seeds == doctest::Approx(1.0).epsilon(0.07));
}

TEST_CASE("beta = 1 freezes the coefficient") {
    FadingChannel ch(FadingParams(1.0, 5));
    const auto h0 = ch.state().h;
    for (int i = 0; i < 100; ++i) {
        CHECK(ch.step().h == h0);
    }
}

TEST_CASE("lag-1 autocorrelation of Re(h) equals beta") {
    const std::int64_t n = 1'000'000;
    for (double beta : {0.0, 0.2, 0.5, 0.9}) {
        FadingChannel ch(FadingParams(beta, 99));
        std::vector<double> re(n);
        for (std::int64_t i = 0; i < n; ++i) re[i] = ch.step().h.real();
        CHECK(std::abs(lag1_autocorr(re) - beta) < 0.01);
    }
}

TEST_CASE("imaginary part is correlated like the real part") {
    const std::int64_t n = 500'000;
    FadingChannel ch(FadingParams(0.7, 123));
    std::vector<double> im(n);
    for (std::int64_t i = 0; i < n; ++i) im[i] = ch.step().h.imag();
    CHECK(std::abs(lag1_autocorr(im) - 0.7) < 0.012);
}

TEST_CASE("gain stays Exp(1) along the trajectory (KS)") {
    const std::int64_t n = 1'000'000;
    for (double beta : {0.0, 0.5, 0.9}) {
        FadingChannel ch(FadingParams(beta, 7));
        std::vector<double> g(n);
        for (std::int64_t i = 0; i < n; ++i) g[i] = ch.step().g;
        CHECK(ks_statistic_exp1(std::move(g)) < 0.01);
    }
}

TEST_CASE("marginal pdf and cdf") {
    CHECK(marginal_gain_pdf(0.0) == 1.0);
    CHECK(marginal_gain_pdf(1.0) == doctest::Approx(0.367879441171442).epsilon(1e-12));
    CHECK(gain_cdf(0.0) == 0.0);
    CHECK(gain_cdf(std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gain_cdf(100.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(marginal_gain_pdf(-0.2), std::domain_error);
    CHECK_THROWS_AS(gain_cdf(-0.2), std::domain_error);
    const double mass = numerics::quadrature_1d([](double x) { return marginal_gain_pdf(x); },
                                                0.0, std::numeric_limits<double>::infinity(),
                                                1e-10);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("joint pdf factorizes exactly at beta = 0") {
    for (double x : {0.0, 0.3, 1.7, 4.0}) {
        for (double y : {0.1, 0.9, 2.5}) {
            CHECK(joint_gain_pdf(x, y, 0.0) == marginal_gain_pdf(x) * marginal_gain_pdf(y));
        }
    }
}

TEST_CASE("joint pdf rejects degenerate and invalid arguments") {
    CHECK_THROWS_AS(joint_gain_pdf(1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(joint_gain_pdf(-1.0, 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(joint_gain_pdf(1.0, -1.0, 0.5), std::domain_error);
}

TEST_CASE("joint pdf normalizes and marginalizes at beta = 0.9") {
    const double inf = std::numeric_limits<double>::infinity();
    numerics::QuadratureOptions opts;
    opts.tol = 1e-9;
    const double total = numerics::quadrature_2d(
        [](double x, double y) { return joint_gain_pdf(x, y, 0.9); }, 0.0, inf,
        [](double) { return 0.0; }, [inf](double) { return inf; }, opts);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

    for (double x : {0.2, 1.0, 3.0}) {
        const double marg = numerics::quadrature_1d(
            [x](double y) { return joint_gain_pdf(x, y, 0.9); }, 0.0, inf, 1e-11);
        CHECK(marg == doctest::Approx(std::exp(-x)).epsilon(1e-6));
    }
}

TEST_CASE("joint pdf stays finite far into the tails") {
    // I0 argument ~ 9.5 sqrt(xy) would overflow a naive evaluation
    const double v = joint_gain_pdf(400.0, 400.0, 0.9);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
}
