#ifndef LINKSIM_CHANNEL_HPP
#define LINKSIM_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace linksim::channel {

// Correlation factor and seed of one Gauss-Markov fading stream. Two streams
// built from equal (beta, seed) produce bit-identical trajectories.
struct FadingParams {
    double beta;
    std::uint64_t seed;

    FadingParams(double beta_, std::uint64_t seed_) : beta(beta_), seed(seed_) {
        if (!(beta >= 0.0 && beta <= 1.0)) {
            throw std::invalid_argument("FadingParams: beta must lie in [0, 1]");
        }
    }
};

struct ChannelState {
    std::complex<double> h;
    double g = 0.0; // |h|^2, kept consistent with h
    std::uint64_t t = 0;
};

// First-order Gauss-Markov Rayleigh block-fading generator,
//   h(t+1) = beta h(t) + sqrt(1 - beta^2) eps,  eps ~ CN(0,1).
// h(0) is drawn from the stationary CN(0,1) law, so every slot is stationary
// with g ~ Exp(1). The generator is single-threaded; run independent seeds on
// independent threads.
class FadingChannel {
public:
    explicit FadingChannel(const FadingParams& params)
        : beta_(params.beta),
          sigma_(std::sqrt(std::max(0.0, 1.0 - params.beta * params.beta))),
          rng_(params.seed) {
        state_.h = draw_cn();
        state_.g = std::norm(state_.h);
        state_.t = 0;
    }

    const ChannelState& state() const { return state_; }

    // Advances one fading block. The innovation is always consumed, so traces
    // with equal seeds stay aligned slot-for-slot across beta values.
    const ChannelState& step() {
        const std::complex<double> eps = draw_cn();
        state_.h = beta_ * state_.h + sigma_ * eps;
        state_.g = std::norm(state_.h);
        ++state_.t;
        return state_;
    }

    double step_gain() { return step().g; }

    // Replaces h with a fresh stationary CN(0,1) draw (used for independent
    // per-packet fading windows). Consumes exactly one innovation, so the
    // stream stays aligned with an equivalent step().
    const ChannelState& restart_stationary() {
        state_.h = draw_cn();
        state_.g = std::norm(state_.h);
        ++state_.t;
        return state_;
    }

private:
    // CN(0,1): squared magnitude ~ Exp(1), phase uniform.
    std::complex<double> draw_cn() {
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double r = std::sqrt(-std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    // (0, 1]: never zero, so the log above is finite.
    double uniform_open() {
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1p-53;
    }

    double beta_;
    double sigma_;
    std::mt19937_64 rng_;
    ChannelState state_;
};

// Stationary (Rayleigh) gain pdf f(x) = e^-x, x >= 0.
double marginal_gain_pdf(double x);

// Stationary gain cdf F(x) = 1 - e^-x, x >= 0.
double gain_cdf(double x);

// Joint pdf of consecutive gains (g(t), g(t+1)) at correlation beta in [0,1).
// Computed through the scaled Bessel form, so it stays finite for large
// arguments. beta = 1 is rejected (the density degenerates to a line mass).
double joint_gain_pdf(double x, double y, double beta);

} // namespace linksim::channel

#endif
