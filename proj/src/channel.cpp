#include "linksim/channel.hpp"

#include "linksim/numerics.hpp"

namespace linksim::channel {

double marginal_gain_pdf(double x) {
    if (!(x >= 0.0)) throw std::domain_error("marginal_gain_pdf: x must be >= 0");
    return std::exp(-x);
}

double gain_cdf(double x) {
    if (!(x >= 0.0)) throw std::domain_error("gain_cdf: x must be >= 0");
    return -std::expm1(-x);
}

double joint_gain_pdf(double x, double y, double beta) {
    if (!(x >= 0.0) || !(y >= 0.0)) {
        throw std::domain_error("joint_gain_pdf: gains must be >= 0");
    }
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw std::domain_error(
            "joint_gain_pdf: beta must lie in [0, 1); the density degenerates at beta = 1");
    }
    if (beta == 0.0) return marginal_gain_pdf(x) * marginal_gain_pdf(y);
    const double c = 1.0 - beta * beta;
    const double z = 2.0 * beta * std::sqrt(x * y) / c;
    // exp(z - (x+y)/c) <= exp(-(sqrt x - sqrt y)^2 / c) <= 1, so no overflow
    return std::exp(z - (x + y) / c) * numerics::bessel_i0_scaled(z) / c;
}

} // namespace linksim::channel
