#include "bdarma/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace bdarma::special {

namespace {

constexpr double kLanczosG = 607.0 / 128.0;

constexpr std::array<double, 15> kLanczosCoefficients = {
    0.99999999999999709182,     57.156235665862923517,
    -59.597960355475491248,     14.136097974741747174,
    -0.49191381609762019978,    0.33994649984811888699e-4,
    0.46523628927048575665e-4,  -0.98374475304879564677e-4,
    0.15808870322491248884e-3,  -0.21026444172410488319e-3,
    0.21743961811521264320e-3,  -0.16431810653676389022e-3,
    0.84418223983852743293e-4,  -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

// 0.5 * log(2 pi)
constexpr double kHalfLogTwoPi = 0.91893853320467274178;

bool is_nonpositive_integer(double x) {
    return x <= 0.0 && x == std::floor(x);
}

double lanczos_log_gamma(double x) {
    const double z = x - 1.0;
    double sum = kLanczosCoefficients[0];
    for (std::size_t k = 1; k < kLanczosCoefficients.size(); ++k) {
        sum += kLanczosCoefficients[k] / (z + static_cast<double>(k));
    }
    const double t = z + kLanczosG + 0.5;
    return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace

double log_gamma(double x) {
    if (std::isnan(x)) return x;
    if (std::isinf(x)) return std::numeric_limits<double>::infinity();
    if (is_nonpositive_integer(x)) return std::numeric_limits<double>::infinity();

    // log Gamma has zeros at 1 and 2; return them exactly.
    if (x == 1.0 || x == 2.0) return 0.0;

    if (x < 0.5) {
        // Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        const double s = std::sin(std::numbers::pi * x);
        return std::log(std::numbers::pi / std::fabs(s)) - lanczos_log_gamma(1.0 - x);
    }
    return lanczos_log_gamma(x);
}

double digamma(double x) {
    if (std::isnan(x)) return x;
    if (is_nonpositive_integer(x)) return std::numeric_limits<double>::quiet_NaN();

    double result = 0.0;
    if (x <= 0.0) {
        // psi(1 - x) - psi(x) = pi cot(pi x)
        result = -std::numbers::pi / std::tan(std::numbers::pi * x);
        x = 1.0 - x;
    }

    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }

    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // -sum_{n=1}^{7} B_{2n} / (2n x^{2n}), Horner form in 1/x^2
    const double series =
        inv2 * (1.0 / 12.0 -
        inv2 * (1.0 / 120.0 -
        inv2 * (1.0 / 252.0 -
        inv2 * (1.0 / 240.0 -
        inv2 * (1.0 / 132.0 -
        inv2 * (691.0 / 32760.0 -
        inv2 * (1.0 / 12.0)))))));
    return result + std::log(x) - 0.5 * inv - series;
}

}  // namespace bdarma::special
