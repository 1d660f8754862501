#pragma once

namespace bdarma::special {

// log|Gamma(x)|. Lanczos approximation (g = 607/128, 15 terms, Godfrey's
// coefficients) for x >= 0.5 and the reflection formula below that.
// Relative accuracy ~1e-15 away from the zeros of log Gamma at 1 and 2,
// absolute accuracy ~1e-15 near them. Poles (x = 0, -1, ...) return +inf.
double log_gamma(double x);

// Digamma psi(x) = d/dx log Gamma(x). Upward recurrence to x >= 10, then the
// asymptotic Bernoulli series through B_14; reflection for x <= 0.
double digamma(double x);

}  // namespace bdarma::special
