#pragma once

// ATM Black-Scholes implied volatility with zero rates.

#include <cmath>
#include <limits>
#include <numbers>

#include "smalltime/errors.hpp"
#include "smalltime/model.hpp"

namespace smalltime {

/// S0 [Phi(sigma sqrt(T) / 2) - Phi(-sigma sqrt(T) / 2)], evaluated as S0 erf(.) to keep
/// relative accuracy when sigma sqrt(T) is tiny.
inline double atm_price_bs(double s0, double sigma, double maturity) {
    detail::require(s0 > 0.0 && std::isfinite(s0), ErrorKind::DomainError, "atm_price_bs requires S0 > 0");
    detail::require(sigma >= 0.0, ErrorKind::DomainError, "atm_price_bs requires sigma >= 0");
    detail::require(maturity > 0.0 && std::isfinite(maturity), ErrorKind::DomainError,
                    "atm_price_bs requires T > 0");
    if (std::isinf(sigma)) return s0;
    return s0 * std::erf(0.5 * sigma * std::sqrt(maturity) / std::numbers::sqrt2);
}

struct ImpliedVolResult {
    double sigma_impl = 0.0;  ///< meaningful only when !infinite
    bool infinite = false;    ///< price == S0: no finite volatility reproduces it
    double residual = 0.0;    ///< atm_price_bs(s0, sigma_impl, T) - price
    int iterations = 0;
};

/// Unique sigma with atm_price_bs(s0, sigma, T) == price, by bisection on sigma sqrt(T)
/// over [0, 20] followed by one Newton polish step.
inline ImpliedVolResult atm_implied_vol(double price, double s0, double maturity) {
    detail::require(s0 > 0.0 && std::isfinite(s0), ErrorKind::DomainError, "atm_implied_vol requires S0 > 0");
    detail::require(maturity > 0.0 && std::isfinite(maturity), ErrorKind::DomainError,
                    "atm_implied_vol requires T > 0");
    detail::require(price >= 0.0 && price <= s0, ErrorKind::PriceOutOfRange,
                    "ATM call price must lie in [0, S0], got " + detail::fmt_value(price));
    if (price == 0.0) return {0.0, false, 0.0, 0};
    if (price == s0) return {0.0, true, 0.0, 0};

    const double sqrt_t = std::sqrt(maturity);
    const double target = price / s0;
    auto normalized = [](double y) { return std::erf(0.5 * y / std::numbers::sqrt2); };

    double lo = 0.0;
    double hi = 20.0;
    int iterations = 0;
    while (hi - lo > 1e-14 * hi && iterations < 400) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (normalized(mid) < target ? lo : hi) = mid;
        ++iterations;
    }
    double y = 0.5 * (lo + hi);
    const double slope = std::exp(-y * y / 8.0) / std::sqrt(2.0 * std::numbers::pi);
    if (slope > 0.0) {
        const double polished = y - (normalized(y) - target) / slope;
        if (polished >= 0.0 && std::abs(normalized(polished) - target) <= std::abs(normalized(y) - target)) {
            y = polished;
        }
    }
    const double sigma = y / sqrt_t;
    return {sigma, false, atm_price_bs(s0, sigma, maturity) - price, iterations};
}

}  // namespace smalltime
