#pragma once

// Real special functions used by the leading-order constants.

#include <array>
#include <cmath>
#include <numbers>

#include "smalltime/errors.hpp"

namespace smalltime {

inline constexpr double euler_gamma = 0.57721566490153286061;

/// Gamma function for x > 0 (Lanczos, g = 7, nine terms; reflection below 1/2).
inline double gamma_fn(double x) {
    detail::require(x > 0.0 && std::isfinite(x), ErrorKind::DomainError,
                    "gamma_fn requires x > 0");
    static constexpr std::array<double, 9> coeff = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    constexpr double pi = std::numbers::pi;
    if (x < 0.5) {
        // Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return pi / (std::sin(pi * x) * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    double sum = coeff[0];
    for (std::size_t i = 1; i < coeff.size(); ++i) sum += coeff[i] / (z + static_cast<double>(i));
    const double t = z + 7.5;
    return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * sum;
}

namespace detail {

// Power series about 0, accurate for x <= 2.
inline double bessel_k0_series(double x) {
    const double q = 0.25 * x * x;
    const double log_term = std::log(0.5 * x) + euler_gamma;
    double term = 1.0;  // (q^k / k!^2)
    double i0 = 1.0;
    double harmonic = 0.0;
    double tail = 0.0;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * k);
        harmonic += 1.0 / k;
        i0 += term;
        tail += term * harmonic;
        if (term * (harmonic + std::abs(log_term)) < 1e-18 * std::abs(tail - log_term * i0)) break;
    }
    return -log_term * i0 + tail;
}

inline double bessel_k1_series(double x) {
    const double q = 0.25 * x * x;
    // I1(x) = (x/2) sum q^k / (k! (k+1)!)
    // K1(x) = 1/x + ln(x/2) I1(x) - (x/4) sum (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
    double term = 1.0;
    double psi_k1 = -euler_gamma;        // psi(k+1)
    double psi_k2 = 1.0 - euler_gamma;   // psi(k+2)
    double i1_sum = 1.0;
    double psi_sum = psi_k1 + psi_k2;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * (k + 1));
        psi_k1 = psi_k2;
        psi_k2 += 1.0 / (k + 1);
        i1_sum += term;
        psi_sum += term * (psi_k1 + psi_k2);
        if (term * std::abs(psi_k1 + psi_k2) < 1e-18 * std::abs(psi_sum)) break;
    }
    return 1.0 / x + std::log(0.5 * x) * 0.5 * x * i1_sum - 0.25 * x * psi_sum;
}

// Steed/Temme continued fraction for K_0 and K_1, valid for x >= 2.
inline std::array<double, 2> bessel_k01_cf(double x) {
    constexpr double eps = 1e-17;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 100000; ++i) {
        a -= 2.0 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) break;
    }
    h *= a1;
    const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    const double k1 = k0 * (x + 0.5 - h) / x;
    return {k0, k1};
}

}  // namespace detail

/// Modified Bessel function of the second kind, order 0 or 1, for x > 0.
inline double bessel_k(int order, double x) {
    detail::require(order == 0 || order == 1, ErrorKind::DomainError,
                    "bessel_k supports orders 0 and 1 only");
    detail::require(x > 0.0 && !std::isnan(x), ErrorKind::DomainError,
                    "bessel_k requires x > 0");
    if (x <= 2.0) return order == 0 ? detail::bessel_k0_series(x) : detail::bessel_k1_series(x);
    if (x > 700.0) return 0.0;
    return detail::bessel_k01_cf(x)[static_cast<std::size_t>(order)];
}

inline double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace smalltime
