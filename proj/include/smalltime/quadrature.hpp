#pragma once

// Adaptive Gauss-Kronrod (7/15) integration on finite and half-infinite ranges.

#include <array>
#include <queue>
#include <cmath>
#include <limits>
#include <utility>

namespace smalltime::quad {

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> gk15(F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(mid);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double fsum = f(mid - dx) + f(mid + dx);
        kronrod += kronrod_weights[j] * fsum;
        if (j % 2 == 1) gauss += gauss_weights[j / 2] * fsum;
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Integral of f over [a, b]: globally adaptive Gauss-Kronrod, always bisecting the interval
/// with the largest error estimate, until the summed estimate is below
/// max(abs_tol, rel_tol * |integral|) or max_intervals is reached.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-13, double rel_tol = 1e-12,
                 std::size_t max_intervals = 4000) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(std::forward<F>(f), b, a, abs_tol, rel_tol, max_intervals);
    struct Piece {
        double a, b, value, err;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    std::priority_queue<Piece> heap;
    const auto [v0, e0] = detail::gk15(f, a, b);
    heap.push({a, b, v0, e0});
    double total = v0, total_err = e0;
    while (heap.size() < max_intervals && total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        const Piece worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(worst.a < mid && mid < worst.b)) break;
        heap.pop();
        const auto [lv, le] = detail::gk15(f, worst.a, mid);
        const auto [rv, re] = detail::gk15(f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push({worst.a, mid, lv, le});
        heap.push({mid, worst.b, rv, re});
    }
    // Re-sum to shed the drift of the running updates.
    double sum = 0.0;
    for (; !heap.empty(); heap.pop()) sum += heap.top().value;
    return sum;
}

/// Integral of f over [a, inf) via x = a + t / (1 - t).
template <class F>
double integrate_to_infinity(F&& f, double a, double abs_tol = 1e-13, double rel_tol = 1e-12) {
    auto mapped = [&f, a](double t) {
        if (t >= 1.0) return 0.0;
        const double one_minus = 1.0 - t;
        const double x = a + t / one_minus;
        const double value = f(x) / (one_minus * one_minus);
        return std::isfinite(value) ? value : 0.0;
    };
    return integrate(mapped, 0.0, 1.0, abs_tol, rel_tol);
}

}  // namespace smalltime::quad
