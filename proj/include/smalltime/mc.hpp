#pragma once

// Monte Carlo estimation of ATM call prices, rate fitting on maturity grids and the
// coupled approximation-error check.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "smalltime/asymptotics.hpp"
#include "smalltime/errors.hpp"
#include "smalltime/model.hpp"
#include "smalltime/sampler.hpp"

namespace smalltime {

enum class EstimatorKind { Mean, MedianOfMeans };

/// ceil(2 ln(1 / delta)) blocks at delta = 0.025.
inline std::size_t default_mom_blocks() {
    return static_cast<std::size_t>(std::ceil(2.0 * std::log(1.0 / 0.025)));
}

struct Estimator {
    EstimatorKind kind = EstimatorKind::Mean;
    std::size_t blocks = 0;  ///< MedianOfMeans only

    static Estimator mean() { return {EstimatorKind::Mean, 0}; }
    static Estimator median_of_means(std::size_t blocks = default_mom_blocks()) {
        detail::check_param(blocks >= 8, "blocks", ">= 8", static_cast<double>(blocks));
        return {EstimatorKind::MedianOfMeans, blocks};
    }
};

struct McEstimate {
    double value = 0.0;
    double half_width = 0.0;  ///< 95% level
    std::size_t n_paths = 0;
    Estimator estimator;
    std::uint64_t seed = 0;
};

enum class PayoffForm {
    Parity,  ///< (|S_T - K| + S0 - K) / 2, valid because S is a martingale
    Direct,  ///< (S_T - K)^+
};

struct McOptions {
    unsigned workers = 1;
    PayoffForm payoff = PayoffForm::Parity;
    int n_steps = 64;                       ///< SDE models
    std::optional<double> truncation_eps;   ///< tempered/truncated stable jumps
};

namespace detail {

/// Welford accumulator, mergeable in a fixed order.
struct Moments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }

    void merge(const Moments& o) {
        if (o.count == 0.0) return;
        const double total = count + o.count;
        const double delta = o.mean - mean;
        mean += delta * o.count / total;
        m2 += o.m2 + delta * delta * count * o.count / total;
        count = total;
    }

    double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
};

/// Runs fn(block) for block in [0, n_blocks) on `workers` threads. Each block writes only
/// its own slot, so the outcome does not depend on the worker count.
template <class Fn>
void for_each_block(std::size_t n_blocks, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_blocks)));
    if (workers == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) fn(b);
        });
    }
    for (auto& t : pool) t.join();
}

inline constexpr std::size_t mean_chunks = 64;

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Mean of value(engine) over n_paths draws. Paths are split into fixed blocks, block b
/// drawing from make_engine(rng, b).
template <class ValueFn>
McEstimate estimate_expectation(ValueFn&& value, std::size_t n_paths, Estimator estimator, RngStream rng,
                                unsigned workers = 1) {
    detail::require(n_paths >= 1, ErrorKind::DomainError, "n_paths must be >= 1");
    const bool mom = estimator.kind == EstimatorKind::MedianOfMeans;
    const std::size_t n_blocks = mom ? estimator.blocks : std::min<std::size_t>(detail::mean_chunks, n_paths);
    detail::require(n_blocks >= 1 && n_blocks <= n_paths, ErrorKind::DomainError,
                    "need at least one path per block");

    std::vector<detail::Moments> blocks(n_blocks);
    detail::for_each_block(n_blocks, workers, [&](std::size_t b) {
        const std::size_t begin = b * n_paths / n_blocks;
        const std::size_t end = (b + 1) * n_paths / n_blocks;
        Engine eng = make_engine(rng, b);
        detail::Moments acc;
        for (std::size_t i = begin; i < end; ++i) acc.add(value(eng));
        blocks[b] = acc;
    });

    McEstimate out;
    out.n_paths = n_paths;
    out.estimator = estimator;
    out.seed = rng.seed;
    if (!mom) {
        detail::Moments total;
        for (const auto& b : blocks) total.merge(b);
        out.value = total.mean;
        out.half_width = 1.96 * std::sqrt(total.variance() / static_cast<double>(n_paths));
        return out;
    }
    std::vector<double> means;
    means.reserve(n_blocks);
    detail::Moments spread;
    for (const auto& b : blocks) {
        means.push_back(b.mean);
        spread.add(b.mean);
    }
    out.value = detail::median(means);
    // Asymptotic efficiency of the median is 2/pi; the block spread uses the sample sd, which
    // widens with heavy right tails where the median of block means sits below the mean.
    out.half_width = 1.96 * std::sqrt(std::numbers::pi / 2.0) * std::sqrt(spread.variance()) /
                     std::sqrt(static_cast<double>(n_blocks));
    return out;
}

/// Call price E[(S_T - K)^+] from a terminal draw function, parity or direct payoff.
template <class DrawFn>
McEstimate estimate_call_with(DrawFn&& draw, double s0, double strike, std::size_t n_paths,
                              Estimator estimator, RngStream rng, unsigned workers = 1,
                              PayoffForm payoff = PayoffForm::Parity) {
    if (payoff == PayoffForm::Parity) {
        return estimate_expectation(
            [&](Engine& eng) {
                const double s = draw(eng);
                return 0.5 * (std::abs(s - strike) + s0 - strike);
            },
            n_paths, estimator, rng, workers);
    }
    return estimate_expectation([&](Engine& eng) { return std::max(draw(eng) - strike, 0.0); }, n_paths,
                                estimator, rng, workers);
}

namespace detail {

inline void check_call_inputs(const ModelSpec& model, double maturity, std::size_t n_paths,
                              Estimator estimator) {
    require(maturity > 0.0 && std::isfinite(maturity), ErrorKind::DomainError, "maturity must be > 0");
    require(n_paths >= 1000, ErrorKind::DomainError, "n_paths must be >= 1000");
    if (estimator.kind == EstimatorKind::Mean && has_infinite_variance(model)) {
        fail(ErrorKind::HeavyTailNeedsRobust,
             "payoff variance is infinite for stable jumps; use the median-of-means estimator");
    }
}

}  // namespace detail

/// E[(S_T - K_T)^+] for K_T = S0 + theta sqrt(T).
inline McEstimate estimate_call(const ModelSpec& model, const StrikeRule& strike, double maturity,
                                std::size_t n_paths, Estimator estimator, RngStream rng,
                                const McOptions& opts = {}) {
    detail::check_call_inputs(model, maturity, n_paths, estimator);
    const double s0 = model.s0();
    const double k = strike.strike(s0, maturity);
    PathConfig cfg{maturity, opts.n_steps, opts.truncation_eps};
    const PathSampler sampler(model, cfg);
    return estimate_call_with([&sampler](Engine& eng) { return sampler(eng).s; }, s0, k, n_paths, estimator,
                              rng, opts.workers, opts.payoff);
}

/// Stream for grid point `index` of a curve run on `rng`.
inline RngStream grid_stream(RngStream rng, std::size_t index) {
    return {rng.seed, rng.stream_id * 1000003u + index + 1};
}

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
    require(grid.size() >= 5, ErrorKind::DomainError, "maturity grid needs at least 5 points");
    const double ratio = grid[1] / grid[0];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] > 0.0 && std::isfinite(grid[i]), ErrorKind::DomainError, "maturities must be > 0");
        if (i == 0) continue;
        require(grid[i] < grid[i - 1], ErrorKind::DomainError, "maturity grid must be strictly decreasing");
        require(std::abs(grid[i] / grid[i - 1] - ratio) <= 1e-9 * ratio, ErrorKind::DomainError,
                "maturity grid must be geometric");
    }
}

}  // namespace detail

struct CurvePoint {
    double maturity = 0.0;
    McEstimate estimate;
};

/// Geometric grid start, start*ratio, ... (count points).
inline std::vector<double> geometric_grid(double start, double ratio, std::size_t count) {
    std::vector<double> grid;
    grid.reserve(count);
    double t = start;
    for (std::size_t i = 0; i < count; ++i, t *= ratio) grid.push_back(t);
    return grid;
}

/// Dyadic grid 2^-first, ..., 2^-last.
inline std::vector<double> dyadic_grid(int first, int last) {
    std::vector<double> grid;
    for (int k = first; k <= last; ++k) grid.push_back(std::ldexp(1.0, -k));
    return grid;
}

inline std::vector<CurvePoint> price_curve(const ModelSpec& model, const StrikeRule& strike,
                                           const std::vector<double>& grid, std::size_t n_paths,
                                           Estimator estimator, RngStream rng, const McOptions& opts = {}) {
    detail::check_grid(grid);
    std::vector<CurvePoint> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.push_back({grid[i], estimate_call(model, strike, grid[i], n_paths, estimator, grid_stream(rng, i), opts)});
    }
    return out;
}

/// Curve for a custom terminal law: make_draw(T) returns a callable Engine& -> S_T.
template <class MakeDraw>
std::vector<CurvePoint> price_curve_with(MakeDraw&& make_draw, double s0, const StrikeRule& strike,
                                         const std::vector<double>& grid, std::size_t n_paths,
                                         Estimator estimator, RngStream rng, unsigned workers = 1) {
    detail::check_grid(grid);
    std::vector<CurvePoint> out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto draw = make_draw(grid[i]);
        out.push_back({grid[i], estimate_call_with(draw, s0, strike.strike(s0, grid[i]), n_paths, estimator,
                                                   grid_stream(rng, i), workers)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rate fitting.

enum class RateModel { PurePower, PowerWithLog };

inline std::string_view to_string(RateModel m) {
    return m == RateModel::PurePower ? "PurePower" : "PowerWithLog";
}

struct RatePoint {
    double maturity = 0.0;
    double value = 0.0;
    std::optional<double> half_width;
};

struct RateFit {
    RateModel model_class = RateModel::PurePower;
    double coefficient_hat = 0.0;
    double exponent_hat = 0.0;  ///< fixed to 1 for PowerWithLog
    double r_squared = 0.0;
};

inline std::vector<RatePoint> to_rate_points(const std::vector<CurvePoint>& curve) {
    std::vector<RatePoint> pts;
    for (const auto& c : curve) pts.push_back({c.maturity, c.estimate.value, c.estimate.half_width});
    return pts;
}

/// PurePower: weighted least squares of log value on log T. PowerWithLog: weighted mean of
/// value / (T |log T|). Weights are inverse squared relative half-widths when given.
inline RateFit fit_rate(const std::vector<RatePoint>& points, RateModel model_class) {
    detail::require(points.size() >= 4, ErrorKind::DegenerateFit, "rate fit needs at least 4 points");
    std::vector<double> w(points.size(), 1.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        detail::require(p.maturity > 0.0 && std::isfinite(p.maturity), ErrorKind::DegenerateFit,
                        "maturities must be > 0");
        detail::require(p.value > 0.0 && std::isfinite(p.value), ErrorKind::DegenerateFit,
                        "values must be > 0 for a rate fit");
        if (model_class == RateModel::PowerWithLog) {
            detail::require(p.maturity < std::exp(-1.0), ErrorKind::DegenerateFit,
                            "PowerWithLog needs T < 1/e");
        }
        if (p.half_width && *p.half_width > 0.0) {
            const double rel = *p.half_width / p.value;
            w[i] = 1.0 / (rel * rel);
        }
    }
    double sw = 0.0;
    for (double x : w) sw += x;

    RateFit fit;
    fit.model_class = model_class;
    if (model_class == RateModel::PurePower) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            mx += w[i] * std::log(points[i].maturity);
            my += w[i] * std::log(points[i].value);
        }
        mx /= sw;
        my /= sw;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double dx = std::log(points[i].maturity) - mx;
            const double dy = std::log(points[i].value) - my;
            sxx += w[i] * dx * dx;
            sxy += w[i] * dx * dy;
            syy += w[i] * dy * dy;
        }
        detail::require(sxx > 0.0, ErrorKind::DegenerateFit, "maturities must not all coincide");
        fit.exponent_hat = sxy / sxx;
        fit.coefficient_hat = std::exp(my - fit.exponent_hat * mx);
        fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
        return fit;
    }
    double num = 0.0;
    double mean_v = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double rate = points[i].maturity * std::abs(std::log(points[i].maturity));
        num += w[i] * points[i].value / rate;
        mean_v += w[i] * points[i].value;
    }
    fit.coefficient_hat = num / sw;
    fit.exponent_hat = 1.0;
    mean_v /= sw;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double rate = points[i].maturity * std::abs(std::log(points[i].maturity));
        const double r = points[i].value - fit.coefficient_hat * rate;
        ss_res += w[i] * r * r;
        const double d = points[i].value - mean_v;
        ss_tot += w[i] * d * d;
    }
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Approximation error E|S_T - Z_T|.

/// Coefficient-continuity data: E[int |kappa_t - kappa_0|^beta F(dx)] = O(t^gamma).
struct ApproxCheckSpec {
    double beta = 2.0;
    double gamma = 1.0;
    bool pure_jump = false;  ///< no diffusion: rate (1+gamma)/beta instead of (1+gamma)/2

    double predicted_exponent() const {
        detail::check_param(beta >= 1.0 && beta <= 2.0, "beta", "[1, 2]", beta);
        detail::check_param(gamma >= 0.0, "gamma", ">= 0", gamma);
        return pure_jump ? (1.0 + gamma) / beta : (1.0 + gamma) / 2.0;
    }
};

struct ApproxCheckResult {
    RateFit fit;
    std::vector<CurvePoint> points;
    double predicted_exponent = 0.0;
    double margin = 0.1;
    bool passes = false;  ///< exponent_hat >= predicted_exponent - margin
};

/// Fits E|S_T - Z_T| from coupled draws along the grid. The bound is one-sided: the fitted
/// decay exponent must not fall below the predicted one by more than `margin`.
inline ApproxCheckResult approx_error_curve(const ModelSpec& model, const ApproxCheckSpec& spec,
                                            const std::vector<double>& grid, std::size_t n_paths,
                                            const McOptions& opts, RngStream rng, double margin = 0.1) {
    detail::require(model.get_if<FrozenLevy>() == nullptr, ErrorKind::DomainError,
                    "approx_error_curve needs an SDE model (Heston or LevySde)");
    detail::check_grid(grid);
    ApproxCheckResult out;
    out.predicted_exponent = spec.predicted_exponent();
    out.margin = margin;
    const Estimator est = has_infinite_variance(model) ? Estimator::median_of_means() : Estimator::mean();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const PathSampler sampler(model, PathConfig{grid[i], opts.n_steps, opts.truncation_eps});
        const McEstimate e = estimate_expectation(
            [&sampler](Engine& eng) {
                const CoupledDraw d = sampler(eng);
                return std::abs(d.s - d.z);
            },
            n_paths, est, grid_stream(rng, i), opts.workers);
        out.points.push_back({grid[i], e});
    }
    out.fit = fit_rate(to_rate_points(out.points), RateModel::PurePower);
    out.passes = out.fit.exponent_hat >= out.predicted_exponent - margin;
    return out;
}

}  // namespace smalltime
