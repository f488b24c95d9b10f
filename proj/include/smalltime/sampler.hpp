#pragma once

// Random generation for the supported models: exact terminal laws of the frozen Levy
// approximation, small-jump Gaussian substitution for tempered/truncated stable
// measures, and coupled (S_T, Z_T) path pairs for SDE models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "smalltime/asymptotics.hpp"
#include "smalltime/errors.hpp"
#include "smalltime/model.hpp"

namespace smalltime {

using Engine = std::mt19937_64;

/// Identifies an independent random stream; (seed, stream_id, substream) fully determines
/// the draws of an engine built by make_engine.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

inline Engine make_engine(RngStream stream, std::uint64_t substream = 0) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(stream.seed), hi(stream.seed), lo(stream.stream_id), hi(stream.stream_id),
                      lo(substream),   hi(substream),   0x5eedu};
    return Engine(seq);
}

struct PathConfig {
    double horizon = 1.0;
    int n_steps = 64;
    /// Small-jump cutoff for tempered/truncated stable measures; unset picks
    /// 0.05 * horizon^{1/alpha} with alpha the largest index carrying mass.
    std::optional<double> truncation_eps;
};

inline void validate(const PathConfig& cfg) {
    detail::check_param(cfg.horizon > 0.0 && std::isfinite(cfg.horizon), "horizon", "> 0", cfg.horizon);
    detail::check_param(cfg.n_steps >= 1, "n_steps", ">= 1", cfg.n_steps);
    if (cfg.truncation_eps) {
        detail::check_param(*cfg.truncation_eps > 0.0, "truncation_eps", "> 0", *cfg.truncation_eps);
    }
}

namespace detail {

template <class Eng>
double std_normal(Eng& eng) {
    return std::normal_distribution<double>(0.0, 1.0)(eng);
}

template <class Eng>
double uniform01(Eng& eng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

/// Inverse Gaussian by Michael-Schucany-Haas, written to avoid cancellation for tiny means.
template <class Eng>
double inverse_gaussian(double mean, double shape, Eng& eng) {
    const double n = std_normal(eng);
    const double a = mean * n * n / (2.0 * shape);
    const double x = mean / (1.0 + a + std::sqrt(a * a + 2.0 * a));
    return uniform01(eng) * (mean + x) <= mean ? x : mean * mean / x;
}

/// Chambers-Mallows-Stuck draw of S_alpha(scale, skew, 0), alpha in (1, 2).
template <class Eng>
double stable_cms(double alpha, double skew, double scale, Eng& eng) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    double v = 0.0;
    do {
        v = std::uniform_real_distribution<double>(-half_pi, half_pi)(eng);
    } while (v == -half_pi);
    double w = 0.0;
    do {
        w = std::exponential_distribution<double>(1.0)(eng);
    } while (w == 0.0);
    const double t = std::tan(alpha * half_pi);
    const double shift = std::atan(skew * t) / alpha;
    const double norm = std::pow(1.0 + skew * skew * t * t, 1.0 / (2.0 * alpha));
    const double x = norm * std::sin(alpha * (v + shift)) / std::pow(std::cos(v), 1.0 / alpha) *
                     std::pow(std::cos(v - alpha * (v + shift)) / w, (1.0 - alpha) / alpha);
    return scale * x;
}

inline double auto_truncation_eps(const std::array<PowerSide, 2>& sides, double horizon) {
    double alpha = 0.0;
    for (const auto& s : sides) {
        if (s.weight > 0.0) alpha = std::max(alpha, s.alpha);
    }
    if (alpha == 0.0) return 1.0;
    return 0.05 * std::pow(horizon, 1.0 / alpha);
}

}  // namespace detail

/// Compensated jump increment over a fixed time step dt.
///
/// CompoundPoisson, untruncated Stable, NIG and VarianceGamma are drawn from their exact
/// laws. Tempered and truncated stable measures are split at eps: jumps above eps arrive
/// as an exact compound Poisson stream, the rest is a centered Gaussian with the same
/// variance.
class JumpIncrement {
public:
    JumpIncrement(const JumpSpec& jumps, double dt, std::optional<double> eps = std::nullopt,
                  double eps_horizon = 0.0)
        : dt_(dt) {
        detail::require(dt > 0.0, ErrorKind::DomainError, "jump increment requires dt > 0");
        if (const auto* cp = jumps.get_if<CompoundPoisson>()) {
            Poisson p;
            double mean = 0.0;
            for (const auto& a : cp->atoms) {
                p.total_rate += a.intensity;
                p.cumulative.push_back(p.total_rate);
                p.sizes.push_back(a.size);
                mean += a.size * a.intensity;
            }
            p.mean_count = p.total_rate * dt;
            p.drift = -dt * mean;
            kind_ = std::move(p);
        } else if (const auto* nig = jumps.get_if<Nig>()) {
            const double delta = nig->rho * dt;
            kind_ = NigLaw{delta, delta * delta};
        } else if (const auto* vg = jumps.get_if<VarianceGamma>()) {
            kind_ = VgLaw{vg->c_plus * dt, 1.0 / vg->decay_plus, vg->c_minus * dt, 1.0 / vg->decay_minus,
                          -dt * (vg->c_plus / vg->decay_plus - vg->c_minus / vg->decay_minus)};
        } else if (const auto* st = jumps.get_if<Stable>(); st != nullptr && !st->truncate_at) {
            const double total = st->f_plus + st->f_minus;
            if (total == 0.0) {
                kind_ = Zero{};
            } else {
                const double scale =
                    std::pow(total * stable_scale_factor(st->alpha) * dt, 1.0 / st->alpha);
                kind_ = StableLaw{st->alpha, (st->f_plus - st->f_minus) / total, scale};
            }
        } else {
            const auto sides = *jumps.power_sides();
            const double horizon = eps_horizon > 0.0 ? eps_horizon : dt;
            const double cut = eps.value_or(detail::auto_truncation_eps(sides, horizon));
            detail::require(cut > 0.0, ErrorKind::DomainError, "truncation_eps must be > 0");
            Series s;
            s.eps = cut;
            double small_var = 0.0;
            double tail_mean = 0.0;
            for (std::size_t i = 0; i < 2; ++i) {
                const auto& side = sides[i];
                small_var += side.moment(2.0, 0.0, cut);
                const double m = side.moment(1.0, cut);
                tail_mean += i == 0 ? m : -m;
                TailSide t;
                t.alpha = side.alpha;
                t.decay = side.decay;
                t.lo = cut;
                t.cap = side.cap;
                t.mean_count = dt * side.moment(0.0, cut);
                t.sign = i == 0 ? 1.0 : -1.0;
                s.tails[i] = t;
            }
            s.small_sd = std::sqrt(dt * small_var);
            s.drift = -dt * tail_mean;
            kind_ = s;
        }
    }

    bool exact() const noexcept { return !std::holds_alternative<Series>(kind_); }
    double dt() const noexcept { return dt_; }
    /// Small-jump cutoff, when the increment uses the Gaussian substitute.
    std::optional<double> truncation_eps() const {
        if (const auto* s = std::get_if<Series>(&kind_)) return s->eps;
        return std::nullopt;
    }
    /// True when the increment has infinite variance.
    bool heavy_tailed() const noexcept { return std::holds_alternative<StableLaw>(kind_); }

    template <class Eng>
    double operator()(Eng& eng) const {
        return std::visit([&eng](const auto& k) { return k.draw(eng); }, kind_);
    }

private:
    struct Zero {
        template <class Eng>
        double draw(Eng&) const {
            return 0.0;
        }
    };

    struct Poisson {
        std::vector<double> cumulative;  // running sum of intensities
        std::vector<double> sizes;
        double total_rate = 0.0;
        double mean_count = 0.0;
        double drift = 0.0;

        template <class Eng>
        double draw(Eng& eng) const {
            if (mean_count == 0.0) return 0.0;
            const long count = std::poisson_distribution<long>(mean_count)(eng);
            double x = drift;
            for (long j = 0; j < count; ++j) {
                const double u = detail::uniform01(eng) * total_rate;
                const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                       sizes.size() - 1);
                x += sizes[idx];
            }
            return x;
        }
    };

    struct StableLaw {
        double alpha;
        double skew;
        double scale;

        template <class Eng>
        double draw(Eng& eng) const {
            return detail::stable_cms(alpha, skew, scale, eng);
        }
    };

    struct NigLaw {
        double ig_mean;
        double ig_shape;

        template <class Eng>
        double draw(Eng& eng) const {
            const double y = detail::inverse_gaussian(ig_mean, ig_shape, eng);
            return std::sqrt(y) * detail::std_normal(eng);
        }
    };

    struct VgLaw {
        double shape_up;
        double scale_up;
        double shape_down;
        double scale_down;
        double drift;

        template <class Eng>
        double draw(Eng& eng) const {
            double x = drift;
            if (shape_up > 0.0) x += std::gamma_distribution<double>(shape_up, scale_up)(eng);
            if (shape_down > 0.0) x -= std::gamma_distribution<double>(shape_down, scale_down)(eng);
            return x;
        }
    };

    struct TailSide {
        double alpha = 1.0;
        double decay = 0.0;
        double lo = 0.0;
        double cap = std::numeric_limits<double>::infinity();
        double mean_count = 0.0;
        double sign = 1.0;

        // Pareto proposal on (lo, cap] thinned by exp(-decay (x - lo)).
        template <class Eng>
        double draw(Eng& eng) const {
            if (mean_count == 0.0) return 0.0;
            const long count = std::poisson_distribution<long>(mean_count)(eng);
            const double lo_pow = std::pow(lo, -alpha);
            const double span = std::isinf(cap) ? lo_pow : lo_pow - std::pow(cap, -alpha);
            double sum = 0.0;
            for (long j = 0; j < count; ++j) {
                for (;;) {
                    const double u = detail::uniform01(eng);
                    const double x = std::pow(lo_pow - u * span, -1.0 / alpha);
                    if (decay == 0.0 || detail::uniform01(eng) <= std::exp(-decay * (x - lo))) {
                        sum += x;
                        break;
                    }
                }
            }
            return sign * sum;
        }
    };

    struct Series {
        std::array<TailSide, 2> tails;
        double small_sd = 0.0;
        double drift = 0.0;
        double eps = 0.0;

        template <class Eng>
        double draw(Eng& eng) const {
            double x = drift + tails[0].draw(eng) + tails[1].draw(eng);
            if (small_sd > 0.0) x += small_sd * detail::std_normal(eng);
            return x;
        }
    };

    double dt_;
    std::variant<Zero, Poisson, StableLaw, NigLaw, VgLaw, Series> kind_;
};

/// True when S_T has infinite variance (untruncated stable jumps with mass).
inline bool has_infinite_variance(const ModelSpec& model) {
    const JumpSpec* jumps = nullptr;
    if (const auto* m = model.get_if<FrozenLevy>()) jumps = m->jumps ? &*m->jumps : nullptr;
    if (const auto* m = model.get_if<LevySde>()) jumps = m->driver_jumps ? &*m->driver_jumps : nullptr;
    if (jumps == nullptr) return false;
    const auto* st = jumps->get_if<Stable>();
    return st != nullptr && !st->truncate_at && st->f_plus + st->f_minus > 0.0;
}

/// Z_T = S0 + sigma0 W_T + J_T for a FrozenLevy model.
class FrozenTerminalSampler {
public:
    FrozenTerminalSampler(const FrozenLevy& model, double maturity,
                          std::optional<double> truncation_eps = std::nullopt, bool exact_only = true)
        : s0_(model.s0), diffusion_sd_(model.sigma0 * std::sqrt(maturity)) {
        detail::require(maturity > 0.0 && std::isfinite(maturity), ErrorKind::DomainError,
                        "sampling requires T > 0");
        if (model.jumps) {
            jumps_.emplace(*model.jumps, maturity, truncation_eps, maturity);
            if (exact_only && !jumps_->exact()) {
                detail::fail(ErrorKind::UnsupportedExact,
                             std::string(model.jumps->type_name()) +
                                 " jumps with truncation or tempering have no exact sampler; use sample_path");
            }
        }
    }

    template <class Eng>
    double operator()(Eng& eng) const {
        double z = s0_;
        if (diffusion_sd_ > 0.0) z += diffusion_sd_ * detail::std_normal(eng);
        if (jumps_) z += (*jumps_)(eng);
        return z;
    }

    const std::optional<JumpIncrement>& jumps() const noexcept { return jumps_; }

private:
    double s0_;
    double diffusion_sd_;
    std::optional<JumpIncrement> jumps_;
};

/// One exact draw of Z_T for a FrozenLevy model.
template <class Eng>
double sample_terminal(const ModelSpec& model, double maturity, Eng& eng) {
    const auto* frozen = model.get_if<FrozenLevy>();
    detail::require(frozen != nullptr, ErrorKind::UnsupportedExact,
                    "exact terminal sampling is only available for FrozenLevy models");
    return FrozenTerminalSampler(*frozen, maturity)(eng);
}

/// Terminal value S_T and its frozen approximation Z_T driven by the same noise.
struct CoupledDraw {
    double s = 0.0;
    double z = 0.0;
};

/// Coupled (S_T, Z_T) generator for any model.
///
/// FrozenLevy: S = Z, a single terminal draw (jumps beyond the exact families use the
/// small-jump substitute). Heston: full-truncation Euler for v, log-Euler for S given v,
/// Z = S0 + S0 sqrt(v0) W_T on the same W. LevySde: Euler S_{k+1} = S_k + f(S_k) dL_k,
/// Z = S0 + f(S0) L_T on the same increments.
class PathSampler {
public:
    PathSampler(const ModelSpec& model, const PathConfig& cfg) : model_(model), cfg_(cfg) {
        validate(cfg);
        if (const auto* m = model.get_if<FrozenLevy>()) {
            frozen_.emplace(*m, cfg.horizon, cfg.truncation_eps, false);
            return;
        }
        detail::require(cfg.n_steps >= 16, ErrorKind::StepCountTooSmall,
                        "SDE models need n_steps >= 16, got " + std::to_string(cfg.n_steps));
        dt_ = cfg.horizon / cfg.n_steps;
        if (const auto* m = model.get_if<LevySde>(); m != nullptr && m->driver_jumps) {
            driver_jumps_.emplace(*m->driver_jumps, dt_, cfg.truncation_eps, cfg.horizon);
        }
    }

    template <class Eng>
    CoupledDraw operator()(Eng& eng) const {
        if (frozen_) {
            const double z = (*frozen_)(eng);
            return {z, z};
        }
        if (const auto* h = model_.get_if<Heston>()) return heston(*h, eng);
        return levy_sde(*model_.get_if<LevySde>(), eng);
    }

    const PathConfig& config() const noexcept { return cfg_; }

private:
    template <class Eng>
    CoupledDraw heston(const Heston& h, Eng& eng) const {
        const double sqrt_dt = std::sqrt(dt_);
        const double rho = h.correlation;
        const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        double v = h.v0;
        double log_s = std::log(h.s0);
        double w = 0.0;
        for (int k = 0; k < cfg_.n_steps; ++k) {
            const double z1 = detail::std_normal(eng);
            const double z2 = detail::std_normal(eng);
            const double vp = std::max(v, 0.0);
            const double dw = sqrt_dt * (rho * z1 + rho_bar * z2);
            log_s += -0.5 * vp * dt_ + std::sqrt(vp) * dw;
            w += dw;
            v += h.mean_reversion * (h.long_run_var - vp) * dt_ + h.vol_of_vol * std::sqrt(vp) * sqrt_dt * z1;
        }
        return {std::exp(log_s), h.s0 + h.s0 * std::sqrt(h.v0) * w};
    }

    template <class Eng>
    CoupledDraw levy_sde(const LevySde& m, Eng& eng) const {
        const double sqrt_dt = std::sqrt(dt_);
        double s = m.s0;
        double driver = 0.0;
        for (int k = 0; k < cfg_.n_steps; ++k) {
            double dl = 0.0;
            if (m.driver_sigma > 0.0) dl += m.driver_sigma * sqrt_dt * detail::std_normal(eng);
            if (driver_jumps_) dl += (*driver_jumps_)(eng);
            s += m.coefficient(s) * dl;
            driver += dl;
        }
        return {s, m.s0 + m.coefficient(m.s0) * driver};
    }

    ModelSpec model_;
    PathConfig cfg_;
    double dt_ = 0.0;
    std::optional<FrozenTerminalSampler> frozen_;
    std::optional<JumpIncrement> driver_jumps_;
};

template <class Eng>
CoupledDraw sample_path(const ModelSpec& model, const PathConfig& cfg, Eng& eng) {
    return PathSampler(model, cfg)(eng);
}

/// Draw from N(0, T^{1 + 2 eps}): a martingale marginal whose ATM call price is
/// T^{1/2 + eps} / sqrt(2 pi), i.e. not of order sqrt(T).
template <class Eng>
double gaussian_exact_power_model(double eps_exponent, double maturity, Eng& eng) {
    detail::require(eps_exponent > 0.0, ErrorKind::DomainError, "eps_exponent must be > 0");
    detail::require(maturity > 0.0, ErrorKind::DomainError, "T must be > 0");
    return std::pow(maturity, 0.5 + eps_exponent) * detail::std_normal(eng);
}

}  // namespace smalltime
