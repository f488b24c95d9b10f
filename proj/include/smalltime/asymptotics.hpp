#pragma once

// Leading-order ATM call asymptotics: regime classification, the constants of each
// regime, reference absolute moments and the implied-volatility asymptotes.

#include <cmath>
#include <numbers>
#include <utility>

#include "smalltime/errors.hpp"
#include "smalltime/model.hpp"
#include "smalltime/specialfn.hpp"

namespace smalltime {

/// E[N(-theta, sigma0^2)^+], the coefficient of sqrt(T) for K_T = S0 + theta sqrt(T).
inline double diffusive_coefficient(double sigma0, double theta) {
    detail::require(sigma0 >= 0.0 && std::isfinite(sigma0), ErrorKind::DomainError,
                    "diffusive_coefficient requires sigma0 >= 0");
    if (sigma0 == 0.0) return std::max(-theta, 0.0);
    const double z = theta / sigma0;
    return sigma0 * std_normal_pdf(z) - theta * std_normal_cdf(-z);
}

/// mu + |mean| for a finite-variation jump measure; the ATM call coefficient of T is half of it.
inline double fv_constant(const JumpSpec& jumps) {
    if (std::holds_alternative<StableLikeData>(stable_like_data(jumps))) {
        detail::fail(ErrorKind::NotFiniteVariation,
                     std::string(jumps.type_name()) + " jumps have infinite variation");
    }
    const AbsMoment m = first_abs_moment(jumps);
    return m.mu + std::abs(m.mean);
}

namespace detail {

inline void check_stable_args(double alpha, double f_plus, double f_minus) {
    require(alpha > 1.0 && alpha < 2.0, ErrorKind::DomainError,
            "stable constant requires alpha in (1, 2), got " + fmt_value(alpha));
    require(f_plus >= 0.0 && f_minus >= 0.0, ErrorKind::DomainError,
            "stable constant requires f_plus, f_minus >= 0");
}

}  // namespace detail

/// C(alpha, f_+, f_-): the first absolute moment at T = 1 of a strictly stable law with index
/// alpha, skewness (f_+ - f_-)/(f_+ + f_-) and scale (f_+ + f_-)^{1/alpha}.
inline double stable_constant(double alpha, double f_plus, double f_minus) {
    detail::check_stable_args(alpha, f_plus, f_minus);
    const double total = f_plus + f_minus;
    if (total == 0.0) return 0.0;
    const double skew = (f_plus - f_minus) / total;
    const double tan_a = std::tan(alpha * std::numbers::pi / 2.0);
    const double bracket = std::pow(1.0 + skew * skew * tan_a * tan_a, 1.0 / (2.0 * alpha));
    return 2.0 / std::numbers::pi * std::pow(total, 1.0 / alpha) * gamma_fn(1.0 - 1.0 / alpha) * bracket *
           std::cos(std::atan(skew * tan_a) / alpha);
}

/// Gamma(-alpha) |cos(alpha pi / 2)| for alpha in (1, 2): a Levy density f / |x|^{1+alpha} on
/// both sides gives a stable law with scale^alpha = 2 f * stable_scale_factor(alpha) per unit time.
inline double stable_scale_factor(double alpha) {
    detail::require(alpha > 1.0 && alpha < 2.0, ErrorKind::DomainError,
                    "stable_scale_factor requires alpha in (1, 2)");
    const double gamma_neg = gamma_fn(2.0 - alpha) / (alpha * (alpha - 1.0));
    return gamma_neg * std::abs(std::cos(alpha * std::numbers::pi / 2.0));
}

/// E|Z_1| for the compensated Levy process with density f_+/x^{1+alpha}, f_-/|x|^{1+alpha}.
inline double stable_density_constant(double alpha, double f_plus, double f_minus) {
    detail::check_stable_args(alpha, f_plus, f_minus);
    const double k = stable_scale_factor(alpha);
    return stable_constant(alpha, k * f_plus, k * f_minus);
}

struct StableLikeConstant {
    double alpha = 0.0;
    double constant = 0.0;
};

namespace detail {

template <class ConstantFn>
StableLikeConstant dispatch_stable_like(double alpha_plus, double alpha_minus, double f_plus,
                                        double f_minus, ConstantFn constant) {
    const double alpha = std::max(alpha_plus, alpha_minus);
    require(alpha > 1.0 && alpha < 2.0, ErrorKind::DomainError,
            "stable-like constant requires max(alpha_plus, alpha_minus) in (1, 2), got " + fmt_value(alpha));
    if (alpha_plus == alpha_minus) return {alpha, constant(alpha, f_plus, f_minus)};
    if (alpha_plus > alpha_minus) return {alpha, constant(alpha_plus, f_plus, 0.0)};
    return {alpha, constant(alpha_minus, 0.0, f_minus)};
}

}  // namespace detail

/// C(alpha_+, alpha_-, f_+, f_-): the larger index dominates and the other side drops out.
inline StableLikeConstant stable_like_constant(double alpha_plus, double alpha_minus, double f_plus,
                                               double f_minus) {
    return detail::dispatch_stable_like(alpha_plus, alpha_minus, f_plus, f_minus, stable_constant);
}

/// As stable_like_constant, with f_+/f_- read as Levy-density limits.
inline StableLikeConstant stable_like_density_constant(double alpha_plus, double alpha_minus,
                                                       double f_plus, double f_minus) {
    return detail::dispatch_stable_like(alpha_plus, alpha_minus, f_plus, f_minus, stable_density_constant);
}

/// Coefficient of T|log T| in E|S_T - S0| for symmetric (1,1)-stable-like small jumps.
inline double one_log_constant(double f_plus, double f_minus) {
    detail::require(f_plus >= 0.0 && f_minus >= 0.0, ErrorKind::DomainError,
                    "one_log_constant requires f_plus, f_minus >= 0");
    detail::require(f_plus == f_minus, ErrorKind::AsymmetricOneStable,
                    "T|log T| constant is only known for f_plus == f_minus");
    return f_plus + f_minus;
}

/// C(alpha, f_+, f_-) T^{1/alpha}.
inline double stable_abs_moment(double alpha, double f_plus, double f_minus, double maturity) {
    detail::require(maturity > 0.0, ErrorKind::DomainError, "stable_abs_moment requires T > 0");
    return stable_constant(alpha, f_plus, f_minus) * std::pow(maturity, 1.0 / alpha);
}

/// E|Z_T| with Z the Levy process of the density f_pm / |x|^{1+alpha}.
inline double stable_density_abs_moment(double alpha, double f_plus, double f_minus, double maturity) {
    detail::require(maturity > 0.0, ErrorKind::DomainError, "stable_density_abs_moment requires T > 0");
    return stable_density_constant(alpha, f_plus, f_minus) * std::pow(maturity, 1.0 / alpha);
}

/// E|Z_T| for the symmetric NIG process with density (rho / (pi |x|)) K_1(|x|).
inline double nig_abs_moment(double rho, double maturity) {
    detail::require(rho > 0.0 && std::isfinite(rho), ErrorKind::DomainError, "nig_abs_moment requires rho > 0");
    detail::require(maturity > 0.0 && std::isfinite(maturity), ErrorKind::DomainError,
                    "nig_abs_moment requires T > 0");
    const double x = rho * maturity;
    return 2.0 * rho / std::numbers::pi * std::exp(x) * maturity * bessel_k(0, x);
}

// ---------------------------------------------------------------------------
// Classification.

namespace detail {

/// Time-zero data of the frozen approximation Z = S0 + sigma0 W + scale * (driver jumps).
struct FrozenData {
    double sigma0 = 0.0;
    const JumpSpec* jumps = nullptr;
    double jump_scale = 1.0;
};

inline FrozenData frozen_data(const ModelSpec& model) {
    if (const auto* m = model.get_if<FrozenLevy>()) {
        return {m->sigma0, m->jumps ? &*m->jumps : nullptr, 1.0};
    }
    if (const auto* m = model.get_if<Heston>()) return {m->s0 * std::sqrt(m->v0), nullptr, 1.0};
    const auto& m = *model.get_if<LevySde>();
    const double f0 = m.coefficient(m.s0);
    return {std::abs(f0) * m.driver_sigma, (m.driver_jumps && f0 != 0.0) ? &*m.driver_jumps : nullptr, f0};
}

/// Stable-like data of scale * L given the data of L.
inline StableLikeData scale_stable_like(StableLikeData d, double scale) {
    const double a = std::abs(scale);
    StableLikeData out{d.alpha_plus, d.alpha_minus, d.f_plus * std::pow(a, d.alpha_plus),
                       d.f_minus * std::pow(a, d.alpha_minus)};
    if (scale < 0.0) {
        std::swap(out.alpha_plus, out.alpha_minus);
        std::swap(out.f_plus, out.f_minus);
    }
    return out;
}

struct PureJumpLeading {
    OrderClass order = OrderClass::trivial();
    double abs_coefficient = 0.0;  // coefficient of rate(T) in E|Z_T - S0|
};

inline PureJumpLeading pure_jump_leading(const JumpSpec& jumps, double scale) {
    const SmallJumpData data = stable_like_data(jumps);
    if (std::holds_alternative<FiniteVariation>(data)) {
        const double c = fv_constant(jumps) * std::abs(scale);
        if (c == 0.0) return {};
        return {OrderClass::linear_t(), c};
    }
    const StableLikeData d = scale_stable_like(std::get<StableLikeData>(data), scale);
    // A side without mass does not take part in the index comparison.
    const double a_plus = d.f_plus > 0.0 ? d.alpha_plus : 0.0;
    const double a_minus = d.f_minus > 0.0 ? d.alpha_minus : 0.0;
    const double alpha = std::max(a_plus, a_minus);
    if (alpha > 1.0) {
        const auto [idx, c] = stable_like_density_constant(a_plus, a_minus, d.f_plus, d.f_minus);
        return {OrderClass::power_t(1.0 / idx), c};
    }
    if (a_plus != 1.0 || a_minus != 1.0) {
        fail(ErrorKind::AsymmetricOneStable,
             "index 1 on one side only (alpha_plus=" + fmt_value(a_plus) + ", alpha_minus=" + fmt_value(a_minus) +
                 "): the T|log T| constant requires alpha_plus = alpha_minus = 1 and f_plus = f_minus");
    }
    return {OrderClass::t_log_t(), one_log_constant(d.f_plus, d.f_minus)};
}

}  // namespace detail

/// Leading term of the call price under strike rule K_T = S0 + theta sqrt(T).
///
/// Whenever the frozen diffusion coefficient sigma0 is nonzero the order is sqrt(T) and
/// jumps do not enter the coefficient. Pure-jump models are only classified ATM. For
/// stable-like small jumps the coefficient uses the Levy-density normalization
/// (stable_like_density_constant); see stable_scale_factor.
inline AsymptoticResult classify(const ModelSpec& model, const StrikeRule& strike) {
    const detail::FrozenData frozen = detail::frozen_data(model);
    const double theta = strike.theta();
    if (frozen.sigma0 > 0.0) {
        return {OrderClass::sqrt_t(), diffusive_coefficient(frozen.sigma0, theta), theta};
    }
    if (frozen.jumps == nullptr) {
        // Deterministic frozen model: only the intrinsic value (S0 - K_T)^+ survives.
        if (theta < 0.0) return {OrderClass::sqrt_t(), -theta, theta};
        return {OrderClass::trivial(), 0.0, theta};
    }
    const auto leading = detail::pure_jump_leading(*frozen.jumps, frozen.jump_scale);
    if (theta != 0.0) {
        detail::fail(ErrorKind::UnsupportedStrike,
                     "theta != 0 is only supported when the frozen diffusion coefficient is nonzero");
    }
    if (leading.abs_coefficient == 0.0) return {OrderClass::trivial(), 0.0, 0.0};
    return {leading.order, 0.5 * leading.abs_coefficient, 0.0};
}

inline AsymptoticResult classify(const ModelSpec& model) { return classify(model, StrikeRule(0.0)); }

/// coefficient * rate(T).
inline double leading_price(const AsymptoticResult& result, double maturity) {
    detail::require(maturity > 0.0 && std::isfinite(maturity), ErrorKind::DomainError,
                    "leading_price requires T > 0");
    if (result.order.tag() == OrderTag::Trivial) return 0.0;
    return result.coefficient * result.order.rate(maturity);
}

// ---------------------------------------------------------------------------
// Implied volatility asymptotes.

enum class AsymptoteForm { Constant, SqrtT, PowerT, SqrtTLogT };

inline std::string_view to_string(AsymptoteForm form) {
    switch (form) {
    case AsymptoteForm::Constant: return "Constant";
    case AsymptoteForm::SqrtT: return "SqrtT";
    case AsymptoteForm::PowerT: return "PowerT";
    case AsymptoteForm::SqrtTLogT: return "SqrtTLogT";
    }
    return "Unknown";
}

/// sigma_impl(T) ~ coefficient * form(T); for PowerT the form is T^exponent.
struct ImpliedVolAsymptote {
    AsymptoteForm form = AsymptoteForm::Constant;
    double coefficient = 0.0;
    double exponent = 0.0;

    double operator()(double maturity) const {
        switch (form) {
        case AsymptoteForm::Constant: return coefficient;
        case AsymptoteForm::SqrtT: return coefficient * std::sqrt(maturity);
        case AsymptoteForm::PowerT: return coefficient * std::pow(maturity, exponent);
        case AsymptoteForm::SqrtTLogT: return coefficient * std::sqrt(maturity) * std::abs(std::log(maturity));
        }
        return 0.0;
    }
};

/// From S0 [Phi(x) - Phi(-x)] ~ sqrt(2/pi) S0 x: sigma_impl ~ sqrt(2 pi) * price / (S0 sqrt(T)).
inline ImpliedVolAsymptote implied_vol_asymptote(const ModelSpec& model) {
    const double s0 = model.s0();
    detail::require(s0 > 0.0, ErrorKind::DomainError, "implied_vol_asymptote requires S0 > 0");
    const AsymptoticResult res = classify(model);
    const double scale = std::sqrt(2.0 * std::numbers::pi) * res.coefficient / s0;
    switch (res.order.tag()) {
    case OrderTag::Trivial: return {AsymptoteForm::Constant, 0.0, 0.0};
    case OrderTag::SqrtT: return {AsymptoteForm::Constant, scale, 0.0};
    case OrderTag::LinearT: return {AsymptoteForm::SqrtT, scale, 0.5};
    case OrderTag::PowerT: return {AsymptoteForm::PowerT, scale, res.order.exponent() - 0.5};
    case OrderTag::TLogT: return {AsymptoteForm::SqrtTLogT, scale, 0.5};
    }
    return {};
}

}  // namespace smalltime
