#pragma once

// Model descriptions: Levy jump measures, martingale models, strikes and the
// leading-order result types. Every type validates its parameters on construction
// and is immutable afterwards.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smalltime/errors.hpp"
#include "smalltime/quadrature.hpp"
#include "smalltime/specialfn.hpp"

namespace smalltime {

namespace detail {

inline std::string fmt_value(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void check_param(bool ok, std::string_view field, std::string_view range, double value) {
    if (!ok) {
        fail(ErrorKind::InvalidParameter, std::string(field) + " must satisfy " + std::string(range) +
                                              " (got " + fmt_value(value) + ")");
    }
}

inline void check_finite(std::string_view field, double value) {
    check_param(std::isfinite(value), field, "finite", value);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Jump measures. Each variant is the Levy measure nu itself (the pushforward of
// the jump-size kernel), so constants depend on nothing else.

struct Atom {
    double size = 0.0;
    double intensity = 0.0;
};

/// Finitely many jump sizes, each arriving at its own Poisson intensity.
struct CompoundPoisson {
    std::vector<Atom> atoms;
};

/// Levy density f_plus / x^{1+alpha} on x > 0 and f_minus / |x|^{1+alpha} on x < 0,
/// optionally restricted to |x| <= truncate_at.
struct Stable {
    double alpha = 1.5;
    double f_plus = 0.0;
    double f_minus = 0.0;
    std::optional<double> truncate_at;
};

/// CGMY-style density c_+ e^{-decay_+ x} / x^{1+alpha_+} on x > 0, mirrored on x < 0.
struct TemperedStable {
    double alpha_plus = 1.5;
    double alpha_minus = 1.5;
    double c_plus = 0.0;
    double c_minus = 0.0;
    double decay_plus = 1.0;
    double decay_minus = 1.0;
    std::optional<double> truncate_at;
};

/// Symmetric normal inverse Gaussian: density (rho / (pi |x|)) K_1(|x|).
struct Nig {
    double rho = 1.0;
};

/// Density c e^{-decay |x|} / |x| on each side.
struct VarianceGamma {
    double c_plus = 0.0;
    double c_minus = 0.0;
    double decay_plus = 1.0;
    double decay_minus = 1.0;
};

namespace detail {

/// One half-line of a power-law density: weight * e^{-decay x} * x^{-1-alpha} on (0, cap].
struct PowerSide {
    double alpha = 1.0;
    double weight = 0.0;
    double decay = 0.0;
    double cap = std::numeric_limits<double>::infinity();

    /// weight * integral over (lo, hi] of x^{p-1-alpha} e^{-decay x} dx.
    double moment(double p, double lo = 0.0,
                  double hi = std::numeric_limits<double>::infinity()) const {
        if (weight == 0.0) return 0.0;
        hi = std::min(hi, cap);
        if (!(lo < hi)) return 0.0;
        const double e = p - alpha;
        const bool to_inf = std::isinf(hi);
        if (lo == 0.0 && e <= 0.0) return std::numeric_limits<double>::infinity();
        if (decay == 0.0) {
            if (to_inf && e >= 0.0) return std::numeric_limits<double>::infinity();
            if (e == 0.0) return weight * std::log(hi / lo);
            const double upper = to_inf ? 0.0 : std::pow(hi, e);
            const double lower = lo == 0.0 ? 0.0 : std::pow(lo, e);
            return weight * (upper - lower) / e;
        }
        if (lo == 0.0 && to_inf) return weight * gamma_fn(e) * std::pow(decay, -e);
        // Substitute x = exp(u); the integrand exp(e u - decay e^u) is smooth.
        const double u_hi = to_inf ? std::log((std::abs(e) + 750.0) / decay) + 1.0 : std::log(hi);
        const double u_lo = lo == 0.0 ? u_hi - 45.0 / e : std::log(lo);
        if (!(u_lo < u_hi)) return 0.0;
        auto integrand = [e, this](double u) { return std::exp(e * u - decay * std::exp(u)); };
        return weight * quad::integrate(integrand, u_lo, u_hi, 1e-300, 1e-12);
    }
};

}  // namespace detail

class JumpSpec {
public:
    using Variant = std::variant<CompoundPoisson, Stable, TemperedStable, Nig, VarianceGamma>;

    JumpSpec(CompoundPoisson p) : params_(validate(std::move(p))) {}
    JumpSpec(Stable p) : params_(validate(p)) {}
    JumpSpec(TemperedStable p) : params_(validate(p)) {}
    JumpSpec(Nig p) : params_(validate(p)) {}
    JumpSpec(VarianceGamma p) : params_(validate(p)) {}

    const Variant& params() const noexcept { return params_; }

    template <class T>
    const T* get_if() const noexcept {
        return std::get_if<T>(&params_);
    }

    std::string_view type_name() const {
        return std::visit(
            [](const auto& p) -> std::string_view {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, CompoundPoisson>) return "CompoundPoisson";
                else if constexpr (std::is_same_v<T, Stable>) return "Stable";
                else if constexpr (std::is_same_v<T, TemperedStable>) return "TemperedStable";
                else if constexpr (std::is_same_v<T, Nig>) return "NIG";
                else return "VarianceGamma";
            },
            params_);
    }

    /// Positive and negative half-lines for the power-law families; empty otherwise.
    std::optional<std::array<detail::PowerSide, 2>> power_sides() const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        if (const auto* s = get_if<Stable>()) {
            const double cap = s->truncate_at.value_or(inf);
            return std::array<detail::PowerSide, 2>{detail::PowerSide{s->alpha, s->f_plus, 0.0, cap},
                                                    detail::PowerSide{s->alpha, s->f_minus, 0.0, cap}};
        }
        if (const auto* t = get_if<TemperedStable>()) {
            const double cap = t->truncate_at.value_or(inf);
            return std::array<detail::PowerSide, 2>{
                detail::PowerSide{t->alpha_plus, t->c_plus, t->decay_plus, cap},
                detail::PowerSide{t->alpha_minus, t->c_minus, t->decay_minus, cap}};
        }
        return std::nullopt;
    }

private:
    static CompoundPoisson validate(CompoundPoisson p) {
        for (std::size_t i = 0; i < p.atoms.size(); ++i) {
            const std::string base = "atoms[" + std::to_string(i) + "]";
            detail::check_param(std::isfinite(p.atoms[i].size) && p.atoms[i].size != 0.0,
                                base + ".size", "finite and != 0", p.atoms[i].size);
            detail::check_param(std::isfinite(p.atoms[i].intensity) && p.atoms[i].intensity > 0.0,
                                base + ".intensity", "> 0", p.atoms[i].intensity);
        }
        return p;
    }

    static void validate_truncation(const std::optional<double>& r) {
        if (r) detail::check_param(*r > 0.0 && std::isfinite(*r), "truncate_at", "> 0", *r);
    }

    static Stable validate(Stable p) {
        detail::check_param(p.alpha > 0.0 && p.alpha < 2.0, "alpha", "(0, 2)", p.alpha);
        detail::check_param(p.f_plus >= 0.0 && std::isfinite(p.f_plus), "f_plus", ">= 0", p.f_plus);
        detail::check_param(p.f_minus >= 0.0 && std::isfinite(p.f_minus), "f_minus", ">= 0", p.f_minus);
        validate_truncation(p.truncate_at);
        // Without truncation the tails must be integrable: alpha > 1 wherever there is mass.
        if (!p.truncate_at && p.f_plus + p.f_minus > 0.0) {
            detail::check_param(p.alpha > 1.0, "alpha",
                                "(1, 2) for an untruncated Stable (first moment must exist; "
                                "set truncate_at otherwise)",
                                p.alpha);
        }
        return p;
    }

    static TemperedStable validate(TemperedStable p) {
        detail::check_param(p.alpha_plus > 0.0 && p.alpha_plus < 2.0, "alpha_plus", "(0, 2)", p.alpha_plus);
        detail::check_param(p.alpha_minus > 0.0 && p.alpha_minus < 2.0, "alpha_minus", "(0, 2)",
                            p.alpha_minus);
        detail::check_param(p.c_plus >= 0.0 && std::isfinite(p.c_plus), "c_plus", ">= 0", p.c_plus);
        detail::check_param(p.c_minus >= 0.0 && std::isfinite(p.c_minus), "c_minus", ">= 0", p.c_minus);
        detail::check_param(p.decay_plus > 0.0 && std::isfinite(p.decay_plus), "decay_plus", "> 0",
                            p.decay_plus);
        detail::check_param(p.decay_minus > 0.0 && std::isfinite(p.decay_minus), "decay_minus", "> 0",
                            p.decay_minus);
        validate_truncation(p.truncate_at);
        return p;
    }

    static Nig validate(Nig p) {
        detail::check_param(p.rho > 0.0 && std::isfinite(p.rho), "rho", "> 0", p.rho);
        return p;
    }

    static VarianceGamma validate(VarianceGamma p) {
        detail::check_param(p.c_plus >= 0.0 && std::isfinite(p.c_plus), "c_plus", ">= 0", p.c_plus);
        detail::check_param(p.c_minus >= 0.0 && std::isfinite(p.c_minus), "c_minus", ">= 0", p.c_minus);
        detail::check_param(p.decay_plus > 0.0 && std::isfinite(p.decay_plus), "decay_plus", "> 0",
                            p.decay_plus);
        detail::check_param(p.decay_minus > 0.0 && std::isfinite(p.decay_minus), "decay_minus", "> 0",
                            p.decay_minus);
        return p;
    }

    Variant params_;
};

// ---------------------------------------------------------------------------
// Small-jump boundary data.

struct FiniteVariation {
    bool operator==(const FiniteVariation&) const = default;
};

/// Limits f_+ / f_- of |x|^{1+alpha_pm} nu(dx)/dx at 0, with the two indices.
struct StableLikeData {
    double alpha_plus = 0.0;
    double alpha_minus = 0.0;
    double f_plus = 0.0;
    double f_minus = 0.0;

    bool operator==(const StableLikeData&) const = default;
};

using SmallJumpData = std::variant<FiniteVariation, StableLikeData>;

inline SmallJumpData stable_like_data(const JumpSpec& jumps) {
    struct Visitor {
        SmallJumpData operator()(const CompoundPoisson&) const { return FiniteVariation{}; }
        SmallJumpData operator()(const VarianceGamma&) const { return FiniteVariation{}; }
        SmallJumpData operator()(const Nig& n) const {
            // x K_1(x) -> 1 as x -> 0
            const double f = n.rho / std::numbers::pi;
            return StableLikeData{1.0, 1.0, f, f};
        }
        SmallJumpData operator()(const Stable& s) const {
            if (s.f_plus + s.f_minus == 0.0 || s.alpha < 1.0) return FiniteVariation{};
            return StableLikeData{s.alpha, s.alpha, s.f_plus, s.f_minus};
        }
        SmallJumpData operator()(const TemperedStable& t) const {
            const bool plus_iv = t.c_plus > 0.0 && t.alpha_plus >= 1.0;
            const bool minus_iv = t.c_minus > 0.0 && t.alpha_minus >= 1.0;
            if (!plus_iv && !minus_iv) return FiniteVariation{};
            return StableLikeData{t.alpha_plus, t.alpha_minus, t.c_plus, t.c_minus};
        }
    };
    return std::visit(Visitor{}, jumps.params());
}

struct AbsMoment {
    double mu = 0.0;    ///< integral of |x| nu(dx)
    double mean = 0.0;  ///< integral of x nu(dx)
};

inline AbsMoment first_abs_moment(const JumpSpec& jumps) {
    if (const auto* cp = jumps.get_if<CompoundPoisson>()) {
        AbsMoment m;
        for (const auto& a : cp->atoms) {
            m.mu += std::abs(a.size) * a.intensity;
            m.mean += a.size * a.intensity;
        }
        return m;
    }
    if (const auto* vg = jumps.get_if<VarianceGamma>()) {
        const double up = vg->c_plus / vg->decay_plus;
        const double down = vg->c_minus / vg->decay_minus;
        return {up + down, up - down};
    }
    if (jumps.get_if<Nig>()) {
        detail::fail(ErrorKind::NonIntegrable, "NIG jumps have infinite variation: integral of |x| nu diverges");
    }
    const auto sides = *jumps.power_sides();
    for (const auto& side : sides) {
        if (side.weight > 0.0 && side.alpha >= 1.0) {
            detail::fail(ErrorKind::NonIntegrable,
                         "integral of |x| nu(dx) diverges near 0 for alpha >= 1 (got alpha=" +
                             detail::fmt_value(side.alpha) + ")");
        }
    }
    const double up = sides[0].moment(1.0);
    const double down = sides[1].moment(1.0);
    return {up + down, up - down};
}

/// Integral of x^2 nu(dx); +inf for untruncated Stable with mass.
inline double second_moment(const JumpSpec& jumps) {
    if (const auto* cp = jumps.get_if<CompoundPoisson>()) {
        double s = 0.0;
        for (const auto& a : cp->atoms) s += a.size * a.size * a.intensity;
        return s;
    }
    if (const auto* vg = jumps.get_if<VarianceGamma>()) {
        return vg->c_plus / (vg->decay_plus * vg->decay_plus) +
               vg->c_minus / (vg->decay_minus * vg->decay_minus);
    }
    if (const auto* n = jumps.get_if<Nig>()) return n->rho;
    const auto sides = *jumps.power_sides();
    return sides[0].moment(2.0) + sides[1].moment(2.0);
}

// ---------------------------------------------------------------------------
// Models.

/// Levy model with coefficients frozen at time 0: S0 + sigma0 W + compensated jumps.
struct FrozenLevy {
    double s0 = 0.0;
    double sigma0 = 0.0;
    std::optional<JumpSpec> jumps;
};

struct Heston {
    double s0 = 1.0;
    double v0 = 0.0;
    double mean_reversion = 0.0;
    double long_run_var = 0.0;
    double vol_of_vol = 0.0;
    double correlation = 0.0;
};

enum class CoefficientId { Linear, Affine };

/// f(s) = a s (linear) or a s + b (affine).
struct Coefficient {
    CoefficientId id = CoefficientId::Linear;
    double a = 1.0;
    double b = 0.0;

    double operator()(double s) const { return id == CoefficientId::Linear ? a * s : a * s + b; }
};

/// dS = f(S_-) dL with L = driver_sigma W + compensated driver jumps.
struct LevySde {
    double s0 = 1.0;
    Coefficient coefficient;
    double driver_sigma = 0.0;
    std::optional<JumpSpec> driver_jumps;
};

class ModelSpec {
public:
    using Variant = std::variant<FrozenLevy, Heston, LevySde>;

    ModelSpec(FrozenLevy m) : params_(validate(std::move(m))) {}
    ModelSpec(Heston m) : params_(validate(m)) {}
    ModelSpec(LevySde m) : params_(validate(std::move(m))) {}

    const Variant& params() const noexcept { return params_; }

    template <class T>
    const T* get_if() const noexcept {
        return std::get_if<T>(&params_);
    }

    double s0() const {
        return std::visit([](const auto& m) { return m.s0; }, params_);
    }

    std::string_view type_name() const {
        if (get_if<FrozenLevy>()) return "FrozenLevy";
        if (get_if<Heston>()) return "Heston";
        return "LevySde";
    }

private:
    static FrozenLevy validate(FrozenLevy m) {
        detail::check_finite("s0", m.s0);
        detail::check_param(m.sigma0 >= 0.0 && std::isfinite(m.sigma0), "sigma0", ">= 0", m.sigma0);
        return m;
    }

    static Heston validate(Heston m) {
        detail::check_param(m.s0 > 0.0 && std::isfinite(m.s0), "s0", "> 0", m.s0);
        detail::check_param(m.v0 >= 0.0 && std::isfinite(m.v0), "v0", ">= 0", m.v0);
        detail::check_param(m.mean_reversion >= 0.0 && std::isfinite(m.mean_reversion), "mean_reversion",
                            ">= 0", m.mean_reversion);
        detail::check_param(m.long_run_var >= 0.0 && std::isfinite(m.long_run_var), "long_run_var", ">= 0",
                            m.long_run_var);
        detail::check_param(m.vol_of_vol >= 0.0 && std::isfinite(m.vol_of_vol), "vol_of_vol", ">= 0",
                            m.vol_of_vol);
        detail::check_param(m.correlation >= -1.0 && m.correlation <= 1.0, "correlation", "[-1, 1]",
                            m.correlation);
        return m;
    }

    static LevySde validate(LevySde m) {
        detail::check_finite("s0", m.s0);
        detail::check_finite("coefficient.a", m.coefficient.a);
        detail::check_finite("coefficient.b", m.coefficient.b);
        if (m.coefficient.id == CoefficientId::Linear) {
            detail::check_param(m.coefficient.b == 0.0, "coefficient.b", "0 for a linear coefficient",
                                m.coefficient.b);
        }
        detail::check_param(m.driver_sigma >= 0.0 && std::isfinite(m.driver_sigma), "driver_sigma", ">= 0",
                            m.driver_sigma);
        return m;
    }

    Variant params_;
};

/// Strike K_T = S0 + theta sqrt(T).
class StrikeRule {
public:
    explicit StrikeRule(double theta = 0.0) : theta_(theta) { detail::check_finite("theta", theta); }

    double theta() const noexcept { return theta_; }
    double strike(double s0, double maturity) const { return s0 + theta_ * std::sqrt(maturity); }

private:
    double theta_;
};

// ---------------------------------------------------------------------------
// Leading-order results.

enum class OrderTag { Trivial, SqrtT, PowerT, TLogT, LinearT };

inline std::string_view to_string(OrderTag tag) {
    switch (tag) {
    case OrderTag::Trivial: return "Trivial";
    case OrderTag::SqrtT: return "SqrtT";
    case OrderTag::PowerT: return "PowerT";
    case OrderTag::TLogT: return "TLogT";
    case OrderTag::LinearT: return "LinearT";
    }
    return "Unknown";
}

/// Regime tag with its rate function T -> r(T).
class OrderClass {
public:
    static OrderClass trivial() { return OrderClass(OrderTag::Trivial, 0.0); }
    static OrderClass sqrt_t() { return OrderClass(OrderTag::SqrtT, 0.5); }
    static OrderClass t_log_t() { return OrderClass(OrderTag::TLogT, 1.0); }
    static OrderClass linear_t() { return OrderClass(OrderTag::LinearT, 1.0); }
    static OrderClass power_t(double exponent) {
        detail::check_param(exponent > 0.5 && exponent < 1.0, "PowerT exponent", "(1/2, 1)", exponent);
        return OrderClass(OrderTag::PowerT, exponent);
    }

    OrderTag tag() const noexcept { return tag_; }
    /// Power of T in the rate (the log factor of TLogT is not included).
    double exponent() const noexcept { return exponent_; }

    double rate(double maturity) const {
        switch (tag_) {
        case OrderTag::Trivial: return 0.0;
        case OrderTag::SqrtT: return std::sqrt(maturity);
        case OrderTag::PowerT: return std::pow(maturity, exponent_);
        case OrderTag::TLogT: return maturity * std::abs(std::log(maturity));
        case OrderTag::LinearT: return maturity;
        }
        return 0.0;
    }

    bool operator==(const OrderClass&) const = default;

private:
    OrderClass(OrderTag tag, double exponent) : tag_(tag), exponent_(exponent) {}

    OrderTag tag_;
    double exponent_;
};

/// Leading term of the CALL price E[(S_T - K_T)^+] = coefficient * rate(T) + o(rate(T)).
struct AsymptoticResult {
    OrderClass order = OrderClass::trivial();
    double coefficient = 0.0;
    double moneyness_theta = 0.0;
};

}  // namespace smalltime
