#pragma once

// Command implementations behind the smalltime executable. Each command returns a JSON
// report plus an exit code; argument parsing lives in tools/main.cpp.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smalltime/asymptotics.hpp"
#include "smalltime/errors.hpp"
#include "smalltime/impliedvol.hpp"
#include "smalltime/json_io.hpp"
#include "smalltime/mc.hpp"
#include "smalltime/model.hpp"

namespace smalltime::cli {

using json_io::json;

enum ExitCode : int { Ok = 0, ConfigOrUsage = 1, Numeric = 2, NotConsistent = 3 };

enum class Verdict { Consistent, Inconsistent, Inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Consistent: return "CONSISTENT";
    case Verdict::Inconsistent: return "INCONSISTENT";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "UNKNOWN";
}

struct Outcome {
    json report;
    int exit_code = Ok;
};

/// Maps library errors onto the exit-code contract.
inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidParameter: return ConfigOrUsage;
    default: return Numeric;
    }
}

inline Outcome error_outcome(const std::string& command, const Error& e) {
    json r;
    r["command"] = command;
    r["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
    return {r, exit_code_for(e.kind())};
}

/// --seed if given, else SMALLTIME_SEED, else 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SMALLTIME_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != nullptr && *end == '\0') return v;
        detail::fail(ErrorKind::ConfigError, "SMALLTIME_SEED is not an unsigned integer: " + std::string(env));
    }
    return 0;
}

struct Config {
    ModelSpec model;
    StrikeRule strike;
};

/// A config is either a bare model object or {"model": ..., "strike": {"theta": ...}}.
inline Config parse_config(const json& j) {
    if (j.is_object() && j.contains("model")) {
        StrikeRule strike = j.contains("strike") ? json_io::parse_strike(j["strike"], "/strike") : StrikeRule(0.0);
        return {json_io::parse_model(j["model"], "/model"), strike};
    }
    return {json_io::parse_model(j), StrikeRule(0.0)};
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(json_io::parse_text(buf.str()));
}

inline json classification_json(const ModelSpec& model, const StrikeRule& strike) {
    const AsymptoticResult res = classify(model, strike);
    json c;
    c["order"] = std::string(to_string(res.order.tag()));
    c["exponent"] = res.order.exponent();
    c["coefficient"] = res.coefficient;
    c["moneyness_theta"] = res.moneyness_theta;
    if (model.s0() > 0.0 && strike.theta() == 0.0) {
        const ImpliedVolAsymptote iv = implied_vol_asymptote(model);
        c["implied_vol_asymptote"] = {{"form", std::string(to_string(iv.form))},
                                      {"coefficient", iv.coefficient},
                                      {"exponent", iv.exponent}};
    }
    return c;
}

inline json estimate_json(const McEstimate& e) {
    json j;
    j["value"] = e.value;
    j["half_width"] = e.half_width;
    j["n_paths"] = e.n_paths;
    j["estimator"] = e.estimator.kind == EstimatorKind::Mean ? "Mean" : "MedianOfMeans";
    if (e.estimator.kind == EstimatorKind::MedianOfMeans) j["blocks"] = e.estimator.blocks;
    j["seed"] = e.seed;
    return j;
}

inline json fit_json(const RateFit& f) {
    return {{"model_class", std::string(to_string(f.model_class))},
            {"coefficient_hat", f.coefficient_hat},
            {"exponent_hat", f.exponent_hat},
            {"r_squared", f.r_squared}};
}

inline Estimator default_estimator(const ModelSpec& model) {
    return has_infinite_variance(model) ? Estimator::median_of_means() : Estimator::mean();
}

// ---------------------------------------------------------------------------

inline Outcome cmd_analyze(const Config& cfg) {
    json r;
    r["command"] = "analyze";
    r["model"] = json_io::to_json(cfg.model);
    r["strike"] = {{"theta", cfg.strike.theta()}};
    r["classification"] = classification_json(cfg.model, cfg.strike);
    return {r, Ok};
}

struct VerifyOptions {
    std::vector<double> grid = dyadic_grid(4, 8);
    std::size_t paths = 200000;
    std::uint64_t seed = 0;
    double tol = 0.05;
    double exponent_margin = 0.05;
    std::optional<double> expect_coeff;
    unsigned workers = 1;
};

struct VerifyRow {
    double maturity;
    McEstimate estimate;
    double asymptote;
};

/// Verdict rule. CONSISTENT needs the fitted exponent within the margin and the MC/asymptote
/// ratio within [1 - tol, 1 + tol] at the two smallest maturities. When those two points
/// carry a relative half-width above tol, or the fit is impossible, the run is INCONCLUSIVE.
inline Verdict decide(const std::vector<VerifyRow>& rows, const std::optional<RateFit>& fit,
                      double expected_exponent, double tol, double exponent_margin) {
    std::vector<const VerifyRow*> smallest;
    for (const auto& r : rows) smallest.push_back(&r);
    std::sort(smallest.begin(), smallest.end(),
              [](const VerifyRow* a, const VerifyRow* b) { return a->maturity < b->maturity; });
    smallest.resize(std::min<std::size_t>(2, smallest.size()));

    bool resolvable = true;
    bool ratios_ok = true;
    for (const VerifyRow* r : smallest) {
        if (r->asymptote == 0.0) {
            ratios_ok = ratios_ok && r->estimate.value == 0.0;
            continue;
        }
        const double ratio = r->estimate.value / r->asymptote;
        const double rel_hw = r->estimate.half_width / r->asymptote;
        if (rel_hw > tol) resolvable = false;
        if (!(std::abs(ratio - 1.0) <= tol)) ratios_ok = false;
    }
    if (!resolvable) return Verdict::Inconclusive;
    if (!ratios_ok) return Verdict::Inconsistent;
    if (!fit) return expected_exponent == 0.0 ? Verdict::Consistent : Verdict::Inconclusive;
    return std::abs(fit->exponent_hat - expected_exponent) <= exponent_margin ? Verdict::Consistent
                                                                              : Verdict::Inconsistent;
}

inline Outcome cmd_verify(const Config& cfg, const VerifyOptions& opt, std::string* csv_out = nullptr) {
    AsymptoticResult res = classify(cfg.model, cfg.strike);
    if (opt.expect_coeff) res.coefficient = *opt.expect_coeff;
    const bool trivial = res.order.tag() == OrderTag::Trivial;
    const double expected_exponent = trivial ? 0.0 : res.order.exponent();

    McOptions mc;
    mc.workers = opt.workers;
    const auto curve = price_curve(cfg.model, cfg.strike, opt.grid, opt.paths, default_estimator(cfg.model),
                                   RngStream{opt.seed, 0}, mc);

    std::vector<VerifyRow> rows;
    json jrows = json::array();
    std::ostringstream csv;
    csv << "maturity,mc_value,half_width,asymptote_value,ratio\n";
    csv.precision(17);
    for (const auto& p : curve) {
        const double asym = trivial && !opt.expect_coeff ? 0.0 : res.coefficient * res.order.rate(p.maturity);
        rows.push_back({p.maturity, p.estimate, asym});
        const double ratio = asym != 0.0 ? p.estimate.value / asym : std::nan("");
        jrows.push_back({{"maturity", p.maturity},
                         {"mc_value", p.estimate.value},
                         {"half_width", p.estimate.half_width},
                         {"asymptote_value", asym},
                         {"ratio", ratio}});
        csv << p.maturity << ',' << p.estimate.value << ',' << p.estimate.half_width << ',' << asym << ','
            << ratio << '\n';
    }

    std::optional<RateFit> fit;
    if (!trivial) {
        try {
            fit = fit_rate(to_rate_points(curve),
                           res.order.tag() == OrderTag::TLogT ? RateModel::PowerWithLog : RateModel::PurePower);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateFit) throw;
        }
    }
    const Verdict verdict = decide(rows, fit, expected_exponent, opt.tol, opt.exponent_margin);

    json r;
    r["command"] = "verify";
    r["model"] = json_io::to_json(cfg.model);
    r["strike"] = {{"theta", cfg.strike.theta()}};
    r["classification"] = classification_json(cfg.model, cfg.strike);
    if (opt.expect_coeff) r["classification"]["coefficient_override"] = *opt.expect_coeff;
    r["rows"] = jrows;
    r["fit"] = fit ? fit_json(*fit) : json(nullptr);
    r["tolerance"] = {{"ratio", opt.tol}, {"exponent_margin", opt.exponent_margin}};
    r["verdict"] = std::string(to_string(verdict));
    r["seed"] = opt.seed;
    if (csv_out) *csv_out = csv.str();
    return {r, verdict == Verdict::Consistent ? Ok : NotConsistent};
}

inline Outcome cmd_implied_vol(double price, double s0, double maturity) {
    const ImpliedVolResult iv = atm_implied_vol(price, s0, maturity);
    json r;
    r["command"] = "implied-vol";
    r["price"] = price;
    r["s0"] = s0;
    r["maturity"] = maturity;
    r["sigma_impl"] = iv.infinite ? json("inf") : json(iv.sigma_impl);
    r["residual"] = iv.residual;
    return {r, Ok};
}

inline Outcome cmd_mc_price(const Config& cfg, double maturity, std::size_t paths, std::uint64_t seed,
                            unsigned workers = 1) {
    McOptions mc;
    mc.workers = workers;
    const McEstimate e =
        estimate_call(cfg.model, cfg.strike, maturity, paths, default_estimator(cfg.model), RngStream{seed, 0}, mc);
    json r;
    r["command"] = "mc-price";
    r["model"] = json_io::to_json(cfg.model);
    r["strike"] = {{"theta", cfg.strike.theta()}};
    r["maturity"] = maturity;
    r["estimate"] = estimate_json(e);
    try {
        r["asymptote_value"] = leading_price(classify(cfg.model, cfg.strike), maturity);
    } catch (const Error&) {
        r["asymptote_value"] = nullptr;
    }
    return {r, Ok};
}

/// Two or three columns (T, value[, half_width]); blank lines, '#' comments and a
/// non-numeric header line are skipped.
inline std::vector<RatePoint> parse_rate_csv(std::istream& in) {
    std::vector<RatePoint> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        std::vector<double> vals;
        bool numeric = true;
        for (const auto& c : cols) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str()) {
                numeric = false;
                break;
            }
            while (*end == ' ' || *end == '\t') ++end;
            if (*end != '\0') {
                numeric = false;
                break;
            }
            vals.push_back(v);
        }
        if (!numeric) {
            if (pts.empty()) continue;  // header
            detail::fail(ErrorKind::ConfigError, "CSV line " + std::to_string(lineno) + " is not numeric");
        }
        if (vals.size() < 2 || vals.size() > 3) {
            detail::fail(ErrorKind::ConfigError, "CSV line " + std::to_string(lineno) + " needs 2 or 3 columns");
        }
        RatePoint p{vals[0], vals[1], std::nullopt};
        if (vals.size() == 3) p.half_width = vals[2];
        pts.push_back(p);
    }
    return pts;
}

inline Outcome cmd_fit_rate(std::istream& csv, RateModel model_class) {
    const auto pts = parse_rate_csv(csv);
    const RateFit fit = fit_rate(pts, model_class);
    json r;
    r["command"] = "fit-rate";
    r["n_points"] = pts.size();
    r["fit"] = fit_json(fit);
    return {r, Ok};
}

}  // namespace smalltime::cli
