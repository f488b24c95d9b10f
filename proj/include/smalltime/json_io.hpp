#pragma once

// JSON schema for models, jump measures and strike rules, plus a writer that prints every
// floating value with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "smalltime/errors.hpp"
#include "smalltime/model.hpp"

namespace smalltime::json_io {

using nlohmann::json;

namespace detail {

inline std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

/// A JSON value paired with its pointer, so every failure names the offending field.
class Node {
public:
    Node(const json& value, std::string pointer) : value_(&value), pointer_(std::move(pointer)) {}

    const json& value() const { return *value_; }
    const std::string& pointer() const { return pointer_; }

    [[noreturn]] void fail(const std::string& what) const {
        smalltime::detail::fail(ErrorKind::ConfigError, (pointer_.empty() ? "/" : pointer_) + ": " + what);
    }

    bool has(const std::string& key) const { return value_->is_object() && value_->contains(key); }

    Node at(const std::string& key) const {
        if (!value_->is_object()) fail("expected an object");
        const auto it = value_->find(key);
        if (it == value_->end()) Node(*value_, pointer_ + "/" + escape_token(key)).fail("missing field");
        return Node(*it, pointer_ + "/" + escape_token(key));
    }

    Node at(std::size_t i) const { return Node(value_->at(i), pointer_ + "/" + std::to_string(i)); }

    double number() const {
        if (!value_->is_number()) fail("expected a number");
        return value_->get<double>();
    }

    std::string string() const {
        if (!value_->is_string()) fail("expected a string");
        return value_->get<std::string>();
    }

    std::optional<double> optional_number(const std::string& key) const {
        if (!has(key) || (*value_)[key].is_null()) return std::nullopt;
        return at(key).number();
    }

    double number_or(const std::string& key, double fallback) const {
        return optional_number(key).value_or(fallback);
    }

private:
    const json* value_;
    std::string pointer_;
};

/// Runs a validating constructor, re-raising parameter errors against the node's pointer.
template <class Fn>
auto construct(const Node& node, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InvalidParameter && e.kind() != ErrorKind::DomainError) throw;
        node.fail(e.what());
    }
}

}  // namespace detail

inline JumpSpec parse_jumps(const detail::Node& n) {
    const std::string type = n.at("type").string();
    if (type == "CompoundPoisson") {
        const detail::Node atoms = n.at("atoms");
        if (!atoms.value().is_array()) atoms.fail("expected an array");
        CompoundPoisson cp;
        for (std::size_t i = 0; i < atoms.value().size(); ++i) {
            const detail::Node a = atoms.at(i);
            cp.atoms.push_back({a.at("size").number(), a.at("intensity").number()});
        }
        return detail::construct(n, [&] { return JumpSpec(cp); });
    }
    if (type == "Stable") {
        Stable s{n.at("alpha").number(), n.number_or("f_plus", 0.0), n.number_or("f_minus", 0.0),
                 n.optional_number("truncate_at")};
        return detail::construct(n, [&] { return JumpSpec(s); });
    }
    if (type == "TemperedStable") {
        TemperedStable t;
        if (n.has("alpha")) t.alpha_plus = t.alpha_minus = n.at("alpha").number();
        if (n.has("c")) t.c_plus = t.c_minus = n.at("c").number();
        if (n.has("decay")) t.decay_plus = t.decay_minus = n.at("decay").number();
        t.alpha_plus = n.number_or("alpha_plus", t.alpha_plus);
        t.alpha_minus = n.number_or("alpha_minus", t.alpha_minus);
        t.c_plus = n.number_or("c_plus", t.c_plus);
        t.c_minus = n.number_or("c_minus", t.c_minus);
        t.decay_plus = n.number_or("decay_plus", t.decay_plus);
        t.decay_minus = n.number_or("decay_minus", t.decay_minus);
        t.truncate_at = n.optional_number("truncate_at");
        return detail::construct(n, [&] { return JumpSpec(t); });
    }
    if (type == "NIG") {
        Nig p{n.at("rho").number()};
        return detail::construct(n, [&] { return JumpSpec(p); });
    }
    if (type == "VarianceGamma") {
        VarianceGamma v{n.number_or("c_plus", 0.0), n.number_or("c_minus", 0.0), n.number_or("decay_plus", 1.0),
                        n.number_or("decay_minus", 1.0)};
        return detail::construct(n, [&] { return JumpSpec(v); });
    }
    n.at("type").fail("unknown jump type '" + type + "'");
}

inline std::optional<JumpSpec> parse_optional_jumps(const detail::Node& parent, const std::string& key) {
    if (!parent.has(key) || parent.value()[key].is_null()) return std::nullopt;
    return parse_jumps(parent.at(key));
}

inline Coefficient parse_coefficient(const detail::Node& n) {
    const std::string id = n.at("id").string();
    Coefficient c;
    if (id == "linear") c.id = CoefficientId::Linear;
    else if (id == "affine") c.id = CoefficientId::Affine;
    else n.at("id").fail("unsupported coefficient id '" + id + "' (linear, affine)");
    c.a = n.number_or("a", 1.0);
    c.b = n.number_or("b", 0.0);
    return c;
}

inline ModelSpec parse_model(const detail::Node& n) {
    const std::string type = n.at("type").string();
    if (type == "FrozenLevy") {
        FrozenLevy m{n.at("s0").number(), n.number_or("sigma0", 0.0), parse_optional_jumps(n, "jumps")};
        return detail::construct(n, [&] { return ModelSpec(std::move(m)); });
    }
    if (type == "Heston") {
        Heston h{n.at("s0").number(),           n.at("v0").number(),
                 n.number_or("mean_reversion", 0.0), n.number_or("long_run_var", 0.0),
                 n.number_or("vol_of_vol", 0.0),     n.number_or("correlation", 0.0)};
        return detail::construct(n, [&] { return ModelSpec(h); });
    }
    if (type == "LevySde") {
        LevySde m{n.at("s0").number(), parse_coefficient(n.at("coefficient")), n.number_or("driver_sigma", 0.0),
                  parse_optional_jumps(n, "driver_jumps")};
        return detail::construct(n, [&] { return ModelSpec(std::move(m)); });
    }
    n.at("type").fail("unknown model type '" + type + "'");
}

/// Parses a model from either a bare model object or a config with a "model" field.
inline ModelSpec parse_model(const json& j, const std::string& pointer = "") {
    return parse_model(detail::Node(j, pointer));
}

inline StrikeRule parse_strike(const json& j, const std::string& pointer = "") {
    const detail::Node n(j, pointer);
    return detail::construct(n, [&] { return StrikeRule(n.number_or("theta", 0.0)); });
}

inline json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        smalltime::detail::fail(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Serialization.

inline json to_json(const JumpSpec& jumps) {
    json j;
    j["type"] = std::string(jumps.type_name());
    std::visit(
        [&j](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CompoundPoisson>) {
                j["atoms"] = json::array();
                for (const auto& a : p.atoms) j["atoms"].push_back({{"size", a.size}, {"intensity", a.intensity}});
            } else if constexpr (std::is_same_v<T, Stable>) {
                j["alpha"] = p.alpha;
                j["f_plus"] = p.f_plus;
                j["f_minus"] = p.f_minus;
                if (p.truncate_at) j["truncate_at"] = *p.truncate_at;
            } else if constexpr (std::is_same_v<T, TemperedStable>) {
                j["alpha_plus"] = p.alpha_plus;
                j["alpha_minus"] = p.alpha_minus;
                j["c_plus"] = p.c_plus;
                j["c_minus"] = p.c_minus;
                j["decay_plus"] = p.decay_plus;
                j["decay_minus"] = p.decay_minus;
                if (p.truncate_at) j["truncate_at"] = *p.truncate_at;
            } else if constexpr (std::is_same_v<T, Nig>) {
                j["rho"] = p.rho;
            } else {
                j["c_plus"] = p.c_plus;
                j["c_minus"] = p.c_minus;
                j["decay_plus"] = p.decay_plus;
                j["decay_minus"] = p.decay_minus;
            }
        },
        jumps.params());
    return j;
}

inline json to_json(const ModelSpec& model) {
    json j;
    j["type"] = std::string(model.type_name());
    if (const auto* m = model.get_if<FrozenLevy>()) {
        j["s0"] = m->s0;
        j["sigma0"] = m->sigma0;
        if (m->jumps) j["jumps"] = to_json(*m->jumps);
    } else if (const auto* h = model.get_if<Heston>()) {
        j["s0"] = h->s0;
        j["v0"] = h->v0;
        j["mean_reversion"] = h->mean_reversion;
        j["long_run_var"] = h->long_run_var;
        j["vol_of_vol"] = h->vol_of_vol;
        j["correlation"] = h->correlation;
    } else if (const auto* l = model.get_if<LevySde>()) {
        j["s0"] = l->s0;
        j["coefficient"] = {{"id", l->coefficient.id == CoefficientId::Linear ? "linear" : "affine"},
                            {"a", l->coefficient.a},
                            {"b", l->coefficient.b}};
        j["driver_sigma"] = l->driver_sigma;
        if (l->driver_jumps) j["driver_jumps"] = to_json(*l->driver_jumps);
    }
    return j;
}

namespace detail {

inline void write_number(std::ostream& os, double v) {
    if (!std::isfinite(v)) {
        os << "null";
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // Keep floats recognisable as floats when the value happens to be integral.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    os << s;
}

inline void write(std::ostream& os, const json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) os << ",\n";
            first = false;
            os << pad << json(it.key()).dump() << ": ";
            write(os, it.value(), indent, depth + 1);
        }
        os << "\n" << close_pad << "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << ",\n";
            os << pad;
            write(os, j[i], indent, depth + 1);
        }
        os << "\n" << close_pad << "]";
        return;
    }
    case json::value_t::number_float: write_number(os, j.get<double>()); return;
    default: os << j.dump();
    }
}

}  // namespace detail

/// Pretty-printed JSON with 17 significant digits for every float; non-finite values become null.
inline std::string dump(const json& j, int indent = 2) {
    std::ostringstream os;
    detail::write(os, j, indent, 0);
    os << "\n";
    return os.str();
}

}  // namespace smalltime::json_io
