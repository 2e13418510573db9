#pragma once

// JSON form of marginals and joint distributions.
//
//   marginal: {"family": "isorevenue", "r": x}
//           | {"family": "uniform", "lo": a, "hi": b}
//           | {"family": "discrete", "atoms": [[loc, mass], ...]}
//           | {"family": "piecewise", "knots": [...], "masses": [...], "atoms": [[loc, mass], ...]}
//           | {"family": "power", "lo": a, "hi": b, "exponent": k, "continuous_mass": m,
//              "atoms": [[loc, mass], ...]}
//   joint:    {"variant": "iid", "n": n, "marginal": M}
//           | {"variant": "mixture", "n": n, "weights": [...], "components": [M, ...]}
//           | {"variant": "spike", "n": n, "marginal": M}
//           | {"variant": "discrete", "n": n, "support": [...], "pmf": [...]}
//
// Discrete support and pmf entries may be numbers or exact "num/den" strings;
// strings are preserved verbatim on output.

#include "mmspa/distributions.hpp"
#include "mmspa/errors.hpp"
#include "mmspa/marginal.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace mmspa {

using Json = nlohmann::json;

/// Parses "p/q", "p" or a JSON number into a double.
inline double parse_rational(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw DomainError("parse_rational: expected number or string");
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return std::stod(s);
        const double num = std::stod(s.substr(0, slash));
        const double den = std::stod(s.substr(slash + 1));
        if (den == 0.0) throw DomainError("parse_rational: zero denominator in '" + s + "'");
        return num / den;
    } catch (const std::invalid_argument&) {
        throw DomainError("parse_rational: malformed value '" + s + "'");
    }
}

namespace detail {

inline Json atoms_to_json(const std::vector<Atom>& atoms) {
    Json a = Json::array();
    for (const Atom& x : atoms) a.push_back(Json::array({x.location, x.mass}));
    return a;
}

inline std::vector<Atom> atoms_from_json(const Json& j) {
    std::vector<Atom> atoms;
    if (j.is_null()) return atoms;
    for (const Json& x : j) {
        if (!x.is_array() || x.size() != 2) throw DomainError("atoms must be [location, mass] pairs");
        atoms.push_back({parse_rational(x[0]), parse_rational(x[1])});
    }
    return atoms;
}

inline Json values_to_json(const std::vector<double>& values, const std::vector<std::string>& text) {
    Json a = Json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i < text.size() && !text[i].empty())
            a.push_back(text[i]);
        else
            a.push_back(values[i]);
    }
    return a;
}

inline void values_from_json(const Json& j, std::vector<double>& values, std::vector<std::string>& text) {
    bool any_text = false;
    for (const Json& x : j) {
        values.push_back(parse_rational(x));
        text.push_back(x.is_string() ? x.get<std::string>() : std::string());
        any_text = any_text || x.is_string();
    }
    if (!any_text) text.clear();
}

} // namespace detail

inline Json marginal_to_json(const Marginal& m) {
    return std::visit(
        [&](const auto& s) -> Json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, std::monostate>) {
                throw DomainError("marginal_to_json: marginal has no parametric description");
            } else if constexpr (std::is_same_v<S, IsorevenueShape>) {
                return {{"family", "isorevenue"}, {"r", s.r}};
            } else if constexpr (std::is_same_v<S, UniformShape>) {
                return {{"family", "uniform"}, {"lo", s.lo}, {"hi", s.hi}};
            } else if constexpr (std::is_same_v<S, DiscreteShape>) {
                return {{"family", "discrete"}, {"atoms", detail::atoms_to_json(s.atoms)}};
            } else if constexpr (std::is_same_v<S, PiecewiseLinearShape>) {
                return {{"family", "piecewise"},
                        {"knots", s.knots},
                        {"masses", s.masses},
                        {"atoms", detail::atoms_to_json(s.atoms)}};
            } else {
                return {{"family", "power"},          {"lo", s.lo},
                        {"hi", s.hi},                 {"exponent", s.exponent},
                        {"continuous_mass", s.continuous_mass}, {"atoms", detail::atoms_to_json(s.atoms)}};
            }
        },
        m.shape());
}

inline Marginal marginal_from_json(const Json& j) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "isorevenue") return isorevenue_marginal(parse_rational(j.at("r")));
    if (family == "uniform") return uniform_marginal(parse_rational(j.at("lo")), parse_rational(j.at("hi")));
    if (family == "discrete") return discrete_marginal(detail::atoms_from_json(j.at("atoms")));
    if (family == "piecewise") {
        std::vector<double> knots, masses;
        for (const Json& x : j.at("knots")) knots.push_back(parse_rational(x));
        for (const Json& x : j.at("masses")) masses.push_back(parse_rational(x));
        return piecewise_linear_marginal(std::move(knots), std::move(masses),
                                         detail::atoms_from_json(j.value("atoms", Json())));
    }
    if (family == "power") {
        return power_marginal(parse_rational(j.at("lo")), parse_rational(j.at("hi")),
                              parse_rational(j.at("exponent")),
                              j.contains("continuous_mass") ? parse_rational(j.at("continuous_mass")) : 1.0,
                              detail::atoms_from_json(j.value("atoms", Json())));
    }
    throw DomainError("marginal_from_json: unknown family '" + family + "'");
}

inline Json joint_to_json(const JointSpec& joint) {
    return std::visit(
        [&](const auto& v) -> Json {
            using J = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<J, IidJoint>) {
                return {{"variant", "iid"}, {"n", joint.n()}, {"marginal", marginal_to_json(v.marginal)}};
            } else if constexpr (std::is_same_v<J, SpikeMixture>) {
                return {{"variant", "spike"}, {"n", joint.n()}, {"marginal", marginal_to_json(v.marginal)}};
            } else if constexpr (std::is_same_v<J, MixtureJoint>) {
                Json comps = Json::array();
                for (const Marginal& m : v.components) comps.push_back(marginal_to_json(m));
                return {{"variant", "mixture"}, {"n", joint.n()}, {"weights", v.weights}, {"components", comps}};
            } else {
                return {{"variant", "discrete"},
                        {"n", joint.n()},
                        {"support", detail::values_to_json(v.support(), v.support_text)},
                        {"pmf", detail::values_to_json(v.pmf(), v.pmf_text)}};
            }
        },
        joint.variant());
}

inline JointSpec joint_from_json(const Json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    const int n = j.at("n").get<int>();
    if (variant == "iid") return JointSpec::iid(n, marginal_from_json(j.at("marginal")));
    if (variant == "spike") return JointSpec::spike(n, marginal_from_json(j.at("marginal")));
    if (variant == "mixture") {
        std::vector<double> weights;
        std::vector<Marginal> comps;
        for (const Json& w : j.at("weights")) weights.push_back(parse_rational(w));
        for (const Json& c : j.at("components")) comps.push_back(marginal_from_json(c));
        return JointSpec::mixture(n, std::move(weights), std::move(comps));
    }
    if (variant == "discrete") {
        std::vector<double> support, pmf;
        std::vector<std::string> support_text, pmf_text;
        detail::values_from_json(j.at("support"), support, support_text);
        detail::values_from_json(j.at("pmf"), pmf, pmf_text);
        DiscreteExchangeable d(n, std::move(support), std::move(pmf));
        d.support_text = std::move(support_text);
        d.pmf_text = std::move(pmf_text);
        return JointSpec::discrete(std::move(d));
    }
    throw DomainError("joint_from_json: unknown variant '" + variant + "'");
}

} // namespace mmspa
