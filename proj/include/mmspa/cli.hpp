#pragma once

// Command layer behind the `mmspa` executable. Every command builds a table
// (or a small set of named values) and renders it as CSV or JSON.

#include "mmspa/distributions.hpp"
#include "mmspa/errors.hpp"
#include "mmspa/joint_json.hpp"
#include "mmspa/mechanisms.hpp"
#include "mmspa/optmech.hpp"
#include "mmspa/regret.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mmspa::cli {

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"reserve",       "phi",      "table1",      "table2",
                                                "figure2",       "verify-saddle", "simulate", "asymptotics",
                                                "affiliation",   "general-class"};
    return names;
}

struct CommandConfig {
    std::string command;
    std::optional<int> n;
    std::uint64_t seed = 0;
    std::optional<std::size_t> samples; // simulate: 10^6, general-class: 10^4
    int grid = 512;
    std::string format = "csv";
    std::optional<std::string> out_path;
};

struct CommandResult {
    int exit_code = 0;
    std::string document;
};

using Cell = std::variant<std::monostate, long long, double, std::string, bool>;

/// Rows of named cells; `paper` columns are printed with 4 decimals.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<bool> four_decimals;

    void add_column(std::string name, bool paper = false) {
        columns.push_back(std::move(name));
        four_decimals.push_back(paper);
    }
};

inline std::string format_double(double x, bool paper) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, paper ? "%.4f" : "%.10g", x);
    return buf;
}

inline std::string csv_cell(const Cell& c, bool paper) {
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
            else if constexpr (std::is_same_v<T, double>) return format_double(v, paper);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else return v;
        },
        c);
}

inline Json json_cell(const Cell& c, bool paper) {
    return std::visit(
        [&](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return format_double(v, false);
                return paper ? std::round(v * 1e4) / 1e4 : v;
            } else return v;
        },
        c);
}

inline std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i], t.four_decimals[i]);
        out += "\n";
    }
    return out;
}

inline Json table_json(const Table& t) {
    Json rows = Json::array();
    for (const auto& row : t.rows) {
        Json r = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = json_cell(row[i], t.four_decimals[i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Json config_json(const CommandConfig& c) {
    Json j{{"command", c.command}, {"seed", c.seed}, {"grid", c.grid}, {"format", c.format}};
    j["n"] = c.n ? Json(*c.n) : Json(nullptr);
    j["samples"] = c.samples ? Json(*c.samples) : Json(nullptr);
    return j;
}

struct Outcome {
    Table table;
    bool passed = true;
};

namespace detail {

inline constexpr double kInvE = 1.0 / std::numbers::e;

inline std::vector<int> requested(const CommandConfig& c, std::vector<int> defaults) {
    if (c.n) {
        if (*c.n < 1) throw DomainError("--n must be >= 1");
        return {*c.n};
    }
    return defaults;
}

inline Outcome cmd_reserve(const CommandConfig& c) {
    Outcome o;
    o.table.add_column("n");
    o.table.add_column("r_star");
    o.table.add_column("n_r_star");
    o.table.add_column("residual");
    for (int n : requested(c, {1, 2, 3, 4, 5, 10, 25, 100, 1000})) {
        const double r = solve_reserve(n);
        o.table.rows.push_back({static_cast<long long>(n), r, n * r, reserve_equation_residual(n, r)});
    }
    return o;
}

inline Outcome cmd_phi(const CommandConfig& c) {
    Outcome o;
    o.table.add_column("n");
    o.table.add_column("v");
    o.table.add_column("phi");
    o.table.add_column("density");
    for (int n : requested(c, {2})) {
        const double r = solve_reserve(n);
        for (double v : uniform_grid(c.grid)) {
            const Cell dens = (v > r && v < 1.0) ? Cell(phi_star_density(n, r, v)) : Cell(0.0);
            o.table.rows.push_back({static_cast<long long>(n), v, phi_star_cdf(n, v), dens});
        }
    }
    return o;
}

inline Outcome cmd_table1(const CommandConfig& c) {
    Outcome o;
    o.table.add_column("n");
    o.table.add_column("r_star");
    o.table.add_column("regret");
    o.table.add_column("paper", true);
    for (int n : requested(c, {1, 2, 3, 4, 5, 10})) {
        const OptimalSolution s = optimal_solution(n);
        o.table.rows.push_back({std::to_string(n), s.r_star, s.regret, s.regret});
    }
    if (!c.n) {
        const AsymptoticConstants a = asymptotic_constants();
        o.table.rows.push_back({std::string("inf"), Cell{}, a.limit_regret, a.limit_regret});
    }
    return o;
}

inline Outcome cmd_table2(const CommandConfig& c) {
    Outcome o;
    for (const char* name : {"n", "opt", "spa0", "spa_rstar"}) o.table.add_column(name);
    for (const char* name : {"opt_paper", "spa0_paper", "spa_rstar_paper"}) o.table.add_column(name, true);
    for (int n : requested(c, {1, 2, 3, 4, 5, 10, 25})) {
        const double opt = minimax_regret(n);
        const double spa0 = spa_fixed_reserve_worstcase(n, 0.0);
        const double spar = optimal_deterministic_reserve(n).regret;
        o.table.rows.push_back({std::to_string(n), opt, spa0, spar, opt, spa0, spar});
    }
    if (!c.n) {
        const double lim = asymptotic_constants().limit_regret;
        o.table.rows.push_back({std::string("inf"), lim, kInvE, kInvE, lim, kInvE, kInvE});
    }
    return o;
}

inline Outcome cmd_figure2(const CommandConfig& c) {
    Outcome o;
    o.table.add_column("n");
    o.table.add_column("v");
    o.table.add_column("phi_star");
    o.table.add_column("f_star");
    for (int n : requested(c, {1, 2, 5, 10})) {
        const Marginal f = worst_case_marginal(n);
        for (double v : uniform_grid(c.grid))
            o.table.rows.push_back({static_cast<long long>(n), v, phi_star_cdf(n, v), f.cdf(v)});
    }
    return o;
}

inline Outcome cmd_verify_saddle(const CommandConfig& c) {
    Outcome o;
    for (const char* name : {"n", "seed", "optimal_value", "minimax_regret", "nature_gap", "nature_worst_probe",
                             "seller_gap", "seller_worst_probe", "deterministic_rstar_margin", "grid_value",
                             "nature_probes", "seller_probes", "passed"})
        o.table.add_column(name);
    for (int n : requested(c, {1, 2, 3, 5})) {
        SaddleOptions opt;
        opt.seed = c.seed;
        opt.grid_size = c.grid;
        const SaddleReport s = verify_saddle(n, opt);
        o.table.rows.push_back({static_cast<long long>(n), static_cast<long long>(c.seed), s.optimal_value,
                                s.minimax_value, s.nature_gap, s.nature_worst_probe, s.seller_gap,
                                s.seller_worst_probe, s.deterministic_rstar_margin, s.grid_value,
                                static_cast<long long>(s.nature_probes), static_cast<long long>(s.seller_probes),
                                true});
    }
    return o;
}

inline Outcome cmd_simulate(const CommandConfig& c) {
    const std::size_t samples = c.samples.value_or(1'000'000);
    if (samples < 1000) throw DomainError("--samples must be >= 1000 when simulating");
    Outcome o;
    for (const char* name : {"n", "seed", "samples", "revenue", "revenue_se", "benchmark", "regret", "regret_se",
                             "minimax_regret", "z_score", "within_4se"})
        o.table.add_column(name);
    for (int n : requested(c, {1, 2, 5})) {
        const SimulationResult s =
            simulate(spa_random(make_phi_star(n)), JointSpec::iid(n, worst_case_marginal(n)), samples, c.seed);
        const double R = minimax_regret(n);
        const double z = (s.regret.mean - R) / s.regret.stderr_mean;
        const bool ok = std::abs(z) <= 4.0;
        o.passed = o.passed && ok;
        o.table.rows.push_back({static_cast<long long>(n), static_cast<long long>(c.seed),
                                static_cast<long long>(samples), s.revenue.mean, s.revenue.stderr_mean,
                                s.benchmark.mean, s.regret.mean, s.regret.stderr_mean, R, z, ok});
    }
    return o;
}

inline Outcome cmd_asymptotics(const CommandConfig& c) {
    Outcome o;
    o.table.add_column("quantity");
    o.table.add_column("value");
    o.table.add_column("paper", true);
    const AsymptoticConstants a = asymptotic_constants();
    const int n = c.n.value_or(1000);
    o.table.rows.push_back({std::string("c"), a.c, a.c});
    o.table.rows.push_back({std::string("limit_regret"), a.limit_regret, a.limit_regret});
    o.table.rows.push_back({std::string("c_exp_minus_c"), a.c * std::exp(-a.c), a.c * std::exp(-a.c)});
    const double nr = n * solve_reserve(n);
    o.table.rows.push_back({"n_r_star(n=" + std::to_string(n) + ")", nr, nr});
    const double rn = minimax_regret(n);
    o.table.rows.push_back({"minimax_regret(n=" + std::to_string(n) + ")", rn, rn});
    return o;
}

/// Two-buyer counterexamples on the support {1, 2, 3}.
inline DiscreteExchangeable mixture_counterexample() {
    const std::vector<double> p{0.75, 0.125, 0.125};
    const std::vector<double> q{0.25, 0.5, 0.25};
    DiscreteExchangeable d = two_buyer_mixture_pmf({1.0, 2.0, 3.0}, 0.5, p, q);
    d.support_text = {"1", "2", "3"};
    d.pmf_text = {"5/16", "7/64", "5/64", "7/64", "17/128", "9/128", "5/64", "9/128", "5/128"};
    return d;
}

inline DiscreteExchangeable affiliated_counterexample() {
    const double z = 503.0;
    DiscreteExchangeable d =
        symmetric_3x3_pmf({1.0, 2.0, 3.0}, {112 / z, 64 / z, 32 / z, 38 / z, 64 / z, 33 / z});
    d.support_text = {"1", "2", "3"};
    d.pmf_text = {"112/503", "64/503", "32/503", "64/503", "38/503", "64/503", "32/503", "64/503", "33/503"};
    return d;
}

inline Outcome cmd_affiliation(const CommandConfig& c) {
    Outcome o;
    o.table.add_column("check");
    o.table.add_column("result");
    o.table.add_column("expected");
    o.table.add_column("detail");
    auto row = [&](const std::string& name, bool result, bool expected, std::string detail) {
        o.passed = o.passed && result == expected;
        o.table.rows.push_back({name, result, expected, std::move(detail)});
    };
    const DiscreteExchangeable mix = mixture_counterexample();
    const DiscreteExchangeable aff = affiliated_counterexample();
    const AffiliationResult mr = check_affiliation(mix);
    std::string witness;
    if (mr.witness)
        witness = format_double(mr.witness->lhs, false) + " > " + format_double(mr.witness->rhs, false);
    row("mixture_example_affiliated", mr.ok, false, witness);
    row("mixture_example_mixture_necessary", check_mixture_necessary(mix), true, "");
    const AffiliationResult ar = check_affiliation(aff);
    std::string aff_witness;
    if (ar.witness)
        aff_witness = format_double(ar.witness->lhs, false) + " > " + format_double(ar.witness->rhs, false);
    row("affiliated_example_affiliated", ar.ok, true, aff_witness);
    row("affiliated_example_mixture_necessary", check_mixture_necessary(aff), false, "");

    Rng rng(c.seed);
    std::size_t violations = 0;
    const int count = 1000;
    for (int i = 0; i < count; ++i) {
        const int n = 2 + i % 5;
        const BinaryExchangeable b = sample_binary_exchangeable_affiliated(n, rng);
        const double lhs = std::pow(b.first_order_cdf(n), 1.0 / n);
        const double rhs = std::pow(b.first_order_cdf(n - 1), 1.0 / (n - 1));
        if (lhs < rhs * (1.0 - 1e-12)) ++violations;
    }
    row("binary_exchangeable_root_inequality", violations == 0, true,
        std::to_string(violations) + " violations in " + std::to_string(count) + " samples (seed " +
            std::to_string(c.seed) + ")");
    return o;
}

inline Outcome cmd_general_class(const CommandConfig& c) {
    const std::size_t samples = c.samples.value_or(10'000);
    Outcome o;
    for (const char* name : {"seed", "vectors", "max_regret", "case1_vectors", "max_case1_deviation",
                             "max_other_regret", "spike_regret", "passed"})
        o.table.add_column(name);
    Rng rng(c.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 5);
    double max_regret = 0.0, max_dev = 0.0, max_other = 0.0;
    long long case1 = 0;
    bool ok = true;
    for (std::size_t i = 0; i < samples; ++i) {
        std::vector<double> v(static_cast<std::size_t>(size(rng)));
        for (double& x : v) x = U(rng);
        const GeneralClassResult g = general_class_check(v);
        max_regret = std::max(max_regret, g.value);
        ok = ok && g.bounded;
        if (g.case_one) {
            ++case1;
            max_dev = std::max(max_dev, std::abs(g.value - kInvE));
        } else {
            max_other = std::max(max_other, g.value);
        }
    }
    ok = ok && max_dev <= 1e-10 && max_other < kInvE - 1e-10;
    const double spike =
        regret_bigF(make_phi_star(1), JointSpec::spike(c.n.value_or(3), isorevenue_marginal(kInvE))).value;
    ok = ok && std::abs(spike - kInvE) <= 1e-8;
    o.passed = ok;
    o.table.rows.push_back({static_cast<long long>(c.seed), static_cast<long long>(samples), max_regret, case1,
                            max_dev, max_other, spike, ok});
    return o;
}

inline Outcome dispatch(const CommandConfig& c) {
    static const std::map<std::string, std::function<Outcome(const CommandConfig&)>> table{
        {"reserve", cmd_reserve},         {"phi", cmd_phi},
        {"table1", cmd_table1},           {"table2", cmd_table2},
        {"figure2", cmd_figure2},         {"verify-saddle", cmd_verify_saddle},
        {"simulate", cmd_simulate},       {"asymptotics", cmd_asymptotics},
        {"affiliation", cmd_affiliation}, {"general-class", cmd_general_class}};
    const auto it = table.find(c.command);
    if (it == table.end()) throw DomainError("unknown command '" + c.command + "'");
    return it->second(c);
}

inline std::string error_document(const CommandConfig& c, const std::string& type, const std::string& message,
                                  const Json& extra = Json::object()) {
    Json err{{"type", type}, {"message", message}};
    err.update(extra);
    Json doc{{"command", c.command}, {"config", config_json(c)}, {"error", err}};
    return doc.dump(2) + "\n";
}

} // namespace detail

/// Runs one command. Exit code 0 when every asserted check passes, 1 on a
/// failed check or a library error (the document is then a JSON error record).
inline CommandResult run(const CommandConfig& config) {
    CommandResult res;
    try {
        if (config.format != "csv" && config.format != "json")
            throw DomainError("--format must be csv or json");
        if (config.grid < 2) throw DomainError("--grid must be >= 2");
        const Outcome o = detail::dispatch(config);
        if (config.format == "csv") {
            res.document = render_csv(o.table);
        } else {
            Json doc{{"command", config.command}, {"config", config_json(config)}, {"results", table_json(o.table)}};
            doc["passed"] = o.passed;
            res.document = doc.dump(2) + "\n";
        }
        if (!o.passed) {
            res.exit_code = 1;
            if (config.format == "csv")
                res.document += detail::error_document(config, "CheckFailed", "an asserted check did not pass");
        }
    } catch (const SaddleViolation& e) {
        res.exit_code = 1;
        res.document = detail::error_document(config, "SaddleViolation", e.what(),
                                              {{"probe", e.probe()}, {"gap", e.gap()}});
    } catch (const Error& e) {
        res.exit_code = 1;
        res.document = detail::error_document(config, "Error", e.what());
    }
    if (config.out_path) {
        std::ofstream f(*config.out_path, std::ios::binary);
        if (!f) {
            res.exit_code = 1;
            res.document = detail::error_document(config, "IOError", "cannot open " + *config.out_path);
            return res;
        }
        f << res.document;
    }
    return res;
}

} // namespace mmspa::cli
