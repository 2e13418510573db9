#pragma once

// The minimax-regret optimal mechanism for n i.i.d. buyers: the reserve
// threshold r*_n, the reserve CDF Phi*_n, the isorevenue worst case F*_n, the
// minimax value, and the n -> infinity limits.

#include "mmspa/errors.hpp"
#include "mmspa/marginal.hpp"
#include "mmspa/numkit.hpp"
#include "mmspa/reserve.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace mmspa {

struct OptimalSolution {
    int n = 1;
    double r_star = 0.0;
    double regret = 0.0;
};

struct AsymptoticConstants {
    double c = 0.0;            // lim n r*_n
    double limit_regret = 0.0; // lim minimax regret
};

/// (1-r)^{n-1} + log r + sum_{k=1}^{n-1} (1-r)^k / k.
inline double reserve_equation_residual(int n, double r) {
    if (n < 1) throw DomainError("reserve_equation_residual: n must be >= 1");
    if (!(r > 0.0 && r < 1.0)) throw DomainError("reserve_equation_residual: r must lie in (0,1)");
    const double q = 1.0 - r;
    numkit::CompensatedSum s;
    s += std::pow(q, n - 1);
    s += std::log(r);
    double qk = 1.0;
    for (int k = 1; k <= n - 1; ++k) {
        qk *= q;
        s += qk / k;
    }
    return s.value();
}

/// Unique root of the reserve equation in (0, 1/n). Memoized per n.
inline double solve_reserve(int n) {
    if (n < 1) throw DomainError("solve_reserve: n must be >= 1");
    static std::mutex mu;
    static std::map<int, double> memo;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = memo.find(n); it != memo.end()) return it->second;
    }
    // At lo the residual is below 1 + log(lo) + H_{n-1} < 0.
    double harmonic = 0.0;
    for (int k = 1; k <= n - 1; ++k) harmonic += 1.0 / k;
    const double lo = std::exp(-harmonic - 2.0);
    const double hi = n == 1 ? 1.0 - 1e-9 : 1.0 / n;
    const double r = numkit::solve_monotone_root(
        [n](double x) { return reserve_equation_residual(n, x); }, lo, hi, 1e-14);
    std::lock_guard<std::mutex> lock(mu);
    memo.emplace(n, r);
    return r;
}

namespace detail {

/// Closed form is used when w > 1/2 and the amplification w^{-(n-1)} stays
/// below e^8; otherwise the geometric series is used.
inline bool phi_star_use_closed_form(int n, double w) {
    return w > 0.5 && (n - 1) * -std::log(w) <= 8.0;
}

} // namespace detail

/// sum_{k=n}^inf (1/k) w^{k-(n-1)}, w = (v - r)/v.
inline double phi_star_series(int n, double r, double v) {
    if (v <= r) return 0.0;
    const double w = (v - r) / v;
    numkit::CompensatedSum s;
    double wp = 1.0;
    for (long j = 1; j < 10'000'000; ++j) {
        wp *= w;
        const double t = wp / static_cast<double>(n - 1 + j);
        s += t;
        if (t < 1e-17 * s.value()) break;
    }
    return s.value();
}

/// (v/(v-r))^{n-1} log(v/r) - sum_{k=1}^{n-1} (1/k) (v/(v-r))^{n-1-k}.
inline double phi_star_closed(int n, double r, double v) {
    if (v <= r) return 0.0;
    const double w = (v - r) / v;
    numkit::CompensatedSum s;
    s += -std::log1p(-w);
    double wk = 1.0;
    for (int k = 1; k <= n - 1; ++k) {
        wk *= w;
        s += -wk / k;
    }
    return s.value() * std::pow(w, -(n - 1));
}

/// Phi*_n(v) for an explicit threshold r (so a forced r can be injected).
inline double phi_star_cdf(int n, double r, double v) {
    if (v <= r) return 0.0;
    if (v >= 1.0) v = 1.0;
    const double w = (v - r) / v;
    const double val = detail::phi_star_use_closed_form(n, w) ? phi_star_closed(n, r, v)
                                                               : phi_star_series(n, r, v);
    return std::clamp(val, 0.0, 1.0);
}

inline double phi_star_cdf(int n, double v) {
    if (n < 1) throw DomainError("phi_star_cdf: n must be >= 1");
    const double r = solve_reserve(n);
    if (v >= 1.0) return 1.0;
    return phi_star_cdf(n, r, v);
}

/// Density of Phi*_n on (r, 1). Series derivative near r, the reserve ODE
/// Phi' = 1/v - (n-1) r Phi / (v (v - r)) elsewhere.
inline double phi_star_density(int n, double r, double v) {
    if (!(v > r && v < 1.0)) throw DomainError("phi_star_density: v outside (r*, 1)");
    const double w = (v - r) / v;
    if (detail::phi_star_use_closed_form(n, w))
        return 1.0 / v - (n - 1) * r / (v * (v - r)) * phi_star_cdf(n, r, v);
    numkit::CompensatedSum s;
    double wp = 1.0; // w^{j-1}
    for (long j = 1; j < 10'000'000; ++j) {
        const double t = static_cast<double>(j) * wp / static_cast<double>(n - 1 + j);
        s += t;
        if (t < 1e-17 * s.value()) break;
        wp *= w;
    }
    return r / (v * v) * s.value();
}

inline double phi_star_density(int n, double v) { return phi_star_density(n, solve_reserve(n), v); }

inline double phi_star_quantile(int n, double r, double u) {
    if (u <= 0.0) return r;
    if (u >= 1.0) return 1.0;
    return numkit::solve_monotone_root([&](double v) { return phi_star_cdf(n, r, v) - u; }, r, 1.0,
                                       1e-14);
}

inline double phi_star_quantile(int n, double u) { return phi_star_quantile(n, solve_reserve(n), u); }

/// Phi*_n as a ReserveDistribution on [r, 1].
inline ReserveDistribution make_phi_star(int n, double r) {
    return ReserveDistribution(
        "phi_star_" + std::to_string(n), r, 1.0, [n, r](double v) { return phi_star_cdf(n, r, v); },
        [n, r](double v) { return phi_star_density(n, r, v); }, {},
        [n, r](double u) { return phi_star_quantile(n, r, u); });
}

inline ReserveDistribution make_phi_star(int n) { return make_phi_star(n, solve_reserve(n)); }

/// The worst-case marginal F*_n.
inline Marginal worst_case_marginal(int n) { return isorevenue_marginal(solve_reserve(n)); }

/// (1-r)^{n-1} - integral_r^1 (1 - r/v)^{n-1} dv at r = r*_n.
inline double minimax_regret(int n) {
    if (n < 1) throw DomainError("minimax_regret: n must be >= 1");
    const double r = solve_reserve(n);
    const auto q = numkit::integrate([&](double v) { return std::pow(1.0 - r / v, n - 1); }, r, 1.0,
                                     {}, 1e-13);
    return std::pow(1.0 - r, n - 1) - q.value;
}

inline OptimalSolution optimal_solution(int n) { return {n, solve_reserve(n), minimax_regret(n)}; }

/// c solves e^{-c} = E1(c); the limiting regret is e^{-c} - integral_0^1 e^{-c/v} dv.
inline AsymptoticConstants asymptotic_constants() {
    static const AsymptoticConstants cached = [] {
        AsymptoticConstants a;
        a.c = numkit::solve_monotone_root(
            [](double c) { return std::exp(-c) - numkit::exp_integral_e1(c); }, 0.1, 1.0, 1e-15);
        const double c = a.c;
        const auto q = numkit::integrate(
            [c](double v) { return v <= 0.0 ? 0.0 : std::exp(-c / v); }, 0.0, 1.0, {}, 1e-14);
        a.limit_regret = std::exp(-c) - q.value;
        return a;
    }();
    return cached;
}

/// Limiting reserve CDF e^{c/v} E1(c/v) on (0, 1].
inline double phi_infinity_cdf(double v) {
    if (!(v > 0.0 && v <= 1.0)) throw DomainError("phi_infinity_cdf: v must lie in (0,1]");
    return numkit::exp_scaled_e1(asymptotic_constants().c / v);
}

inline ReserveDistribution make_phi_infinity() {
    const double c = asymptotic_constants().c;
    return ReserveDistribution(
        "phi_infinity", 0.0, 1.0,
        [](double v) { return v <= 0.0 ? 0.0 : phi_infinity_cdf(std::min(v, 1.0)); },
        [c](double v) { return v <= 0.0 ? 0.0 : 1.0 / v - c * phi_infinity_cdf(v) / (v * v); });
}

} // namespace mmspa
