#pragma once

// Regret functionals of SPA(Phi) against joint valuation distributions,
// Nature's best responses, saddle-point verification, and the worst-case
// regret of SPA with a deterministic reserve.

#include "mmspa/distributions.hpp"
#include "mmspa/errors.hpp"
#include "mmspa/marginal.hpp"
#include "mmspa/mechanisms.hpp"
#include "mmspa/numkit.hpp"
#include "mmspa/optmech.hpp"
#include "mmspa/reserve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace mmspa {

enum class RegretMethod { regret_bigF, regret_F, regret_phi, monte_carlo, closed_form };

inline const char* to_string(RegretMethod m) {
    switch (m) {
    case RegretMethod::regret_bigF: return "regret_bigF";
    case RegretMethod::regret_F: return "regret_F";
    case RegretMethod::regret_phi: return "regret_phi";
    case RegretMethod::monte_carlo: return "monte_carlo";
    case RegretMethod::closed_form: return "closed_form";
    }
    return "unknown";
}

struct RegretTerm {
    std::string name;
    double value = 0.0;
};

struct RegretReport {
    double value = 0.0;
    RegretMethod method = RegretMethod::regret_bigF;
    std::vector<RegretTerm> terms;
    double err_est = 0.0;
};

inline constexpr double kRegretQuadTol = 1e-12;

namespace detail {

inline std::vector<double> merge_knots(std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace detail

/// r - int_0^r F1 + int_r^1 (1 - v Phi' - Phi)(1 - F1) + Phi (F2 - F1), r the
/// lower end of Phi's support; F1, F2 are the CDFs of the highest and second
/// highest value (F2 = 1 when n = 1).
inline RegretReport regret_bigF(const ReserveDistribution& phi, const JointSpec& joint,
                                double abs_tol = kRegretQuadTol) {
    const int n = joint.n();
    const double r = phi.support_lo();
    const auto splits = detail::merge_knots(joint.knots(), phi.breakpoints());
    auto f1 = [&](double v) { return first_order_stat_cdf(joint, n, v); };
    auto f2 = [&](double v) { return n == 1 ? 1.0 : second_order_stat_cdf(joint, v); };

    const auto below = numkit::integrate(f1, 0.0, r, splits, abs_tol);
    const auto alloc = numkit::integrate(
        [&](double v) { return (1.0 - v * phi.density(v) - phi.cdf(v)) * (1.0 - f1(v)); }, r, 1.0, splits,
        abs_tol);
    const auto second = numkit::integrate([&](double v) { return phi.cdf(v) * (f2(v) - f1(v)); }, r, 1.0,
                                          splits, abs_tol);
    RegretReport rep;
    rep.method = RegretMethod::regret_bigF;
    rep.terms = {{"below_reserve", r - below.value}, {"allocation", alloc.value}, {"second_price", second.value}};
    rep.value = r - below.value + alloc.value + second.value;
    rep.err_est = below.err_est + alloc.err_est + second.err_est;
    return rep;
}

/// The same functional with F1 = F^n and F2 - F1 = n F^{n-1} (1 - F).
inline RegretReport regret_iid(const ReserveDistribution& phi, const Marginal& marginal, int n,
                               double abs_tol = kRegretQuadTol) {
    if (n < 1) throw DomainError("regret_iid: n must be >= 1");
    const double r = phi.support_lo();
    const auto splits = detail::merge_knots(marginal.knots(), phi.breakpoints());
    auto fn = [&](double v) { return std::pow(marginal.cdf(v), n); };

    const auto below = numkit::integrate(fn, 0.0, r, splits, abs_tol);
    const auto alloc = numkit::integrate(
        [&](double v) { return (1.0 - v * phi.density(v) - phi.cdf(v)) * (1.0 - fn(v)); }, r, 1.0, splits,
        abs_tol);
    const auto second = numkit::integrate(
        [&](double v) {
            const double f = marginal.cdf(v);
            return phi.cdf(v) * n * std::pow(f, n - 1) * (1.0 - f);
        },
        r, 1.0, splits, abs_tol);
    RegretReport rep;
    rep.method = RegretMethod::regret_F;
    rep.terms = {{"below_reserve", r - below.value}, {"allocation", alloc.value}, {"second_price", second.value}};
    rep.value = r - below.value + alloc.value + second.value;
    rep.err_est = below.err_est + alloc.err_est + second.err_est;
    return rep;
}

/// 1 - (1 - (1 - f1)^n) Phi(1) - int_0^r F^n + int_r^1 [-F^n + n F^{n-1} (1 - F - v F') Phi],
/// where f1 is the atom of F at 1. Needs F absolutely continuous on (r, 1).
inline RegretReport regret_linear_phi(const ReserveDistribution& phi, const Marginal& marginal, int n,
                                      double abs_tol = kRegretQuadTol) {
    if (n < 1) throw DomainError("regret_linear_phi: n must be >= 1");
    const double r = phi.support_lo();
    if (!marginal.continuous_on_open(r, 1.0))
        throw DomainError("regret_linear_phi: marginal has an atom inside (r, 1)");
    const double f1 = marginal.atom_mass_at(1.0);
    const auto splits = detail::merge_knots(marginal.knots(), phi.breakpoints());
    auto fn = [&](double v) { return std::pow(marginal.cdf(v), n); };

    const auto below = numkit::integrate(fn, 0.0, r, splits, abs_tol);
    const auto body = numkit::integrate(
        [&](double v) {
            const double f = marginal.cdf(v);
            const double coeff = 1.0 - f - v * marginal.density(v);
            return -std::pow(f, n) + n * std::pow(f, n - 1) * coeff * phi.cdf(v);
        },
        r, 1.0, splits, abs_tol);
    const double boundary = (1.0 - std::pow(1.0 - f1, n)) * phi.cdf(1.0);
    RegretReport rep;
    rep.method = RegretMethod::regret_phi;
    rep.terms = {{"boundary", 1.0 - boundary}, {"below_reserve", -below.value}, {"body", body.value}};
    rep.value = 1.0 - boundary - below.value + body.value;
    rep.err_est = below.err_est + body.err_est;
    return rep;
}

/// Regret of SPA with deterministic reserve r:
/// r F1(r-) - int_0^r F1 + int_r^1 (F2 - F1).
inline RegretReport regret_spa_fixed(double r, const JointSpec& joint, double abs_tol = kRegretQuadTol) {
    if (!(r >= 0.0 && r <= 1.0)) throw DomainError("regret_spa_fixed: r must lie in [0,1]");
    const int n = joint.n();
    const auto splits = joint.knots();
    auto f1 = [&](double v) { return first_order_stat_cdf(joint, n, v); };
    auto f2 = [&](double v) { return n == 1 ? 1.0 : second_order_stat_cdf(joint, v); };
    const double f1_left = r > 0.0 ? first_order_stat_cdf(joint, n, r, true) : 0.0;
    const auto below = numkit::integrate(f1, 0.0, r, splits, abs_tol);
    const auto above = numkit::integrate([&](double v) { return f2(v) - f1(v); }, r, 1.0, splits, abs_tol);
    RegretReport rep;
    rep.method = RegretMethod::regret_bigF;
    rep.terms = {{"no_sale", r * f1_left - below.value}, {"second_price", above.value}};
    rep.value = r * f1_left - below.value + above.value;
    rep.err_est = below.err_est + above.err_est;
    return rep;
}

/// Regret from a Monte Carlo run, tagged with its standard error.
inline RegretReport regret_monte_carlo(const Mechanism& mech, const JointSpec& joint, std::size_t count,
                                       std::uint64_t seed) {
    const SimulationResult s = simulate(mech, joint, count, seed);
    RegretReport rep;
    rep.method = RegretMethod::monte_carlo;
    rep.value = s.regret.mean;
    rep.err_est = s.regret.stderr_mean;
    rep.terms = {{"benchmark", s.benchmark.mean}, {"revenue", s.revenue.mean}};
    return rep;
}

// ---------------------------------------------------------------------------
// Nature's best response

struct PointwiseBestResponse {
    double z = 0.0;         // closed-form maximiser
    double z_search = 0.0;  // golden-section cross-check
};

/// Maximiser over z in [0,1] of (n r - v)/(v - r) + n z^{n-1} - ((n-1) v/(v - r)) z^n at r = r*_n.
inline PointwiseBestResponse nature_pointwise_best_response(int n, double v) {
    const double r = solve_reserve(n);
    if (!(v > r && v < 1.0)) throw DomainError("nature_pointwise_best_response: v outside (r*, 1)");
    PointwiseBestResponse out;
    out.z = 1.0 - r / v;
    if (n == 1) {
        out.z_search = out.z; // objective is flat in z
        return out;
    }
    using LD = long double;
    const LD lv = v;
    const LD lr = r;
    auto g = [&](LD z) {
        return (n * lr - lv) / (lv - lr) + n * std::pow(z, n - 1) - (n - 1) * lv / (lv - lr) * std::pow(z, n);
    };
    const LD inv_phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    LD a = 0.0L, b = 1.0L;
    LD c = b - inv_phi * (b - a);
    LD d = a + inv_phi * (b - a);
    LD gc = g(c), gd = g(d);
    while (b - a > 1e-13L) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    out.z_search = static_cast<double>(0.5L * (a + b));
    return out;
}

struct GridBestResponse {
    std::vector<double> nodes; // cell i is [nodes[i], nodes[i+1])
    std::vector<double> cdf;   // F on cell i
    double value = 0.0;
    double near_tie_diameter = 0.0; // widest near-optimal z-set over cells before projection
    Marginal marginal = point_mass(1.0); // the step CDF as a discrete marginal
};

namespace detail {

struct CellObjective {
    double a = 0.0; // int (1 - Phi - v Phi')
    double b = 0.0; // int Phi
};

inline double cell_value(const CellObjective& c, int n, double z) {
    return c.a * (1.0 - std::pow(z, n)) + c.b * n * std::pow(z, n - 1) * (1.0 - z);
}

inline double cell_argmax(const CellObjective& c, int n, double* diameter = nullptr) {
    std::vector<double> cand{0.0, 1.0};
    if (n >= 2 && c.a + c.b * n > 0.0) {
        const double s = c.b * (n - 1) / (c.a + c.b * n);
        if (s > 0.0 && s < 1.0) cand.push_back(s);
    }
    // Near-ties go to the interior stationary point, then to the smaller z.
    double best = cand[0];
    double best_val = cell_value(c, n, best);
    for (std::size_t i = 1; i < cand.size(); ++i) {
        const double z = cand[i];
        const double val = cell_value(c, n, z);
        const bool tie = std::abs(val - best_val) <= 1e-15;
        if (val > best_val + 1e-15 || (tie && i == 2)) {
            best = z;
            best_val = val;
        }
    }
    if (diameter) {
        double lo = best, hi = best;
        for (double z : cand)
            if (cell_value(c, n, z) >= best_val - 1e-12) {
                lo = std::min(lo, z);
                hi = std::max(hi, z);
            }
        *diameter = hi - lo;
    }
    return best;
}

} // namespace detail

/// Maximises the iid regret of SPA(Phi) over step CDFs that are constant on
/// the cells of a uniform grid (plus Phi's breakpoints and `extra_knots`):
/// cellwise maximisation followed by pool-adjacent-violators with
/// re-optimisation of pooled blocks.
inline GridBestResponse nature_grid_best_response(const ReserveDistribution& phi, int n, int grid_size = 512,
                                                  std::vector<double> extra_knots = {}) {
    if (grid_size < 64) throw DomainError("nature_grid_best_response: grid_size must be >= 64");
    if (n < 1) throw DomainError("nature_grid_best_response: n must be >= 1");
    std::vector<double> nodes = uniform_grid(grid_size + 1);
    for (double k : phi.breakpoints()) nodes.push_back(k);
    for (double k : extra_knots)
        if (k >= 0.0 && k <= 1.0) nodes.push_back(k);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    const std::size_t cells = nodes.size() - 1;
    std::vector<detail::CellObjective> obj(cells);
    const auto bp = phi.breakpoints();
    for (std::size_t i = 0; i < cells; ++i) {
        const double lo = nodes[i];
        const double hi = nodes[i + 1];
        obj[i].a = (hi - lo) - (hi * phi.cdf(hi) - lo * phi.cdf(lo));
        if (hi <= phi.support_lo())
            obj[i].b = 0.0;
        else if (lo >= phi.support_hi())
            obj[i].b = hi - lo;
        else
            obj[i].b = numkit::integrate([&](double v) { return phi.cdf(v); }, lo, hi, bp, 1e-14).value;
    }

    struct Block {
        detail::CellObjective c;
        std::size_t first, last;
        double z;
    };
    std::vector<Block> blocks;
    double diameter = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        double d = 0.0;
        Block b{obj[i], i, i, detail::cell_argmax(obj[i], n, &d)};
        diameter = std::max(diameter, d);
        blocks.push_back(b);
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].z > blocks.back().z) {
            Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            prev.c.a += top.c.a;
            prev.c.b += top.c.b;
            prev.last = top.last;
            prev.z = detail::cell_argmax(prev.c, n);
        }
    }

    GridBestResponse out;
    out.nodes = nodes;
    out.cdf.resize(cells);
    numkit::CompensatedSum total;
    for (const Block& b : blocks) {
        for (std::size_t i = b.first; i <= b.last; ++i) out.cdf[i] = b.z;
        total += detail::cell_value(b.c, n, b.z);
    }
    out.value = total.value();
    out.near_tie_diameter = diameter;

    std::vector<Atom> atoms;
    double prev = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (out.cdf[i] > prev) atoms.push_back({nodes[i], out.cdf[i] - prev});
        prev = std::max(prev, out.cdf[i]);
    }
    if (prev < 1.0) atoms.push_back({1.0, 1.0 - prev});
    out.marginal = discrete_marginal(std::move(atoms));
    return out;
}

// ---------------------------------------------------------------------------
// Random probes

/// Random marginal on [0,1]: uniform, discrete, piecewise-uniform with atoms,
/// power with atoms, or isorevenue.
inline Marginal random_marginal(Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> family(0, 4);
    auto sorted_points = [&](int k) {
        std::vector<double> x(static_cast<std::size_t>(k));
        for (double& v : x) v = U(rng);
        std::sort(x.begin(), x.end());
        x.erase(std::unique(x.begin(), x.end()), x.end());
        return x;
    };
    auto random_masses = [&](std::size_t k, double total) {
        std::vector<double> m(k);
        double s = 0.0;
        for (double& x : m) {
            x = 0.05 + U(rng);
            s += x;
        }
        for (double& x : m) x *= total / s;
        return m;
    };
    switch (family(rng)) {
    case 0: {
        const auto p = sorted_points(2);
        if (p.size() < 2 || p[1] - p[0] < 1e-3) return uniform_marginal(0.0, 1.0);
        return uniform_marginal(p[0], p[1]);
    }
    case 1: {
        std::uniform_int_distribution<int> k(1, 5);
        const auto loc = sorted_points(k(rng));
        const auto mass = random_masses(loc.size(), 1.0);
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < loc.size(); ++i) atoms.push_back({loc[i], mass[i]});
        return discrete_marginal(std::move(atoms));
    }
    case 2: {
        std::uniform_int_distribution<int> k(1, 4);
        std::vector<double> knots = sorted_points(k(rng));
        knots.insert(knots.begin(), 0.0);
        knots.push_back(1.0);
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
        const double atom_mass = U(rng) < 0.5 ? 0.0 : 0.5 * U(rng);
        const auto masses = random_masses(knots.size() - 1, 1.0 - atom_mass);
        std::vector<Atom> atoms;
        if (atom_mass > 0.0) atoms.push_back({U(rng) < 0.5 ? 1.0 : U(rng), atom_mass});
        return piecewise_linear_marginal(std::move(knots), masses, std::move(atoms));
    }
    case 3: {
        const double lo = 0.8 * U(rng);
        const double exponent = 0.3 + 3.0 * U(rng);
        const double top = 0.6 * U(rng);
        std::vector<Atom> atoms;
        if (top > 0.0) atoms.push_back({1.0, top});
        return power_marginal(lo, 1.0, exponent, 1.0 - top, std::move(atoms));
    }
    default:
        return isorevenue_marginal(0.02 + 0.9 * U(rng));
    }
}

/// Random reserve CDF: uniform on a sub-interval, power, or piecewise linear.
inline ReserveDistribution random_reserve(Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> family(0, 2);
    const double a = 0.9 * U(rng);
    const double b = a + (1.0 - a) * (0.1 + 0.9 * U(rng));
    switch (family(rng)) {
    case 0: return uniform_reserve(a, b);
    case 1: return power_reserve(a, b, 1.0 + 3.0 * U(rng));
    default: {
        std::vector<double> knots{a};
        std::vector<double> values{0.0};
        std::uniform_int_distribution<int> k(1, 4);
        const int inner = k(rng);
        std::vector<double> xs, ys;
        for (int i = 0; i < inner; ++i) {
            xs.push_back(a + (b - a) * U(rng));
            ys.push_back(U(rng));
        }
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        for (int i = 0; i < inner; ++i) {
            if (xs[static_cast<std::size_t>(i)] > knots.back() && xs[static_cast<std::size_t>(i)] < b) {
                knots.push_back(xs[static_cast<std::size_t>(i)]);
                values.push_back(ys[static_cast<std::size_t>(i)]);
            }
        }
        knots.push_back(b);
        values.push_back(1.0);
        return piecewise_linear_reserve(std::move(knots), std::move(values));
    }
    }
}

/// Random mixture of 2 to 4 random marginals.
inline JointSpec random_mixture(int n, Rng& rng) {
    std::uniform_int_distribution<int> k(2, 4);
    std::uniform_real_distribution<double> U(0.05, 1.0);
    const int m = k(rng);
    std::vector<double> w(static_cast<std::size_t>(m));
    double s = 0.0;
    for (double& x : w) {
        x = U(rng);
        s += x;
    }
    for (double& x : w) x /= s;
    std::vector<Marginal> comps;
    for (int i = 0; i < m; ++i) comps.push_back(random_marginal(rng));
    return JointSpec::mixture(n, std::move(w), std::move(comps));
}

/// Random exchangeable affiliated pmf on a random support of 2 to 4 points
/// in [0,1], rejected until check_affiliation accepts it.
inline DiscreteExchangeable random_affiliated_joint(int n, Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> k(2, 4);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<double> support(static_cast<std::size_t>(k(rng)));
        for (double& x : support) x = U(rng);
        std::sort(support.begin(), support.end());
        if (std::adjacent_find(support.begin(), support.end()) != support.end()) continue;
        DiscreteExchangeable d = random_affiliated_discrete(n, std::move(support), rng);
        if (check_affiliation(d).ok) return d;
    }
    throw SamplingBudgetExhausted("random_affiliated_joint: no affiliated sample accepted");
}

/// Random admissible (Phi, F) pair for the three regret representations:
/// Phi smooth on [r, b], F continuous on (r, 1) with atoms only in [0, r] and at 1.
inline std::pair<ReserveDistribution, Marginal> random_representation_pair(Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    ReserveDistribution phi = random_reserve(rng);
    const double r = phi.support_lo();
    std::vector<double> knots{0.0};
    for (int i = 0; i < 3; ++i) knots.push_back(U(rng));
    knots.push_back(1.0);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<Atom> atoms;
    double atom_total = 0.0;
    if (U(rng) < 0.7) {
        const double m = 0.4 * U(rng);
        atoms.push_back({1.0, m});
        atom_total += m;
    }
    if (U(rng) < 0.5) {
        const double m = 0.3 * U(rng);
        atoms.push_back({r * U(rng), m});
        atom_total += m;
    }
    std::vector<double> masses(knots.size() - 1);
    double s = 0.0;
    for (double& x : masses) {
        x = 0.05 + U(rng);
        s += x;
    }
    for (double& x : masses) x *= (1.0 - atom_total) / s;
    return {std::move(phi), piecewise_linear_marginal(std::move(knots), std::move(masses), std::move(atoms))};
}

// ---------------------------------------------------------------------------
// Saddle verification

struct SaddleOptions {
    double nature_tol = 1e-3;
    double seller_tol = 1e-6;
    int grid_size = 512;
    int iid_probes = 500;
    int mixture_probes = 100;
    int affiliated_probes = 20;
    int reserve_grid = 50;
    int reserve_probes = 50;
    std::uint64_t seed = 0;
};

struct SaddleReport {
    int n = 1;
    double minimax_value = 0.0; // closed-form minimax regret
    double optimal_value = 0.0; // regret engine at (Phi*_n, F*_n)
    double nature_gap = -std::numeric_limits<double>::infinity();
    std::string nature_worst_probe;
    double seller_gap = std::numeric_limits<double>::infinity();
    std::string seller_worst_probe;
    double grid_value = 0.0;
    double grid_near_tie_diameter = 0.0;
    double deterministic_rstar_margin = 0.0; // R(SPA(r*_n), F*_n) - R*
    int nature_probes = 0;
    int seller_probes = 0;
};

/// Numerical check of R(Phi*, F) <= R* <= R(dev, F*) over a family of Nature
/// and seller probes. Seller probes are SPA with deterministic, random
/// parametric and Phi*_m reserves; this is a necessary-condition check only.
inline SaddleReport verify_saddle(int n, const SaddleOptions& opt = {}) {
    if (n < 1) throw DomainError("verify_saddle: n must be >= 1");
    if (opt.nature_tol < 1e-3) throw DomainError("verify_saddle: tol must be >= 1e-3");
    SaddleReport rep;
    rep.n = n;
    const double r_star = solve_reserve(n);
    const double R = minimax_regret(n);
    rep.minimax_value = R;
    const ReserveDistribution phi = make_phi_star(n);
    const Marginal fstar = worst_case_marginal(n);
    const JointSpec star_joint = JointSpec::iid(n, fstar);
    rep.optimal_value = regret_iid(phi, fstar, n).value;

    Rng rng(opt.seed);
    auto nature = [&](const std::string& name, double value) {
        ++rep.nature_probes;
        if (value - R > rep.nature_gap) {
            rep.nature_gap = value - R;
            rep.nature_worst_probe = name;
        }
    };
    auto seller = [&](const std::string& name, double value) {
        ++rep.seller_probes;
        if (value - R < rep.seller_gap) {
            rep.seller_gap = value - R;
            rep.seller_worst_probe = name;
        }
    };

    const GridBestResponse grid = nature_grid_best_response(phi, n, opt.grid_size, {r_star, 1.0});
    rep.grid_value = grid.value;
    rep.grid_near_tie_diameter = grid.near_tie_diameter;
    nature("grid_best_response", grid.value);
    for (int i = 0; i < opt.iid_probes; ++i)
        nature("iid#" + std::to_string(i), regret_iid(phi, random_marginal(rng), n).value);
    for (int i = 0; i < opt.mixture_probes; ++i)
        nature("mixture#" + std::to_string(i), regret_bigF(phi, random_mixture(n, rng)).value);
    nature("spike(F*)", regret_bigF(phi, JointSpec::spike(n, fstar)).value);

    if (n >= 2 && n <= DiscreteExchangeable::kMaxBuyers) {
        for (int i = 0; i < opt.affiliated_probes; ++i)
            nature("affiliated#" + std::to_string(i),
                   regret_bigF(phi, JointSpec::discrete(random_affiliated_joint(n, rng))).value);
    }

    for (int i = 0; i < opt.reserve_grid; ++i) {
        const double r = static_cast<double>(i) / (opt.reserve_grid - 1);
        seller("spa_fixed(" + std::to_string(r) + ")", regret_spa_fixed(r, star_joint).value);
    }
    for (int i = 0; i < opt.reserve_probes; ++i) {
        const ReserveDistribution dev = random_reserve(rng);
        seller("reserve#" + std::to_string(i) + ":" + dev.name(), regret_iid(dev, fstar, n).value);
    }
    for (int m : {1, 2, 3, 4, 5, 10}) {
        if (m == n) continue;
        seller("phi_star_" + std::to_string(m), regret_iid(make_phi_star(m), fstar, n).value);
    }
    rep.deterministic_rstar_margin = regret_spa_fixed(r_star, star_joint).value - R;

    if (rep.nature_gap > opt.nature_tol) throw SaddleViolation(rep.nature_worst_probe, rep.nature_gap);
    if (rep.seller_gap < -opt.seller_tol) throw SaddleViolation(rep.seller_worst_probe, rep.seller_gap);
    return rep;
}

// ---------------------------------------------------------------------------
// SPA with a deterministic reserve

/// sup over iid distributions of the regret of SPA(r).
inline double spa_fixed_reserve_worstcase(int n, double r) {
    if (n < 1) throw DomainError("spa_fixed_reserve_worstcase: n must be >= 1");
    if (!(r >= 0.0 && r <= 1.0)) throw DomainError("spa_fixed_reserve_worstcase: r must lie in [0,1]");
    if (n == 1) return std::max(1.0 - r, r);
    if (r >= 0.5) return r;
    const double q = 1.0 - r;
    return std::pow(q, n) * std::pow(n - 1.0, n - 1) / std::pow(q * n - r, n - 1);
}

struct DeterministicReserve {
    double r = 0.0;
    double regret = 0.0;
    double grid_r = 0.0;      // grid minimiser
    double grid_regret = 0.0; // its worst-case regret
};

/// r = 1/(n+1) with regret (n/(n+1))^n, cross-checked by minimising the
/// worst-case regret on a grid followed by golden-section refinement.
inline DeterministicReserve optimal_deterministic_reserve(int n) {
    if (n < 1) throw DomainError("optimal_deterministic_reserve: n must be >= 1");
    DeterministicReserve out;
    out.r = 1.0 / (n + 1);
    out.regret = std::pow(static_cast<double>(n) / (n + 1), n);
    constexpr int kGrid = 10000;
    int best = 0;
    for (int i = 1; i <= kGrid; ++i)
        if (spa_fixed_reserve_worstcase(n, static_cast<double>(i) / kGrid) <
            spa_fixed_reserve_worstcase(n, static_cast<double>(best) / kGrid))
            best = i;
    const double lo = std::max(0.0, (best - 1.0) / kGrid);
    const double hi = std::min(1.0, (best + 1.0) / kGrid);
    out.grid_r = numkit::golden_section_max([n](double r) { return -spa_fixed_reserve_worstcase(n, r); }, lo,
                                            hi, 1e-12);
    out.grid_regret = spa_fixed_reserve_worstcase(n, out.grid_r);
    return out;
}

/// iid two-point law: mass c* = (1-r)(n-1)/((1-r)n - r) just below r and 1 - c* at 1.
inline JointSpec spa_worstcase_twopoint(int n, double r, double epsilon = 1e-4) {
    if (n < 2) throw DomainError("spa_worstcase_twopoint: n must be >= 2");
    if (!(r >= 0.0 && r <= 0.5)) throw DomainError("spa_worstcase_twopoint: r must lie in [0, 1/2]");
    if (!(epsilon >= 0.0)) throw DomainError("spa_worstcase_twopoint: epsilon must be >= 0");
    const double c = (1.0 - r) * (n - 1) / ((1.0 - r) * n - r);
    const double low = std::max(0.0, r - epsilon);
    return JointSpec::iid(n, discrete_marginal({{low, c}, {1.0, 1.0 - c}}));
}

// ---------------------------------------------------------------------------
// General (non-iid) distributions

struct GeneralClassResult {
    double value = 0.0;
    bool case_one = false; // v1 >= 1/e >= v2
    bool bounded = false;  // value <= 1/e + 1e-10
};

/// Pointwise regret of SPA(Phi*_1) at the valuation vector v.
inline GeneralClassResult general_class_check(std::span<const double> v) {
    static const ReserveDistribution phi1 = make_phi_star(1);
    const OrderStats s = order_stats(v);
    const double inv_e = 1.0 / std::numbers::e;
    GeneralClassResult out;
    out.value = pointwise_regret(phi1, v);
    out.case_one = s.first >= inv_e && s.second <= inv_e;
    out.bounded = out.value <= inv_e + 1e-10;
    return out;
}

struct MixtureEquivalence {
    bool ok = true;
    double max_linearity_error = 0.0; // |R(mixture) - sum_j w_j R(G_j)|
    double max_regret = 0.0;
    int probes = 0;
};

/// Regret of Phi*_n is linear in the mixing measure and never exceeds R*_n.
inline MixtureEquivalence mixture_equivalence_check(int n, int probes, std::uint64_t seed = 0) {
    if (probes < 100) throw DomainError("mixture_equivalence_check: need at least 100 probes");
    const ReserveDistribution phi = make_phi_star(n);
    const double R = minimax_regret(n);
    Rng rng(seed);
    MixtureEquivalence out;
    out.probes = probes;
    for (int i = 0; i < probes; ++i) {
        const JointSpec mix = random_mixture(n, rng);
        const auto* m = mix.as<MixtureJoint>();
        const double whole = regret_bigF(phi, mix).value;
        numkit::CompensatedSum parts;
        for (std::size_t j = 0; j < m->weights.size(); ++j)
            parts += m->weights[j] * regret_iid(phi, m->components[j], n).value;
        out.max_linearity_error = std::max(out.max_linearity_error, std::abs(whole - parts.value()));
        out.max_regret = std::max(out.max_regret, whole);
    }
    out.ok = out.max_linearity_error <= 1e-9 && out.max_regret <= R + 1e-6;
    return out;
}

} // namespace mmspa
