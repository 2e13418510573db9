#pragma once

#include "mmspa/errors.hpp"
#include "mmspa/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mmspa {

struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

/// Absolutely continuous part of a marginal on [lo, hi].
/// `mass_to(v)` is the integral of the density over [lo, v]; `inverse(m)`, when
/// set, returns the v with mass_to(v) = m.
struct DensityPiece {
    double lo = 0.0;
    double hi = 0.0;
    std::function<double(double)> density;
    std::function<double(double)> mass_to;
    std::function<double(double)> inverse;
};

// Parametric families. They are kept alongside the evaluated representation so
// that a marginal can be written back out as JSON.
struct IsorevenueShape {
    double r = 0.0;
};
struct UniformShape {
    double lo = 0.0;
    double hi = 1.0;
};
struct DiscreteShape {
    std::vector<Atom> atoms;
};
/// Piecewise-uniform density: `masses[i]` spread evenly over [knots[i], knots[i+1]].
struct PiecewiseLinearShape {
    std::vector<double> knots;
    std::vector<double> masses;
    std::vector<Atom> atoms;
};
/// F(v) = ((v - lo) / (hi - lo))^exponent on [lo, hi], scaled by `continuous_mass`,
/// plus any extra atoms.
struct PowerShape {
    double lo = 0.0;
    double hi = 1.0;
    double exponent = 1.0;
    double continuous_mass = 1.0;
    std::vector<Atom> atoms;
};

using MarginalShape = std::variant<std::monostate, IsorevenueShape, UniformShape, DiscreteShape,
                                   PiecewiseLinearShape, PowerShape>;

inline constexpr double kMassTol = 1e-12;

/// One-dimensional valuation distribution on [0, 1]: density pieces plus an
/// explicit atom list. Pieces may not overlap each other; atoms may sit
/// anywhere, including inside a piece. Immutable once built.
class Marginal {
public:
    Marginal(std::vector<DensityPiece> pieces, std::vector<Atom> atoms,
             MarginalShape shape = std::monostate{})
        : shape_(std::move(shape)) {
        build(std::move(pieces), std::move(atoms));
    }

    /// F(v) = P(V <= v).
    double cdf(double v) const {
        if (v < 0.0) return 0.0;
        if (v >= 1.0) return 1.0;
        const auto it = std::upper_bound(atom_locs_.begin(), atom_locs_.end(), v);
        return std::min(1.0, continuous_part(v) + atom_cum_[static_cast<std::size_t>(it - atom_locs_.begin())]);
    }

    /// F(v-) = P(V < v).
    double cdf_left(double v) const {
        if (v <= 0.0) return 0.0;
        if (v > 1.0) return 1.0;
        const auto it = std::lower_bound(atom_locs_.begin(), atom_locs_.end(), v);
        return std::min(1.0, continuous_part(v) + atom_cum_[static_cast<std::size_t>(it - atom_locs_.begin())]);
    }

    /// Density of the continuous part (F' away from atoms and knots).
    double density(double v) const {
        const std::size_t i = piece_index(v);
        if (i == kNone || v > pieces_[i].hi) return 0.0;
        return pieces_[i].density(v);
    }

    /// Generalised inverse inf{v : F(v) >= u}.
    double quantile(double u) const {
        u = std::clamp(u, 0.0, 1.0);
        if (u <= 0.0) return support_lo();
        // First knot k with F(k) >= u; F is continuous strictly between knots.
        const auto it = std::partition_point(knots_.begin(), knots_.end(),
                                             [&](double k) { return cdf(k) < u; });
        if (it == knots_.end()) return support_hi();
        const double k = *it;
        if (cdf_left(k) < u || it == knots_.begin()) return k;
        const double prev = *(it - 1);
        const double mid = 0.5 * (prev + k);
        const std::size_t i = piece_index(mid);
        if (i == kNone || pieces_[i].hi < mid) return k;
        const DensityPiece& p = pieces_[i];
        // F(v) = base + p.mass_to(v) on (prev, k).
        const double base = cdf(prev) - p.mass_to(std::max(prev, p.lo));
        const double m = u - base;
        if (p.inverse) return std::clamp(p.inverse(m), prev, k);
        return numkit::solve_monotone_root([&](double v) { return p.mass_to(v) - m; }, std::max(prev, p.lo),
                                           std::min(k, p.hi), 1e-14);
    }

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    const std::vector<DensityPiece>& pieces() const noexcept { return pieces_; }
    const MarginalShape& shape() const noexcept { return shape_; }

    /// Mass of the atom sitting exactly at `v` (0 if none).
    double atom_mass_at(double v) const {
        for (const Atom& a : atoms_)
            if (a.location == v) return a.mass;
        return 0.0;
    }

    /// Piece endpoints and atom locations: every point where F may jump or kink.
    std::vector<double> knots() const { return knots_; }

    double support_lo() const noexcept { return knots_.empty() ? 0.0 : knots_.front(); }
    double support_hi() const noexcept { return knots_.empty() ? 0.0 : knots_.back(); }

    /// True when no atom lies strictly inside (lo, hi).
    bool continuous_on_open(double lo, double hi) const {
        for (const Atom& a : atoms_)
            if (a.location > lo && a.location < hi) return false;
        return true;
    }

    /// E[V] = sum of atom contributions plus the integral of v f(v).
    double mean() const {
        numkit::CompensatedSum s;
        for (const Atom& a : atoms_) s += a.location * a.mass;
        for (const DensityPiece& p : pieces_) {
            auto r = numkit::integrate([&](double v) { return v * p.density(v); }, p.lo, p.hi, {},
                                       1e-13);
            s += r.value;
        }
        return s.value();
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    /// Index of the last piece with lo <= v, or kNone.
    std::size_t piece_index(double v) const {
        const auto it = std::upper_bound(piece_los_.begin(), piece_los_.end(), v);
        if (it == piece_los_.begin()) return kNone;
        return static_cast<std::size_t>(it - piece_los_.begin()) - 1;
    }

    double continuous_part(double v) const {
        const std::size_t i = piece_index(v);
        if (i == kNone) return 0.0;
        const DensityPiece& p = pieces_[i];
        const double within = v >= p.hi ? piece_mass_[i] : std::clamp(p.mass_to(v), 0.0, piece_mass_[i]);
        return piece_cum_[i] + within;
    }

    void build(std::vector<DensityPiece> pieces, std::vector<Atom> atoms) {
        std::sort(atoms.begin(), atoms.end(),
                  [](const Atom& a, const Atom& b) { return a.location < b.location; });
        for (const Atom& a : atoms) {
            if (!(a.location >= 0.0 && a.location <= 1.0))
                throw DomainError("Marginal: atom location outside [0,1]");
            if (!(a.mass > 0.0)) throw DomainError("Marginal: atom mass must be positive");
            if (!atoms_.empty() && atoms_.back().location == a.location)
                atoms_.back().mass += a.mass;
            else
                atoms_.push_back(a);
        }
        std::sort(pieces.begin(), pieces.end(),
                  [](const DensityPiece& a, const DensityPiece& b) { return a.lo < b.lo; });
        for (DensityPiece& p : pieces) {
            if (!(p.lo >= 0.0 && p.hi <= 1.0 && p.lo < p.hi))
                throw DomainError("Marginal: density piece outside [0,1] or empty");
            if (!p.density || !p.mass_to) throw DomainError("Marginal: incomplete density piece");
            const double mid = 0.5 * (p.lo + p.hi);
            if (p.density(mid) < 0.0) throw DomainError("Marginal: negative density");
            if (!pieces_.empty() && p.lo < pieces_.back().hi)
                throw DomainError("Marginal: overlapping density pieces");
            pieces_.push_back(std::move(p));
        }

        numkit::CompensatedSum total;
        for (const DensityPiece& p : pieces_) {
            const double m = p.mass_to(p.hi);
            piece_los_.push_back(p.lo);
            piece_cum_.push_back(total.value());
            piece_mass_.push_back(m);
            total += m;
            knots_.push_back(p.lo);
            knots_.push_back(p.hi);
        }
        numkit::CompensatedSum atom_total;
        atom_cum_.push_back(0.0);
        for (const Atom& a : atoms_) {
            atom_locs_.push_back(a.location);
            atom_total += a.mass;
            atom_cum_.push_back(atom_total.value());
            knots_.push_back(a.location);
        }
        total += atom_total.value();
        std::sort(knots_.begin(), knots_.end());
        knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
        if (std::abs(total.value() - 1.0) > kMassTol)
            throw DomainError("Marginal: total mass " + std::to_string(total.value()) + " != 1");
    }

    std::vector<DensityPiece> pieces_;
    std::vector<Atom> atoms_;
    std::vector<double> piece_los_;
    std::vector<double> piece_cum_;
    std::vector<double> piece_mass_;
    std::vector<double> atom_locs_;
    std::vector<double> atom_cum_;
    std::vector<double> knots_;
    MarginalShape shape_;
};

// ---------------------------------------------------------------------------
// Factories

/// F(v) = 1 - r/v on [r, 1), atom of mass r at 1. Every posted price in
/// [r, 1) earns revenue exactly r.
inline Marginal isorevenue_marginal(double r) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("isorevenue_marginal: r must lie in (0,1)");
    DensityPiece p;
    p.lo = r;
    p.hi = 1.0;
    p.density = [r](double v) { return r / (v * v); };
    p.mass_to = [r](double v) { return 1.0 - r / v; };
    p.inverse = [r](double m) { return r / (1.0 - m); };
    return Marginal({std::move(p)}, {{1.0, r}}, IsorevenueShape{r});
}

inline Marginal uniform_marginal(double lo = 0.0, double hi = 1.0) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) throw DomainError("uniform_marginal: bad bounds");
    DensityPiece p;
    p.lo = lo;
    p.hi = hi;
    const double h = 1.0 / (hi - lo);
    p.density = [h](double) { return h; };
    p.mass_to = [lo, h](double v) { return (v - lo) * h; };
    p.inverse = [lo, hi](double m) { return lo + m * (hi - lo); };
    return Marginal({std::move(p)}, {}, UniformShape{lo, hi});
}

inline Marginal discrete_marginal(std::vector<Atom> atoms) {
    std::vector<Atom> copy = atoms;
    return Marginal({}, std::move(copy), DiscreteShape{std::move(atoms)});
}

inline Marginal point_mass(double location) { return discrete_marginal({{location, 1.0}}); }

inline Marginal piecewise_linear_marginal(std::vector<double> knots, std::vector<double> masses,
                                          std::vector<Atom> atoms = {}) {
    if (knots.size() != masses.size() + 1)
        throw DomainError("piecewise_linear_marginal: need one mass per segment");
    std::vector<DensityPiece> pieces;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        const double lo = knots[i];
        const double hi = knots[i + 1];
        const double m = masses[i];
        if (m < 0.0) throw DomainError("piecewise_linear_marginal: negative mass");
        if (m == 0.0) continue;
        DensityPiece p;
        p.lo = lo;
        p.hi = hi;
        const double h = m / (hi - lo);
        p.density = [h](double) { return h; };
        p.mass_to = [lo, h](double v) { return (v - lo) * h; };
        p.inverse = [lo, h](double q) { return lo + q / h; };
        pieces.push_back(std::move(p));
    }
    std::vector<Atom> copy = atoms;
    return Marginal(std::move(pieces), std::move(copy),
                    PiecewiseLinearShape{std::move(knots), std::move(masses), std::move(atoms)});
}

inline Marginal power_marginal(double lo, double hi, double exponent, double continuous_mass = 1.0,
                               std::vector<Atom> atoms = {}) {
    if (!(exponent > 0.0)) throw DomainError("power_marginal: exponent must be positive");
    if (!(continuous_mass > 0.0 && continuous_mass <= 1.0))
        throw DomainError("power_marginal: continuous_mass must lie in (0,1]");
    DensityPiece p;
    p.lo = lo;
    p.hi = hi;
    const double w = hi - lo;
    const double cm = continuous_mass;
    p.density = [=](double v) {
        const double t = std::max(0.0, (v - lo) / w);
        return cm * exponent * std::pow(t, exponent - 1.0) / w;
    };
    p.mass_to = [=](double v) { return cm * std::pow(std::max(0.0, (v - lo) / w), exponent); };
    p.inverse = [=](double m) { return lo + w * std::pow(m / cm, 1.0 / exponent); };
    std::vector<Atom> copy = atoms;
    return Marginal({std::move(p)}, std::move(copy),
                    PowerShape{lo, hi, exponent, continuous_mass, std::move(atoms)});
}

/// Rebuilds a marginal from its parametric description.
inline Marginal make_marginal(const MarginalShape& shape) {
    return std::visit(
        [](const auto& s) -> Marginal {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, std::monostate>)
                throw DomainError("make_marginal: marginal has no parametric description");
            else if constexpr (std::is_same_v<S, IsorevenueShape>)
                return isorevenue_marginal(s.r);
            else if constexpr (std::is_same_v<S, UniformShape>)
                return uniform_marginal(s.lo, s.hi);
            else if constexpr (std::is_same_v<S, DiscreteShape>)
                return discrete_marginal(s.atoms);
            else if constexpr (std::is_same_v<S, PiecewiseLinearShape>)
                return piecewise_linear_marginal(s.knots, s.masses, s.atoms);
            else
                return power_marginal(s.lo, s.hi, s.exponent, s.continuous_mass, s.atoms);
        },
        shape);
}

} // namespace mmspa
