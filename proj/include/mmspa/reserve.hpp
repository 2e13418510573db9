#pragma once

#include "mmspa/errors.hpp"
#include "mmspa/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace mmspa {

/// Distribution of the random reserve price of SPA(Phi). The CDF is
/// continuous on [support_lo, support_hi] with Phi(support_lo) = 0 and
/// Phi(support_hi) = 1; `knots` lists interior points where the density may jump.
class ReserveDistribution {
public:
    using Fn = std::function<double(double)>;

    ReserveDistribution(std::string name, double support_lo, double support_hi, Fn cdf, Fn density,
                        std::vector<double> knots = {}, Fn quantile = {})
        : name_(std::move(name)), lo_(support_lo), hi_(support_hi), cdf_(std::move(cdf)),
          density_(std::move(density)), quantile_(std::move(quantile)), knots_(std::move(knots)) {
        if (!(lo_ >= 0.0 && hi_ <= 1.0 && lo_ < hi_))
            throw DomainError("ReserveDistribution: support must be a nonempty subinterval of [0,1]");
        if (!cdf_) throw DomainError("ReserveDistribution: missing cdf");
        if (!density_) {
            // Central differences for CDFs supplied without an analytic density.
            Fn c = cdf_;
            const double lo = lo_;
            const double hi = hi_;
            density_ = [c, lo, hi](double v) {
                constexpr double h = 1e-6;
                const double a = std::max(lo, v - h);
                const double b = std::min(hi, v + h);
                return (c(b) - c(a)) / (b - a);
            };
        }
        std::sort(knots_.begin(), knots_.end());
        knots_.erase(std::remove_if(knots_.begin(), knots_.end(),
                                    [&](double k) { return !(k > lo_ && k < hi_); }),
                     knots_.end());
        knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
    }

    const std::string& name() const noexcept { return name_; }
    double support_lo() const noexcept { return lo_; }
    double support_hi() const noexcept { return hi_; }
    const std::vector<double>& knots() const noexcept { return knots_; }

    /// Support endpoints plus interior knots.
    std::vector<double> breakpoints() const {
        std::vector<double> b{lo_};
        b.insert(b.end(), knots_.begin(), knots_.end());
        b.push_back(hi_);
        return b;
    }

    double cdf(double v) const {
        if (v <= lo_) return 0.0;
        if (v >= hi_) return 1.0;
        return std::clamp(cdf_(v), 0.0, 1.0);
    }

    double density(double v) const {
        if (v <= lo_ || v >= hi_) return 0.0;
        return density_(v);
    }

    double quantile(double u) const {
        u = std::clamp(u, 0.0, 1.0);
        if (u <= 0.0) return lo_;
        if (u >= 1.0) return hi_;
        if (quantile_) return std::clamp(quantile_(u), lo_, hi_);
        return numkit::solve_monotone_root([&](double v) { return cdf(v) - u; }, lo_, hi_, 1e-14);
    }

private:
    std::string name_;
    double lo_;
    double hi_;
    Fn cdf_;
    Fn density_;
    Fn quantile_;
    std::vector<double> knots_;
};

inline ReserveDistribution uniform_reserve(double a, double b) {
    if (!(a >= 0.0 && b <= 1.0 && a < b)) throw DomainError("uniform_reserve: need 0 <= a < b <= 1");
    const double w = b - a;
    return ReserveDistribution(
        "uniform[" + std::to_string(a) + "," + std::to_string(b) + "]", a, b,
        [a, w](double v) { return (v - a) / w; }, [w](double) { return 1.0 / w; }, {},
        [a, w](double u) { return a + u * w; });
}

/// Piecewise-linear CDF through (knots[i], values[i]); values must start at 0,
/// end at 1 and be nondecreasing.
inline ReserveDistribution piecewise_linear_reserve(std::vector<double> knots,
                                                    std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size())
        throw DomainError("piecewise_linear_reserve: need matching knots and values");
    if (values.front() != 0.0 || values.back() != 1.0)
        throw DomainError("piecewise_linear_reserve: values must run from 0 to 1");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1])) throw DomainError("piecewise_linear_reserve: knots not increasing");
        if (values[i] < values[i - 1]) throw DomainError("piecewise_linear_reserve: values decreasing");
    }
    auto seg = [knots](double v) {
        const auto it = std::upper_bound(knots.begin(), knots.end(), v);
        std::size_t i = static_cast<std::size_t>(it - knots.begin());
        return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, knots.size() - 2);
    };
    auto cdf = [knots, values, seg](double v) {
        const std::size_t i = seg(v);
        const double t = (v - knots[i]) / (knots[i + 1] - knots[i]);
        return values[i] + t * (values[i + 1] - values[i]);
    };
    auto density = [knots, values, seg](double v) {
        const std::size_t i = seg(v);
        return (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    };
    std::vector<double> interior(knots.begin() + 1, knots.end() - 1);
    const double lo = knots.front();
    const double hi = knots.back();
    return ReserveDistribution("piecewise-linear", lo, hi, cdf, density, std::move(interior));
}

/// Phi(v) = ((v - a) / (b - a))^k on [a, b].
inline ReserveDistribution power_reserve(double a, double b, double k) {
    if (!(a >= 0.0 && b <= 1.0 && a < b && k >= 1.0))
        throw DomainError("power_reserve: need 0 <= a < b <= 1 and k >= 1");
    const double w = b - a;
    return ReserveDistribution(
        "power", a, b, [a, w, k](double v) { return std::pow((v - a) / w, k); },
        [a, w, k](double v) { return k * std::pow((v - a) / w, k - 1.0) / w; }, {},
        [a, w, k](double u) { return a + w * std::pow(u, 1.0 / k); });
}

} // namespace mmspa
