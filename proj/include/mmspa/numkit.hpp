#pragma once

// Scalar numerics shared by the rest of the library: bracketed root finding,
// Gauss-Kronrod panel quadrature with declared split points, compensated
// summation and the exponential integral E1.

#include "mmspa/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mmspa::numkit {

inline constexpr double kRootTol = 1e-12;
inline constexpr double kQuadTol = 1e-10;

/// Closed interval [lo, hi] with interior kink/atom locations. Quadrature is
/// performed independently on every segment between consecutive split points.
class Interval {
public:
    Interval(double lo, double hi, std::vector<double> split_points = {})
        : lo_(lo), hi_(hi), splits_(std::move(split_points)) {
        if (!(lo <= hi)) throw DomainError("Interval: lo > hi");
        for (std::size_t i = 0; i < splits_.size(); ++i) {
            if (splits_[i] < lo_ || splits_[i] > hi_)
                throw DomainError("Interval: split point outside [lo, hi]");
            if (i > 0 && !(splits_[i - 1] < splits_[i]))
                throw DomainError("Interval: split points must be strictly increasing");
        }
    }

    /// Builds an interval from an unordered candidate list; points outside
    /// (lo, hi) and duplicates are dropped.
    static Interval with_splits(double lo, double hi, std::vector<double> candidates) {
        std::vector<double> kept;
        kept.reserve(candidates.size());
        for (double x : candidates)
            if (x > lo && x < hi) kept.push_back(x);
        std::sort(kept.begin(), kept.end());
        kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
        return Interval(lo, hi, std::move(kept));
    }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double length() const noexcept { return hi_ - lo_; }
    const std::vector<double>& split_points() const noexcept { return splits_; }

    /// Segment boundaries lo, s_1, ..., s_k, hi (zero-length segments removed).
    std::vector<double> breakpoints() const {
        std::vector<double> b;
        b.reserve(splits_.size() + 2);
        b.push_back(lo_);
        for (double s : splits_)
            if (s > b.back()) b.push_back(s);
        if (hi_ > b.back()) b.push_back(hi_);
        return b;
    }

private:
    double lo_;
    double hi_;
    std::vector<double> splits_;
};

/// Neumaier compensated summation.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Root of a continuous monotone function on a sign-changing bracket.
/// Bisection and secant steps alternate; a secant step is only taken when it
/// lands strictly inside the current bracket, so the width at least halves
/// every two iterations.
template <class F>
double solve_monotone_root(F&& f, double lo, double hi, double tol = kRootTol) {
    if (!(tol > 0.0)) throw DomainError("solve_monotone_root: tol must be positive");
    if (lo > hi) std::swap(lo, hi);
    double flo = f(lo);
    double fhi = f(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi))
        throw NonFinite("solve_monotone_root: non-finite value at bracket end");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NoSignChange("solve_monotone_root: f(lo) and f(hi) have the same sign");

    for (int iter = 0; iter < 400; ++iter) {
        if (hi - lo <= tol) break;
        double x = 0.5 * (lo + hi);
        if (iter % 2 == 1) {
            const double s = hi - fhi * (hi - lo) / (fhi - flo);
            if (s > lo && s < hi) x = s;
        }
        if (x <= lo || x >= hi) break; // bracket exhausted at machine precision
        const double fx = f(x);
        if (!std::isfinite(fx)) throw NonFinite("solve_monotone_root: non-finite evaluation");
        if (std::abs(fx) <= tol || fx == 0.0) return x;
        if ((fx > 0.0) == (flo > 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

struct QuadResult {
    double value = 0.0;
    double err_est = 0.0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double err;
    bool operator<(const Panel& o) const noexcept { return err < o.err; }
};

template <class F>
Panel gauss_kronrod_panel(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    if (!std::isfinite(fc)) throw NonFinite("integrate: non-finite integrand value");
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = h * kKronrodNodes[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        if (!std::isfinite(f1) || !std::isfinite(f2))
            throw NonFinite("integrate: non-finite integrand value");
        kronrod += kKronrodWeights[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
    }
    return Panel{a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

template <class F>
QuadResult integrate_segment(F& f, double a, double b, double tol, int max_panels) {
    std::priority_queue<Panel> heap;
    Panel first = gauss_kronrod_panel(f, a, b);
    double total_err = first.err;
    heap.push(first);
    int panels = 1;
    // Resolution floor: panels narrower than this cannot be refined further.
    const double min_width = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(b));
    while (total_err > tol) {
        if (panels >= max_panels) {
            throw ToleranceNotMet("integrate: refinement budget exhausted on [" +
                                  std::to_string(a) + ", " + std::to_string(b) + "], error " +
                                  std::to_string(total_err));
        }
        Panel worst = heap.top();
        if (worst.b - worst.a < min_width) break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = gauss_kronrod_panel(f, worst.a, mid);
        Panel right = gauss_kronrod_panel(f, mid, worst.b);
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    CompensatedSum value;
    CompensatedSum err;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().err;
        heap.pop();
    }
    return {value.value(), err.value()};
}

} // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) quadrature applied independently on each
/// segment of `iv`. The absolute tolerance is shared between segments in
/// proportion to their length. Atoms must be handled by the caller.
template <class F>
QuadResult integrate(F&& f, const Interval& iv, double abs_tol = kQuadTol, int max_panels = 4000) {
    if (!(abs_tol > 0.0)) throw DomainError("integrate: abs_tol must be positive");
    QuadResult out;
    if (iv.length() == 0.0) return out;
    const std::vector<double> bp = iv.breakpoints();
    CompensatedSum value;
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double a = bp[i];
        const double b = bp[i + 1];
        const double seg_tol = abs_tol * (b - a) / iv.length();
        QuadResult r = detail::integrate_segment(f, a, b, seg_tol, max_panels);
        value += r.value;
        err += r.err_est;
    }
    out.value = value.value();
    out.err_est = err;
    return out;
}

/// Convenience overload for a plain [lo, hi] with split candidates.
template <class F>
QuadResult integrate(F&& f, double lo, double hi, std::vector<double> splits = {},
                     double abs_tol = kQuadTol) {
    return integrate(std::forward<F>(f), Interval::with_splits(lo, hi, std::move(splits)), abs_tol);
}

/// e^x * E1(x) for x > 0; finite for every positive x.
inline double exp_scaled_e1(double x) {
    if (!(x > 0.0)) throw DomainError("exp_scaled_e1: x must be positive");
    if (x <= 1.0) {
        // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        CompensatedSum s;
        s += -std::numbers::egamma;
        s += -std::log(x);
        double term = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= -x / k;
            const double t = -term / k;
            s += t;
            if (std::abs(t) < 1e-18) break;
        }
        return std::exp(x) * s.value();
    }
    // Continued fraction, modified Lentz.
    constexpr double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

/// E1(x) = integral_1^inf e^{-x t} / t dt for x > 0.
inline double exp_integral_e1(double x) {
    if (!(x > 0.0)) throw DomainError("exp_integral_e1: x must be positive");
    return std::exp(-x) * exp_scaled_e1(x);
}

/// Golden-section search for the maximiser of a unimodal function on [lo, hi].
template <class F>
double golden_section_max(F&& f, double lo, double hi, double tol = 1e-10) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double mid = 0.5 * (a + b);
    // Endpoints are candidates too when the maximum sits on the boundary.
    double best = mid;
    double fbest = f(mid);
    for (double x : {lo, hi}) {
        const double fx = f(x);
        if (fx > fbest) {
            fbest = fx;
            best = x;
        }
    }
    return best;
}

} // namespace mmspa::numkit
