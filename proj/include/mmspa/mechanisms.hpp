#pragma once

// Second-price auctions with deterministic or random reserve, the DSIC
// checker, pointwise regret and Monte Carlo revenue simulation.

#include "mmspa/distributions.hpp"
#include "mmspa/errors.hpp"
#include "mmspa/numkit.hpp"
#include "mmspa/reserve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace mmspa {

struct AuctionOutcome {
    std::optional<int> winner;
    double payment = 0.0;
    std::optional<double> reserve_draw;
};

/// Expected allocation and payment rules on bid vectors, plus a sampler for
/// one realized outcome.
struct Mechanism {
    using Rule = std::function<std::vector<double>(std::span<const double>)>;
    std::string name;
    Rule allocate;
    Rule pay;
    std::function<AuctionOutcome(std::span<const double>, Rng&)> realize;
};

/// Highest bid, its lowest index, and the second-highest bid (0 when n = 1).
struct OrderStats {
    double first = 0.0;
    double second = 0.0;
    int argmax = -1;
};

inline OrderStats order_stats(std::span<const double> bids) {
    if (bids.empty()) throw DomainError("order_stats: empty bid vector");
    OrderStats s;
    s.first = bids[0];
    s.argmax = 0;
    for (std::size_t i = 1; i < bids.size(); ++i) {
        if (bids[i] > s.first) {
            s.second = s.first;
            s.first = bids[i];
            s.argmax = static_cast<int>(i);
        } else if (bids[i] > s.second) {
            s.second = bids[i];
        }
    }
    return s;
}

inline AuctionOutcome spa_outcome(std::span<const double> bids, double reserve) {
    const OrderStats s = order_stats(bids);
    AuctionOutcome out;
    out.reserve_draw = reserve;
    if (s.first >= reserve) {
        out.winner = s.argmax;
        out.payment = std::max(s.second, reserve);
    }
    return out;
}

/// Integration interval [a, b] split at the reserve distribution's breakpoints.
inline numkit::Interval reserve_interval(const ReserveDistribution& phi, double a, double b) {
    return numkit::Interval::with_splits(a, b, phi.breakpoints());
}

/// E_{p ~ Phi}[max(v2, p) 1(v1 >= p)] = v2 Phi(v2) + int_{v2}^{v1} p phi(p) dp.
inline double spa_random_expected_payment(std::span<const double> bids, const ReserveDistribution& phi,
                                          double abs_tol = 1e-13) {
    const OrderStats s = order_stats(bids);
    const double v1 = s.first;
    const double v2 = s.second;
    if (v1 <= phi.support_lo()) return 0.0;
    const double a = std::min(std::max(v2, phi.support_lo()), phi.support_hi());
    const double b = std::min(v1, phi.support_hi());
    double tail = 0.0;
    if (b > a)
        tail = numkit::integrate([&](double p) { return p * phi.density(p); }, reserve_interval(phi, a, b),
                                 abs_tol)
                   .value;
    return v2 * phi.cdf(v2) + tail;
}

/// v1 - v1 Phi(v1) + int_{v2}^{v1} Phi(p) dp.
inline double pointwise_regret(const ReserveDistribution& phi, std::span<const double> bids,
                               double abs_tol = 1e-13) {
    const OrderStats s = order_stats(bids);
    const double v1 = s.first;
    const double v2 = s.second;
    double area = 0.0;
    const double a = std::max(v2, phi.support_lo());
    if (v1 > a) {
        const double b = std::max(a, std::min(v1, phi.support_hi()));
        if (b > a)
            area = numkit::integrate([&](double p) { return phi.cdf(p); }, reserve_interval(phi, a, b), abs_tol)
                       .value;
        area += v1 - b; // Phi = 1 above the support
    }
    return std::max(0.0, v1 - v1 * phi.cdf(v1) + area);
}

// ---------------------------------------------------------------------------
// Mechanism factories

inline Mechanism spa_fixed(double r) {
    Mechanism m;
    m.name = "spa_fixed";
    m.allocate = [r](std::span<const double> b) {
        std::vector<double> x(b.size(), 0.0);
        const auto o = spa_outcome(b, r);
        if (o.winner) x[static_cast<std::size_t>(*o.winner)] = 1.0;
        return x;
    };
    m.pay = [r](std::span<const double> b) {
        std::vector<double> p(b.size(), 0.0);
        const auto o = spa_outcome(b, r);
        if (o.winner) p[static_cast<std::size_t>(*o.winner)] = o.payment;
        return p;
    };
    m.realize = [r](std::span<const double> b, Rng&) { return spa_outcome(b, r); };
    return m;
}

/// Fast reserve sampler: a precomputed quantile table gives a bracket and a
/// starting point, then safeguarded Newton steps polish the root of Phi(v) = u.
class ReserveSampler {
public:
    explicit ReserveSampler(std::shared_ptr<const ReserveDistribution> phi, int table_size = 4096)
        : phi_(std::move(phi)), table_(static_cast<std::size_t>(table_size) + 1) {
        for (int i = 0; i <= table_size; ++i)
            table_[static_cast<std::size_t>(i)] = phi_->quantile(static_cast<double>(i) / table_size);
    }

    double operator()(double u) const {
        const double k = static_cast<double>(table_.size() - 1);
        const double pos = std::clamp(u, 0.0, 1.0) * k;
        const std::size_t i = std::min(static_cast<std::size_t>(pos), table_.size() - 2);
        double lo = table_[i];
        double hi = table_[i + 1];
        if (!(hi > lo)) return lo;
        double x = lo + (pos - static_cast<double>(i)) * (hi - lo);
        for (int it = 0; it < 60; ++it) {
            const double f = phi_->cdf(x) - u;
            if (f == 0.0) return x;
            if (f > 0.0)
                hi = x;
            else
                lo = x;
            const double d = phi_->density(x);
            double next = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - x) <= 1e-15 || hi - lo <= 1e-15) return next;
            x = next;
        }
        return x;
    }

    const ReserveDistribution& distribution() const noexcept { return *phi_; }

private:
    std::shared_ptr<const ReserveDistribution> phi_;
    std::vector<double> table_;
};

/// SPA whose reserve is drawn from Phi. Expected rules use quadrature; the
/// realized outcome draws one reserve.
inline Mechanism spa_random(const ReserveDistribution& phi) {
    auto dist = std::make_shared<const ReserveDistribution>(phi);
    auto sampler = std::make_shared<const ReserveSampler>(dist);
    Mechanism m;
    m.name = "spa_random(" + phi.name() + ")";
    m.allocate = [dist](std::span<const double> b) {
        std::vector<double> x(b.size(), 0.0);
        const OrderStats s = order_stats(b);
        x[static_cast<std::size_t>(s.argmax)] = dist->cdf(s.first);
        return x;
    };
    m.pay = [dist](std::span<const double> b) {
        std::vector<double> p(b.size(), 0.0);
        const OrderStats s = order_stats(b);
        p[static_cast<std::size_t>(s.argmax)] = spa_random_expected_payment(b, *dist);
        return p;
    };
    m.realize = [sampler](std::span<const double> b, Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        return spa_outcome(b, (*sampler)(unif(rng)));
    };
    return m;
}

/// SPA averaged over a fixed list of reserve draws (common random numbers).
/// Expected allocation and payment cost O(log M) through sorted draws and prefix sums.
inline Mechanism spa_crn(std::vector<double> draws) {
    if (draws.empty()) throw DomainError("spa_crn: need at least one reserve draw");
    std::sort(draws.begin(), draws.end());
    std::vector<double> prefix(draws.size() + 1, 0.0);
    for (std::size_t i = 0; i < draws.size(); ++i) prefix[i + 1] = prefix[i] + draws[i];
    auto d = std::make_shared<const std::vector<double>>(std::move(draws));
    auto ps = std::make_shared<const std::vector<double>>(std::move(prefix));
    auto count_le = [d](double x) {
        return static_cast<std::size_t>(std::upper_bound(d->begin(), d->end(), x) - d->begin());
    };
    Mechanism m;
    m.name = "spa_crn";
    m.allocate = [d, count_le](std::span<const double> b) {
        std::vector<double> x(b.size(), 0.0);
        const OrderStats s = order_stats(b);
        x[static_cast<std::size_t>(s.argmax)] = static_cast<double>(count_le(s.first)) / d->size();
        return x;
    };
    m.pay = [d, ps, count_le](std::span<const double> b) {
        std::vector<double> p(b.size(), 0.0);
        const OrderStats s = order_stats(b);
        const std::size_t k1 = count_le(s.first);
        const std::size_t k2 = std::min(count_le(s.second), k1);
        const double total = static_cast<double>(k2) * s.second + ((*ps)[k1] - (*ps)[k2]);
        p[static_cast<std::size_t>(s.argmax)] = total / static_cast<double>(d->size());
        return p;
    };
    m.realize = [d](std::span<const double> b, Rng& rng) {
        std::uniform_int_distribution<std::size_t> pick(0, d->size() - 1);
        return spa_outcome(b, (*d)[pick(rng)]);
    };
    return m;
}

/// Reserve draws for spa_crn: `count` stratified quantiles of Phi, one per
/// equal-probability cell, jittered with a seeded generator.
inline std::vector<double> crn_reserve_draws(const ReserveDistribution& phi, std::size_t count,
                                             std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ReserveSampler sampler(std::make_shared<const ReserveDistribution>(phi));
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = sampler((static_cast<double>(i) + unif(rng)) / static_cast<double>(count));
    return out;
}

/// First-price auction, no reserve: the highest bidder pays their own bid.
inline Mechanism first_price() {
    Mechanism m;
    m.name = "first_price";
    m.allocate = [](std::span<const double> b) {
        std::vector<double> x(b.size(), 0.0);
        x[static_cast<std::size_t>(order_stats(b).argmax)] = 1.0;
        return x;
    };
    m.pay = [](std::span<const double> b) {
        std::vector<double> p(b.size(), 0.0);
        const OrderStats s = order_stats(b);
        p[static_cast<std::size_t>(s.argmax)] = s.first;
        return p;
    };
    m.realize = [](std::span<const double> b, Rng&) {
        const OrderStats s = order_stats(b);
        return AuctionOutcome{s.argmax, s.first, std::nullopt};
    };
    return m;
}

// ---------------------------------------------------------------------------
// DSIC

struct DsicViolation {
    int buyer = 0;
    double value = 0.0;
    double misreport = 0.0;
    std::vector<double> opponents;
    double truthful_utility = 0.0;
    double deviation_utility = 0.0;
};

/// Exhaustive truthfulness check: every buyer, true value, misreport and
/// opponent profile drawn from `grid`.
inline std::vector<DsicViolation> check_dsic(const Mechanism& mech, int n, const std::vector<double>& grid,
                                             double tol = 1e-12) {
    if (n < 1) throw DomainError("check_dsic: n must be >= 1");
    std::vector<DsicViolation> out;
    const std::size_t g = grid.size();
    if (g == 0) return out;
    std::size_t profiles = 1;
    for (int i = 1; i < n; ++i) profiles *= g;
    std::vector<double> bids(static_cast<std::size_t>(n));
    std::vector<double> opp(static_cast<std::size_t>(n - 1));
    for (int buyer = 0; buyer < n; ++buyer) {
        const auto bi = static_cast<std::size_t>(buyer);
        for (std::size_t prof = 0; prof < profiles; ++prof) {
            std::size_t rest = prof;
            for (std::size_t k = 0; k < opp.size(); ++k) {
                opp[k] = grid[rest % g];
                rest /= g;
            }
            for (std::size_t k = 0, j = 0; k < bids.size(); ++k)
                if (k != bi) bids[k] = opp[j++];
            for (double value : grid) {
                bids[bi] = value;
                const double truthful = value * mech.allocate(bids)[bi] - mech.pay(bids)[bi];
                for (double report : grid) {
                    if (report == value) continue;
                    bids[bi] = report;
                    const double dev = value * mech.allocate(bids)[bi] - mech.pay(bids)[bi];
                    if (truthful < dev - tol) out.push_back({buyer, value, report, opp, truthful, dev});
                }
                bids[bi] = value;
            }
        }
    }
    return out;
}

inline std::vector<double> uniform_grid(int points, double lo = 0.0, double hi = 1.0) {
    if (points < 2) throw DomainError("uniform_grid: need at least two points");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    return g;
}

// ---------------------------------------------------------------------------
// Simulation

/// Welford running mean/variance with Chan's parallel merge.
class RunningStats {
public:
    void add(double x) noexcept {
        ++count_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(count_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningStats& o) noexcept {
        if (o.count_ == 0) return;
        if (count_ == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(count_ + o.count_);
        const double d = o.mean_ - mean_;
        mean_ += d * static_cast<double>(o.count_) / total;
        m2_ += o.m2_ + d * d * static_cast<double>(count_) * static_cast<double>(o.count_) / total;
        count_ += o.count_;
    }

    std::size_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
    double stderr_mean() const noexcept {
        return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
    }

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

struct SimulationResult {
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    Estimate revenue;
    Estimate benchmark; // E[max v]
    Estimate regret;
};

inline constexpr std::size_t kSimulationChunks = 64;

/// Monte Carlo revenue/regret of `mech` under `joint`. The draw count is split
/// into a fixed number of chunks, each with its own generator seeded from
/// (seed, chunk), and merged in chunk order, so the result depends only on
/// the seed and not on the worker count.
inline SimulationResult simulate(const Mechanism& mech, const JointSpec& joint, std::size_t count,
                                 std::uint64_t seed, unsigned workers = 0) {
    if (count < 1000) throw DomainError("simulate: count must be >= 1000");
    struct Chunk {
        RunningStats revenue, benchmark, regret;
    };
    std::vector<Chunk> chunks(kSimulationChunks);
    auto run_chunk = [&](std::size_t c) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c)};
        Rng rng(seq);
        const std::size_t begin = count * c / kSimulationChunks;
        const std::size_t end = count * (c + 1) / kSimulationChunks;
        std::vector<double> v(static_cast<std::size_t>(joint.n()));
        Chunk& out = chunks[c];
        for (std::size_t i = begin; i < end; ++i) {
            draw_valuations(joint, rng, v);
            const AuctionOutcome o = mech.realize(v, rng);
            const double best = *std::max_element(v.begin(), v.end());
            out.revenue.add(o.payment);
            out.benchmark.add(best);
            out.regret.add(best - o.payment);
        }
    };
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, kSimulationChunks);
    if (workers == 1) {
        for (std::size_t c = 0; c < kSimulationChunks; ++c) run_chunk(c);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < kSimulationChunks; c += workers) run_chunk(c);
            });
    }
    Chunk total;
    for (const Chunk& c : chunks) {
        total.revenue.merge(c.revenue);
        total.benchmark.merge(c.benchmark);
        total.regret.merge(c.regret);
    }
    SimulationResult r;
    r.samples = count;
    r.seed = seed;
    r.revenue = {total.revenue.mean(), total.revenue.stderr_mean()};
    r.benchmark = {total.benchmark.mean(), total.benchmark.stderr_mean()};
    r.regret = {total.regret.mean(), total.regret.stderr_mean()};
    return r;
}

inline Estimate simulate_revenue(const Mechanism& mech, const JointSpec& joint, std::size_t count,
                                 std::uint64_t seed) {
    return simulate(mech, joint, count, seed).revenue;
}

} // namespace mmspa
