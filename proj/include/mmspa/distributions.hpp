#pragma once

// Joint valuation distributions over n buyers, their order-statistic CDFs,
// and the affiliation / mixture machinery used for dependent valuations.

#include "mmspa/errors.hpp"
#include "mmspa/marginal.hpp"
#include "mmspa/numkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mmspa {

using Rng = std::mt19937_64;

struct IidJoint {
    Marginal marginal;
};

/// Latent marginal G_j drawn with probability weights[j], then all buyers iid from G_j.
struct MixtureJoint {
    std::vector<double> weights;
    std::vector<Marginal> components;
};

/// One buyer picked uniformly at random draws from `marginal`; everyone else is 0.
struct SpikeMixture {
    Marginal marginal;
};

/// Exchangeable pmf on support^n stored as a full row-major tensor
/// (first coordinate most significant). Limited to n <= 4, |support| <= 8.
class DiscreteExchangeable {
public:
    static constexpr int kMaxBuyers = 4;
    static constexpr int kMaxSupport = 8;

    DiscreteExchangeable(int n, std::vector<double> support, std::vector<double> pmf)
        : n_(n), support_(std::move(support)), pmf_(std::move(pmf)) {
        if (n_ < 1 || n_ > kMaxBuyers) throw DomainError("DiscreteExchangeable: n must be in [1,4]");
        const int m = static_cast<int>(support_.size());
        if (m < 1 || m > kMaxSupport) throw DomainError("DiscreteExchangeable: support size must be in [1,8]");
        for (int i = 1; i < m; ++i)
            if (!(support_[i] > support_[i - 1]))
                throw DomainError("DiscreteExchangeable: support must be strictly increasing");
        std::size_t cells = 1;
        for (int i = 0; i < n_; ++i) cells *= static_cast<std::size_t>(m);
        if (pmf_.size() != cells) throw DomainError("DiscreteExchangeable: pmf has wrong size");
        numkit::CompensatedSum total;
        for (double p : pmf_) {
            if (!(p >= 0.0)) throw DomainError("DiscreteExchangeable: negative pmf entry");
            total += p;
        }
        if (std::abs(total.value() - 1.0) > kMassTol)
            throw DomainError("DiscreteExchangeable: pmf does not sum to 1");
        std::vector<int> idx(static_cast<std::size_t>(n_));
        for (std::size_t c = 0; c < cells; ++c) {
            decode(c, idx);
            std::vector<int> sorted = idx;
            std::sort(sorted.begin(), sorted.end());
            do {
                if (std::abs(pmf_[encode(sorted)] - pmf_[c]) > 1e-15)
                    throw DomainError("DiscreteExchangeable: pmf is not permutation invariant");
            } while (std::next_permutation(sorted.begin(), sorted.end()));
        }
    }

    int n() const noexcept { return n_; }
    int support_size() const noexcept { return static_cast<int>(support_.size()); }
    const std::vector<double>& support() const noexcept { return support_; }
    const std::vector<double>& pmf() const noexcept { return pmf_; }
    std::size_t cells() const noexcept { return pmf_.size(); }

    double at(std::span<const int> idx) const { return pmf_[encode(idx)]; }

    std::size_t encode(std::span<const int> idx) const {
        std::size_t c = 0;
        for (int i : idx) c = c * support_.size() + static_cast<std::size_t>(i);
        return c;
    }

    void decode(std::size_t cell, std::span<int> idx) const {
        const std::size_t m = support_.size();
        for (int i = n_ - 1; i >= 0; --i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(cell % m);
            cell /= m;
        }
    }

    /// Exact textual form of support/pmf entries (e.g. "5/16"), kept for lossless JSON output.
    std::vector<std::string> support_text;
    std::vector<std::string> pmf_text;

private:
    int n_;
    std::vector<double> support_;
    std::vector<double> pmf_;
};

using JointVariant = std::variant<IidJoint, MixtureJoint, DiscreteExchangeable, SpikeMixture>;

/// Joint distribution of n valuations.
class JointSpec {
public:
    static JointSpec iid(int n, Marginal m) { return JointSpec(n, IidJoint{std::move(m)}); }

    static JointSpec mixture(int n, std::vector<double> weights, std::vector<Marginal> components) {
        if (weights.size() != components.size() || weights.empty())
            throw DomainError("JointSpec::mixture: weights/components mismatch");
        numkit::CompensatedSum s;
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("JointSpec::mixture: negative weight");
            s += w;
        }
        if (std::abs(s.value() - 1.0) > kMassTol)
            throw DomainError("JointSpec::mixture: weights do not sum to 1");
        return JointSpec(n, MixtureJoint{std::move(weights), std::move(components)});
    }

    static JointSpec discrete(DiscreteExchangeable d) {
        const int n = d.n();
        return JointSpec(n, std::move(d));
    }

    static JointSpec spike(int n, Marginal m) { return JointSpec(n, SpikeMixture{std::move(m)}); }

    int n() const noexcept { return n_; }
    const JointVariant& variant() const noexcept { return v_; }

    template <class T>
    const T* as() const noexcept {
        return std::get_if<T>(&v_);
    }

    /// Points where the order-statistic CDFs may jump or kink.
    std::vector<double> knots() const {
        std::vector<double> k;
        std::visit(
            [&](const auto& j) {
                using J = std::decay_t<decltype(j)>;
                if constexpr (std::is_same_v<J, IidJoint> || std::is_same_v<J, SpikeMixture>) {
                    k = j.marginal.knots();
                } else if constexpr (std::is_same_v<J, MixtureJoint>) {
                    for (const Marginal& m : j.components) {
                        auto mk = m.knots();
                        k.insert(k.end(), mk.begin(), mk.end());
                    }
                } else {
                    k = j.support();
                }
            },
            v_);
        k.push_back(0.0);
        std::sort(k.begin(), k.end());
        k.erase(std::unique(k.begin(), k.end()), k.end());
        return k;
    }

private:
    JointSpec(int n, JointVariant v) : n_(n), v_(std::move(v)) {
        if (n_ < 1) throw DomainError("JointSpec: n must be >= 1");
    }

    int n_;
    JointVariant v_;
};

// ---------------------------------------------------------------------------
// Order statistics

/// Pr(max(v_1, ..., v_k) <= p) over any k of the n buyers; with `left` set,
/// the strict version Pr(max < p).
inline double first_order_stat_cdf(const JointSpec& joint, int k, double p, bool left = false) {
    if (k < 1 || k > joint.n()) throw DomainError("first_order_stat_cdf: k out of range");
    return std::visit(
        [&](const auto& j) -> double {
            using J = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<J, IidJoint>) {
                return std::pow(left ? j.marginal.cdf_left(p) : j.marginal.cdf(p), k);
            } else if constexpr (std::is_same_v<J, MixtureJoint>) {
                numkit::CompensatedSum s;
                for (std::size_t i = 0; i < j.weights.size(); ++i)
                    s += j.weights[i] *
                         std::pow(left ? j.components[i].cdf_left(p) : j.components[i].cdf(p), k);
                return s.value();
            } else if constexpr (std::is_same_v<J, SpikeMixture>) {
                const int n = joint.n();
                const double rest = (left ? p > 0.0 : p >= 0.0) ? 1.0 : 0.0;
                const double f = left ? j.marginal.cdf_left(p) : j.marginal.cdf(p);
                return (static_cast<double>(n - k) * rest + k * f) / n;
            } else {
                // Marginalize over the first k coordinates.
                numkit::CompensatedSum s;
                std::vector<int> idx(static_cast<std::size_t>(j.n()));
                for (std::size_t c = 0; c < j.cells(); ++c) {
                    j.decode(c, idx);
                    bool ok = true;
                    for (int i = 0; i < k && ok; ++i) {
                        const double x =
                            j.support()[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
                        ok = left ? x < p : x <= p;
                    }
                    if (ok) s += j.pmf()[c];
                }
                return s.value();
            }
        },
        joint.variant());
}

/// Pr(v^(2) <= p) via F^(2)_n = n F^(1)_{n-1} - (n-1) F^(1)_n.
inline double second_order_stat_cdf(const JointSpec& joint, double p) {
    const int n = joint.n();
    if (n < 2) throw DomainError("second_order_stat_cdf: needs n >= 2");
    const double value =
        n * first_order_stat_cdf(joint, n - 1, p) - (n - 1) * first_order_stat_cdf(joint, n, p);
    return std::clamp(value, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Affiliation and mixture representability (finite support)

struct AffiliationWitness {
    std::vector<int> a;
    std::vector<int> b;
    std::vector<int> meet;
    std::vector<int> join;
    double lhs = 0.0; // f(a) f(b)
    double rhs = 0.0; // f(a meet b) f(a join b)
};

struct AffiliationResult {
    bool ok = true;
    std::optional<AffiliationWitness> witness;
};

/// Exhaustive check of f(a) f(b) <= f(a ^ b) f(a v b) over all cell pairs.
/// The relative slack of 1e-12 absorbs rounding in products that are equal in
/// exact arithmetic (e.g. product pmfs).
inline AffiliationResult check_affiliation(const DiscreteExchangeable& d) {
    const std::size_t cells = d.cells();
    const std::size_t n = static_cast<std::size_t>(d.n());
    std::vector<int> a(n), b(n), lo(n), hi(n);
    for (std::size_t i = 0; i < cells; ++i) {
        d.decode(i, a);
        const double fa = d.pmf()[i];
        if (fa == 0.0) continue;
        for (std::size_t j = i + 1; j < cells; ++j) {
            const double fb = d.pmf()[j];
            if (fb == 0.0) continue;
            d.decode(j, b);
            for (std::size_t t = 0; t < n; ++t) {
                lo[t] = std::min(a[t], b[t]);
                hi[t] = std::max(a[t], b[t]);
            }
            const double lhs = fa * fb;
            const double rhs = d.at(lo) * d.at(hi);
            if (lhs > rhs * (1.0 + 1e-12)) {
                return {false, AffiliationWitness{a, b, lo, hi, lhs, rhs}};
            }
        }
    }
    return {true, std::nullopt};
}

/// Jensen necessary condition for a 2-buyer, 3-value exchangeable pmf to be a
/// mixture of iid: p33 >= (p13 + p23 + p33)^2.
inline bool check_mixture_necessary(const DiscreteExchangeable& d) {
    if (d.n() != 2 || d.support_size() != 3)
        throw DomainError("check_mixture_necessary: needs n = 2 and three support values");
    const double p13 = d.at(std::vector<int>{0, 2});
    const double p23 = d.at(std::vector<int>{1, 2});
    const double p33 = d.at(std::vector<int>{2, 2});
    const double s = p13 + p23 + p33;
    return p33 + 1e-15 >= s * s;
}

/// theta p p^T + (1 - theta) q q^T as a 2-buyer discrete joint.
inline DiscreteExchangeable two_buyer_mixture_pmf(std::vector<double> support, double theta,
                                                  const std::vector<double>& p,
                                                  const std::vector<double>& q) {
    const std::size_t m = support.size();
    if (p.size() != m || q.size() != m) throw DomainError("two_buyer_mixture_pmf: size mismatch");
    std::vector<double> pmf(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            pmf[i * m + j] = theta * p[i] * p[j] + (1.0 - theta) * q[i] * q[j];
    return DiscreteExchangeable(2, std::move(support), std::move(pmf));
}

/// 2-buyer, 3-value symmetric pmf from its six free entries (p11, p12, p13, p22, p23, p33).
inline DiscreteExchangeable symmetric_3x3_pmf(std::vector<double> support,
                                              const std::array<double, 6>& e) {
    const double p11 = e[0], p12 = e[1], p13 = e[2], p22 = e[3], p23 = e[4], p33 = e[5];
    std::vector<double> pmf{p11, p12, p13, p12, p22, p23, p13, p23, p33};
    return DiscreteExchangeable(2, std::move(support), std::move(pmf));
}

// ---------------------------------------------------------------------------
// Binary exchangeable indicators Y_k = 1(v_k > p)

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

/// u[k] is the probability of any fixed 0/1 pattern with k ones.
struct BinaryExchangeable {
    int n = 0;
    std::vector<double> u;

    double total_mass() const {
        numkit::CompensatedSum s;
        for (int k = 0; k <= n; ++k) s += binomial(n, k) * u[static_cast<std::size_t>(k)];
        return s.value();
    }

    /// Pr(Y_1 = ... = Y_k = 0), i.e. F^(1)_k(p).
    double first_order_cdf(int k) const {
        numkit::CompensatedSum s;
        for (int j = 0; j <= n - k; ++j) s += binomial(n - k, j) * u[static_cast<std::size_t>(j)];
        return s.value();
    }

    /// u_k u_1 <= u_{k+1} u_0 for 0 <= k <= n-1 (affiliation of the indicators).
    bool satisfies_affiliation_chain() const {
        for (int k = 0; k + 1 <= n; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            if (u[kk] * u[1] > u[kk + 1] * u[0] * (1.0 + 1e-12)) return false;
        }
        return true;
    }
};

/// Rejection-samples an affiliated binary exchangeable law: log-normal positive
/// vectors are drawn until the chain inequalities hold, then normalized.
inline BinaryExchangeable sample_binary_exchangeable_affiliated(int n, Rng& rng,
                                                                int max_attempts = 100'000) {
    if (n < 2) throw DomainError("sample_binary_exchangeable_affiliated: n must be >= 2");
    std::normal_distribution<double> normal(0.0, 1.5);
    BinaryExchangeable b;
    b.n = n;
    b.u.resize(static_cast<std::size_t>(n + 1));
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        for (double& x : b.u) x = std::exp(normal(rng));
        if (!b.satisfies_affiliation_chain()) continue;
        const double z = b.total_mass();
        for (double& x : b.u) x /= z;
        return b;
    }
    throw SamplingBudgetExhausted("sample_binary_exchangeable_affiliated: no sample accepted");
}

inline BinaryExchangeable sample_binary_exchangeable_affiliated(int n, std::uint64_t seed) {
    Rng rng(seed);
    return sample_binary_exchangeable_affiliated(n, rng);
}

/// Random exchangeable affiliated pmf on `support`^n: f(v) proportional to
/// exp(sum_i a(v_i) + c sum_{i<j} g(v_i) g(v_j)) with g increasing and c >= 0,
/// which is log-supermodular and therefore affiliated.
inline DiscreteExchangeable random_affiliated_discrete(int n, std::vector<double> support, Rng& rng) {
    const std::size_t m = support.size();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> a(m), g(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        a[i] = 1.5 * normal(rng);
        acc += unif(rng);
        g[i] = acc;
    }
    const double c = 1.5 * unif(rng) / (acc * acc);
    std::size_t cells = 1;
    for (int i = 0; i < n; ++i) cells *= m;
    std::vector<double> pmf(cells);
    std::vector<int> idx(static_cast<std::size_t>(n));
    numkit::CompensatedSum total;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rest = cell;
        for (int i = n - 1; i >= 0; --i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rest % m);
            rest /= m;
        }
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            e += a[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            for (int j = i + 1; j < n; ++j)
                e += c * g[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] *
                     g[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        }
        pmf[cell] = std::exp(e);
        total += pmf[cell];
    }
    // Symmetrize exactly: every permutation of a cell gets the value of its sorted representative.
    const double z = total.value();
    std::vector<double> sym(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rest = cell;
        for (int i = n - 1; i >= 0; --i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rest % m);
            rest /= m;
        }
        std::sort(idx.begin(), idx.end());
        std::size_t rep = 0;
        for (int i : idx) rep = rep * m + static_cast<std::size_t>(i);
        sym[cell] = pmf[rep] / z;
    }
    return DiscreteExchangeable(n, std::move(support), std::move(sym));
}

// ---------------------------------------------------------------------------
// Sampling

/// Writes one valuation vector drawn from `joint` into `out` (size n).
inline void draw_valuations(const JointSpec& joint, Rng& rng, std::span<double> out) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = joint.n();
    std::visit(
        [&](const auto& j) {
            using J = std::decay_t<decltype(j)>;
            if constexpr (std::is_same_v<J, IidJoint>) {
                for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = j.marginal.quantile(unif(rng));
            } else if constexpr (std::is_same_v<J, MixtureJoint>) {
                const double u = unif(rng);
                std::size_t comp = 0;
                double acc = 0.0;
                for (; comp + 1 < j.weights.size(); ++comp) {
                    acc += j.weights[comp];
                    if (u < acc) break;
                }
                for (int i = 0; i < n; ++i)
                    out[static_cast<std::size_t>(i)] = j.components[comp].quantile(unif(rng));
            } else if constexpr (std::is_same_v<J, SpikeMixture>) {
                std::uniform_int_distribution<int> pick(0, n - 1);
                const int k = pick(rng);
                for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = 0.0;
                out[static_cast<std::size_t>(k)] = j.marginal.quantile(unif(rng));
            } else {
                const double u = unif(rng);
                double acc = 0.0;
                std::size_t cell = 0;
                for (; cell + 1 < j.cells(); ++cell) {
                    acc += j.pmf()[cell];
                    if (u < acc) break;
                }
                std::vector<int> idx(static_cast<std::size_t>(n));
                j.decode(cell, idx);
                for (int i = 0; i < n; ++i)
                    out[static_cast<std::size_t>(i)] =
                        j.support()[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            }
        },
        joint.variant());
}

/// `count` iid valuation vectors; reproducible for a given seed.
inline std::vector<std::vector<double>> sample_joint(const JointSpec& joint, std::size_t count,
                                                     std::uint64_t seed) {
    if (count < 1) throw DomainError("sample_joint: count must be >= 1");
    Rng rng(seed);
    std::vector<std::vector<double>> out(count, std::vector<double>(static_cast<std::size_t>(joint.n())));
    for (auto& v : out) draw_valuations(joint, rng, v);
    return out;
}

} // namespace mmspa
