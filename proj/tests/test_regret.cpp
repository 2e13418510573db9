#include "mmspa/regret.hpp"
#include "support/oracles.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

using namespace mmspa;

namespace {

const double inv_e = 1.0 / std::numbers::e;

/// E[max v] - E[max(v2, p) 1(v1 >= p)] for iid continuous F, via
/// E[max(v2,p) 1(v1>=p)] = p (1 - F(p)^n) + int_p^1 (1 - G2).
double oracle_iid_regret(const ReserveDistribution& phi, const std::function<double(double)>& F, int n) {
    auto G1 = [&](double t) { return std::pow(F(t), n); };
    auto G2 = [&](double t) {
        const double f = F(t);
        return n == 1 ? 1.0 : n * std::pow(f, n - 1) - (n - 1) * std::pow(f, n);
    };
    const double benchmark = oracle::simpson([&](double t) { return 1.0 - G1(t); }, 0.0, 1.0);
    auto revenue_at = [&](double p) {
        const double tail = n == 1 ? 0.0 : oracle::simpson([&](double t) { return 1.0 - G2(t); }, p, 1.0, 400);
        return p * (1.0 - G1(p)) + tail;
    };
    const double revenue = oracle::simpson([&](double p) { return phi.density(p) * revenue_at(p); },
                                           phi.support_lo() + 1e-12, phi.support_hi() - 1e-12, 2000);
    return benchmark - revenue;
}

} // namespace

TEST_CASE("minimax values from the regret engine") {
    const std::vector<std::pair<int, double>> table{{1, 0.3679}, {2, 0.3238}, {3, 0.3093},
                                                    {4, 0.3021}, {5, 0.2979}, {10, 0.2896}};
    for (auto [n, want] : table) {
        const ReserveDistribution phi = make_phi_star(n);
        const Marginal f = worst_case_marginal(n);
        CHECK(regret_bigF(phi, JointSpec::iid(n, f)).value == Approx(want).margin(5e-5));
        CHECK(regret_iid(phi, f, n).value == Approx(want).margin(5e-5));
        CHECK(regret_linear_phi(phi, f, n).value == Approx(want).margin(5e-5));
        CHECK(regret_iid(phi, f, n).value == Approx(minimax_regret(n)).margin(1e-10));
    }
    CHECK(regret_bigF(make_phi_star(1), JointSpec::iid(1, isorevenue_marginal(inv_e))).value ==
          Approx(inv_e).margin(1e-12));
}

TEST_CASE("regret engine agrees with a double-quadrature oracle") {
    const std::vector<std::function<double(double)>> cdfs{
        [](double v) { return v; },
        [](double v) { return v * v; },
        [](double v) { return std::sqrt(v); },
    };
    const std::vector<Marginal> marginals{uniform_marginal(), power_marginal(0.0, 1.0, 2.0),
                                          power_marginal(0.0, 1.0, 0.5)};
    for (int n : {1, 2, 3}) {
        for (const ReserveDistribution& phi : {make_phi_star(n), uniform_reserve(0.2, 0.8)}) {
            for (std::size_t k = 0; k < cdfs.size(); ++k) {
                const double expect = oracle_iid_regret(phi, cdfs[k], n);
                CHECK(regret_iid(phi, marginals[k], n).value == Approx(expect).margin(2e-6));
            }
        }
    }
}

TEST_CASE("three regret representations agree") {
    Rng rng(1234);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto [phi, f] = random_representation_pair(rng);
        const int n = 1 + i % 5;
        const double big = regret_bigF(phi, JointSpec::iid(n, f)).value;
        const double iid = regret_iid(phi, f, n).value;
        const double lin = regret_linear_phi(phi, f, n).value;
        worst = std::max({worst, std::abs(big - iid), std::abs(big - lin)});
        CHECK(big == Approx(iid).margin(1e-8));
        CHECK(big == Approx(lin).margin(1e-8));
        CHECK(big >= -1e-12);
    }
    INFO("max disagreement " << worst);
}

TEST_CASE("isorevenue marginal makes regret independent of the reserve") {
    Rng rng(5);
    for (int n : {2, 3, 5}) {
        const Marginal f = worst_case_marginal(n);
        for (int i = 0; i < 20; ++i) {
            const ReserveDistribution phi = random_reserve(rng);
            if (phi.support_lo() < solve_reserve(n)) continue;
            CHECK(regret_linear_phi(phi, f, n).value == Approx(minimax_regret(n)).margin(1e-9));
        }
    }
}

TEST_CASE("steep reserve near r against the worst case") {
    for (int n : {2, 3}) {
        const double r = solve_reserve(n);
        const ReserveDistribution steep = piecewise_linear_reserve({r, r + 1e-7, 1.0}, {0.0, 1.0 - 1e-9, 1.0});
        const Marginal f = worst_case_marginal(n);
        CHECK(regret_linear_phi(steep, f, n).value == Approx(regret_iid(steep, f, n).value).margin(1e-6));
    }
    const ReserveDistribution phi = make_phi_star(3);
    CHECK_THROWS_AS(regret_linear_phi(phi, discrete_marginal({{0.5, 0.5}, {1.0, 0.5}}), 3), DomainError);
}

TEST_CASE("point-mass marginals") {
    for (int n : {1, 2, 5}) {
        const ReserveDistribution phi = make_phi_star(n);
        CHECK(regret_iid(phi, point_mass(0.0), n).value == Approx(0.0).margin(1e-14));
        const double mean_reserve =
            phi.support_hi() - oracle::simpson([&](double p) { return phi.cdf(p); }, phi.support_lo(), phi.support_hi());
        const RegretReport one = regret_iid(phi, point_mass(1.0), n);
        // With two or more buyers at value 1 the second price is 1.
        CHECK(one.value == Approx(n == 1 ? 1.0 - mean_reserve : 0.0).margin(1e-8));
        const RegretReport mc = regret_monte_carlo(spa_random(phi), JointSpec::iid(n, point_mass(1.0)), 1'000'000,
                                                   static_cast<std::uint64_t>(n));
        CHECK(std::abs(mc.value - one.value) <= 4 * mc.err_est + 1e-12);
    }
}

TEST_CASE("analytic regret within four standard errors of simulation") {
    Rng rng(77);
    std::uint64_t seed = 100;
    for (int n : {1, 2, 3, 5}) {
        const ReserveDistribution phi = make_phi_star(n);
        const std::vector<JointSpec> joints{JointSpec::iid(n, worst_case_marginal(n)),
                                            JointSpec::iid(n, random_marginal(rng)), random_mixture(n, rng),
                                            JointSpec::spike(n, worst_case_marginal(n))};
        for (const JointSpec& j : joints) {
            const RegretReport a = regret_bigF(phi, j);
            const RegretReport mc = regret_monte_carlo(spa_random(phi), j, 1'000'000, seed++);
            CHECK(std::abs(a.value - mc.value) <= 4 * mc.err_est);
        }
    }
    const JointSpec d = JointSpec::discrete(random_affiliated_joint(3, rng));
    const RegretReport a = regret_bigF(make_phi_star(3), d);
    const RegretReport mc = regret_monte_carlo(spa_random(make_phi_star(3)), d, 1'000'000, 5);
    CHECK(std::abs(a.value - mc.value) <= 4 * mc.err_est);
    const RegretReport fixed = regret_spa_fixed(0.3, JointSpec::iid(2, uniform_marginal()));
    const RegretReport fmc = regret_monte_carlo(spa_fixed(0.3), JointSpec::iid(2, uniform_marginal()), 1'000'000, 6);
    CHECK(std::abs(fixed.value - fmc.value) <= 4 * fmc.err_est);
}

TEST_CASE("Nature cannot beat the minimax value with iid marginals") {
    Rng rng(2718);
    for (int n : {1, 2, 3, 5}) {
        const ReserveDistribution phi = make_phi_star(n);
        const double R = minimax_regret(n);
        for (int i = 0; i < 500; ++i) CHECK(regret_iid(phi, random_marginal(rng), n).value <= R + 1e-6);
    }
}

TEST_CASE("affiliated joints stay below the minimax value") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const int n = 2 + static_cast<int>(seed % 3);
        const DiscreteExchangeable d = random_affiliated_joint(n, rng);
        REQUIRE(check_affiliation(d).ok);
        CHECK(regret_bigF(make_phi_star(n), JointSpec::discrete(d)).value <= minimax_regret(n) + 1e-6);
    }
}

TEST_CASE("spike of the worst-case marginal stays below the minimax value") {
    for (int n : {2, 3, 5, 10}) {
        const double v = regret_bigF(make_phi_star(n), JointSpec::spike(n, worst_case_marginal(n))).value;
        CHECK(v <= minimax_regret(n) + 1e-9);
    }
    CHECK(regret_bigF(make_phi_star(2), JointSpec::spike(2, worst_case_marginal(2))).value ==
          Approx(minimax_regret(2)).margin(1e-9));
}

TEST_CASE("seller deviations do no better against the worst case") {
    Rng rng(31415);
    for (int n : {1, 2, 3, 5}) {
        const Marginal f = worst_case_marginal(n);
        const JointSpec j = JointSpec::iid(n, f);
        const double R = minimax_regret(n);
        for (int i = 0; i <= 50; ++i) CHECK(regret_spa_fixed(i / 50.0, j).value >= R - 1e-6);
        for (int i = 0; i < 50; ++i) CHECK(regret_iid(random_reserve(rng), f, n).value >= R - 1e-6);
    }
}

TEST_CASE("pointwise best response") {
    for (int n : {1, 2, 3, 5, 10}) {
        const double r = solve_reserve(n);
        for (double t : {0.01, 0.2, 0.5, 0.9, 0.999}) {
            const double v = r + t * (1.0 - r);
            const auto br = nature_pointwise_best_response(n, v);
            CHECK(br.z == Approx(1.0 - r / v).margin(1e-15));
            if (n > 1) CHECK(br.z_search == Approx(br.z).margin(1e-8));
        }
        CHECK(nature_pointwise_best_response(n, 1.0 - 1e-12).z == Approx(1.0 - r).margin(1e-10));
        CHECK_THROWS_AS(nature_pointwise_best_response(n, r), DomainError);
        CHECK_THROWS_AS(nature_pointwise_best_response(n, 1.0), DomainError);
    }
    CHECK(nature_pointwise_best_response(2, 2 * solve_reserve(2)).z == Approx(0.5).margin(1e-15));
}

TEST_CASE("grid best response recovers the worst case") {
    for (int n : {2, 3, 5, 10}) {
        const ReserveDistribution phi = make_phi_star(n);
        const GridBestResponse g = nature_grid_best_response(phi, n, 512, {solve_reserve(n)});
        const Marginal f = worst_case_marginal(n);
        double dist = 0.0;
        for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i) {
            const double mid = 0.5 * (g.nodes[i] + g.nodes[i + 1]);
            dist = std::max(dist, std::abs(g.cdf[i] - f.cdf(mid)));
        }
        INFO("n = " << n);
        CHECK(dist <= 2.0 / 512);
        CHECK(g.value == Approx(minimax_regret(n)).margin(1e-3));
        CHECK(std::is_sorted(g.cdf.begin(), g.cdf.end()));
        CHECK(regret_iid(phi, g.marginal, n).value == Approx(g.value).margin(1e-9));
    }
    const GridBestResponse one = nature_grid_best_response(make_phi_star(1), 1);
    CHECK(one.value == Approx(inv_e).margin(1e-3));
    const ReserveDistribution u = uniform_reserve(0.2, 1.0);
    const GridBestResponse gu = nature_grid_best_response(u, 2);
    CHECK(gu.value >= regret_iid(u, worst_case_marginal(2), 2).value - 1e-12);
    CHECK_THROWS_AS(nature_grid_best_response(u, 2, 32), DomainError);
}

TEST_CASE("saddle verification") {
    for (int n : {1, 2, 3, 5}) {
        const SaddleReport rep = verify_saddle(n);
        CHECK(rep.nature_gap <= 1e-3);
        CHECK(rep.seller_gap >= -1e-3);
        CHECK(rep.optimal_value == Approx(minimax_regret(n)).margin(1e-10));
        CHECK(rep.deterministic_rstar_margin >= -1e-9);
        CHECK(rep.nature_probes > 500);
    }
    CHECK(verify_saddle(2).optimal_value == Approx(0.3238).margin(5e-5));
    CHECK(verify_saddle(1).optimal_value == Approx(0.3679).margin(5e-5));
}

TEST_CASE("SPA with a deterministic reserve: closed forms") {
    CHECK(spa_fixed_reserve_worstcase(2, 0.0) == Approx(0.5));
    CHECK(spa_fixed_reserve_worstcase(3, 0.0) == Approx(4.0 / 9.0));
    CHECK(spa_fixed_reserve_worstcase(1, 0.5) == Approx(0.5));
    CHECK(spa_fixed_reserve_worstcase(1, 0.0) == Approx(1.0));
    CHECK(spa_fixed_reserve_worstcase(2, 0.7) == Approx(0.7));
    CHECK_THROWS_AS(spa_fixed_reserve_worstcase(2, 1.5), DomainError);

    const std::vector<std::tuple<int, double, double>> table2{{1, 1.0, 0.5},       {2, 0.5, 0.4444},
                                                              {3, 0.4444, 0.4219}, {4, 0.4219, 0.4096},
                                                              {5, 0.4096, 0.4019}, {10, 0.3874, 0.3855},
                                                              {25, 0.3754, 0.3751}};
    for (auto [n, spa0, spar] : table2) {
        CHECK(spa_fixed_reserve_worstcase(n, 0.0) == Approx(spa0).margin(5e-5));
        const DeterministicReserve d = optimal_deterministic_reserve(n);
        CHECK(d.regret == Approx(spar).margin(5e-5));
        CHECK(d.r == Approx(1.0 / (n + 1)));
        CHECK(d.grid_r == Approx(d.r).margin(1e-6));
        CHECK(d.grid_regret == Approx(d.regret).margin(1e-9));
    }
    CHECK(optimal_deterministic_reserve(10).regret == Approx(std::pow(10.0 / 11.0, 10)));
}

TEST_CASE("benchmark monotonicity and the extra-buyer identity") {
    for (int n = 1; n <= 20; ++n) {
        const double with_reserve = spa_fixed_reserve_worstcase(n, 1.0 / (n + 1));
        CHECK(with_reserve == Approx(std::pow(n / (n + 1.0), n)).margin(1e-14));
        CHECK(with_reserve < spa_fixed_reserve_worstcase(n, 0.0));
        CHECK(with_reserve == Approx(spa_fixed_reserve_worstcase(n + 1, 0.0)).margin(1e-14));
    }
}

TEST_CASE("closed form worst case matches a brute-force supremum") {
    // Two-point iid laws {r - 0, 1} over a weight grid approximate the supremum from below.
    for (int n : {2, 3}) {
        for (double r : {0.1, 0.25, 0.4}) {
            double best = 0.0;
            for (int i = 1; i < 2000; ++i) {
                const double c = i / 2000.0;
                const double low = std::max(0.0, r - 1e-9);
                const JointSpec j = JointSpec::iid(n, discrete_marginal({{low, c}, {1.0, 1.0 - c}}));
                best = std::max(best, regret_spa_fixed(r, j).value);
            }
            CHECK(best == Approx(spa_fixed_reserve_worstcase(n, r)).margin(1e-5));
        }
    }
}

TEST_CASE("two-point worst-case family") {
    const JointSpec j = spa_worstcase_twopoint(2, 1.0 / 3.0);
    const auto* iid = j.as<IidJoint>();
    REQUIRE(iid);
    CHECK(iid->marginal.cdf(0.5) == Approx(2.0 / 3.0).margin(1e-15));
    for (int n : {2, 3}) {
        const double r = 1.0 / (n + 1);
        const double v = regret_spa_fixed(r, spa_worstcase_twopoint(n, r, 1e-4)).value;
        CHECK(v == Approx(std::pow(n / (n + 1.0), n)).margin(2e-3));
        const double v0 = regret_spa_fixed(0.0, spa_worstcase_twopoint(n, 0.0, 0.0)).value;
        CHECK(v0 == Approx(std::pow((n - 1.0) / n, n - 1)).margin(1e-14));
    }
    CHECK_THROWS_AS(spa_worstcase_twopoint(2, 0.6), DomainError);
    CHECK_THROWS_AS(spa_worstcase_twopoint(1, 0.3), DomainError);
}

TEST_CASE("general class pointwise cases") {
    const auto a = general_class_check(std::vector<double>{0.8, 0.0, 0.0});
    CHECK(a.value == Approx(inv_e).margin(1e-10));
    CHECK(a.case_one);
    const auto b = general_class_check(std::vector<double>{0.8, 0.6});
    CHECK(b.value == Approx(-0.6 * std::log(0.6)).margin(1e-10));
    CHECK(b.value < inv_e);
    CHECK(general_class_check(std::vector<double>{0.2, 0.1}).value == Approx(0.2).margin(1e-14));

    Rng rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        std::vector<double> v(static_cast<std::size_t>(1 + i % 5));
        for (double& x : v) x = U(rng);
        const auto g = general_class_check(v);
        CHECK(g.bounded);
        if (g.case_one)
            CHECK(g.value == Approx(inv_e).margin(1e-10));
        else
            CHECK(g.value < inv_e - 1e-10);
    }
}

TEST_CASE("mixtures of iid") {
    for (int n : {2, 3, 5}) {
        const MixtureEquivalence m = mixture_equivalence_check(n, 100, static_cast<std::uint64_t>(n));
        CHECK(m.ok);
        CHECK(m.max_linearity_error <= 1e-9);
    }
    CHECK(mixture_equivalence_check(3, 100).max_regret <= 0.3093 + 1e-6);
    const JointSpec two = JointSpec::mixture(2, {0.4, 0.6}, {uniform_marginal(0.0, 0.5), uniform_marginal(0.3, 1.0)});
    const ReserveDistribution phi = make_phi_star(2);
    CHECK(regret_bigF(phi, two).value ==
          Approx(0.4 * regret_iid(phi, uniform_marginal(0.0, 0.5), 2).value +
                 0.6 * regret_iid(phi, uniform_marginal(0.3, 1.0), 2).value)
              .margin(1e-9));
    const JointSpec single = JointSpec::mixture(4, {1.0}, {worst_case_marginal(4)});
    CHECK(regret_bigF(make_phi_star(4), single).value == Approx(0.3021).margin(5e-5));
    CHECK_THROWS_AS(mixture_equivalence_check(2, 99), DomainError);
}
