#include "mmspa/optmech.hpp"
#include "support/oracles.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

using namespace mmspa;

namespace {
const double kInvE = 1.0 / std::numbers::e;
}

TEST_CASE("reserve equation residual") {
    CHECK(reserve_equation_residual(1, kInvE) == Approx(0.0).margin(1e-15));
    CHECK(reserve_equation_residual(2, 0.5) == Approx(1.0 + std::log(0.5)).margin(1e-15));
    CHECK(reserve_equation_residual(2, 0.5) == Approx(0.3069).margin(1e-4));
    CHECK(reserve_equation_residual(2, 0.05) == Approx(1.9 + std::log(0.05)).margin(1e-15));
    CHECK(reserve_equation_residual(2, 0.05) == Approx(-1.0957).margin(1e-4));
    CHECK_THROWS_AS(reserve_equation_residual(2, 0.0), DomainError);
    CHECK_THROWS_AS(reserve_equation_residual(2, 1.0), DomainError);
    CHECK_THROWS_AS(reserve_equation_residual(0, 0.5), DomainError);
}

TEST_CASE("solve_reserve matches the oracle and stays in (0, 1/n)") {
    CHECK(solve_reserve(1) == Approx(kInvE).margin(1e-10));
    CHECK(solve_reserve(2) == Approx(0.20319).margin(1e-5));
    for (int n = 1; n <= 50; ++n) {
        const double r = solve_reserve(n);
        CHECK(r > 0.0);
        CHECK(r < 1.0 / n);
        CHECK(std::abs(reserve_equation_residual(n, r)) <= 1e-10);
        CHECK(r == Approx(oracle::reserve(n)).margin(1e-12));
    }
    CHECK(1000 * solve_reserve(1000) == Approx(0.4348).margin(0.01));
    CHECK_THROWS_AS(solve_reserve(0), DomainError);
}

TEST_CASE("residual sign pattern around the root") {
    for (int n : {2, 3, 8}) {
        const double r = solve_reserve(n);
        CHECK(reserve_equation_residual(n, 0.5 * r) < 0.0);
        CHECK(reserve_equation_residual(n, 0.5 * (r + 1.0 / n)) > 0.0);
    }
}

TEST_CASE("phi_star_cdf edges and the single-buyer closed form") {
    for (int n : {1, 2, 5}) {
        const double r = solve_reserve(n);
        CHECK(phi_star_cdf(n, r) == 0.0);
        CHECK(phi_star_cdf(n, 0.5 * r) == 0.0);
        CHECK(phi_star_cdf(n, 1.0) == Approx(1.0).margin(1e-9));
        CHECK(phi_star_cdf(n, r, 1.0 - 1e-12) == Approx(1.0).margin(1e-9));
    }
    CHECK(phi_star_cdf(1, 0.5) == Approx(std::log(0.5) + 1.0).margin(1e-12));
    for (int i = 0; i < 100; ++i) {
        const double v = kInvE + (1.0 - kInvE) * i / 99.0;
        CHECK(phi_star_cdf(1, v) == Approx(std::log(v) + 1.0).margin(1e-10));
    }
}

TEST_CASE("phi_star_cdf is monotone and satisfies the reserve ODE") {
    for (int n : {1, 2, 3, 4, 5, 10, 25}) {
        const double r = solve_reserve(n);
        double prev = 0.0;
        for (int i = 1; i < 400; ++i) {
            const double v = r + (1.0 - r) * i / 400.0;
            const double phi = phi_star_cdf(n, v);
            CHECK(phi >= prev);
            prev = phi;
            const double d = phi_star_density(n, r, v);
            CHECK(d >= 0.0);
            const double residual = d + (n - 1) * r / (v * (v - r)) * phi - 1.0 / v;
            CHECK(std::abs(residual) < 1e-8);
        }
    }
}

TEST_CASE("series and closed form agree on the overlap region") {
    for (int n : {1, 2, 3, 5, 10}) {
        const double r = solve_reserve(n);
        for (double w = 0.3; w <= 0.7 + 1e-12; w += 0.01) {
            const double v = r / (1.0 - w);
            CHECK(phi_star_series(n, r, v) == Approx(phi_star_closed(n, r, v)).margin(1e-9));
        }
    }
}

TEST_CASE("phi_star_density") {
    CHECK(phi_star_density(1, 0.5) == Approx(2.0).margin(1e-12));
    const double r1 = solve_reserve(1);
    CHECK(phi_star_density(1, r1 * (1 + 1e-9)) == Approx(1.0 / r1).epsilon(1e-6));
    for (int n : {2, 3, 6}) {
        const double r = solve_reserve(n);
        // Series expansion near w = 0: density -> 1 / (n r).
        CHECK(phi_star_density(n, r, r * (1 + 1e-9)) == Approx(1.0 / (n * r)).epsilon(1e-6));
        for (double v : {r + 0.01, 0.5, 0.9}) {
            const double h = 1e-6;
            const double fd = (phi_star_cdf(n, v + h) - phi_star_cdf(n, v - h)) / (2 * h);
            CHECK(phi_star_density(n, r, v) == Approx(fd).margin(1e-6));
        }
    }
    const double r3 = solve_reserve(3);
    const double v = 0.7;
    const double res = phi_star_density(3, v) + 2 * r3 / (v * (v - r3)) * phi_star_cdf(3, v) - 1.0 / v;
    CHECK(std::abs(res) < 1e-8);
    CHECK_THROWS_AS(phi_star_density(2, 1.0), DomainError);
    CHECK_THROWS_AS(phi_star_density(2, 0.1), DomainError);
}

TEST_CASE("phi_star_quantile inverts the CDF") {
    CHECK(phi_star_quantile(1, 0.0) == Approx(kInvE).margin(1e-14));
    CHECK(phi_star_quantile(1, 1.0) == 1.0);
    CHECK(phi_star_quantile(1, 0.5) == Approx(std::exp(-0.5)).margin(1e-10));
    for (int n : {2, 4, 10}) {
        const double r = solve_reserve(n);
        for (int i = 1; i < 50; ++i) {
            const double u = i / 50.0;
            CHECK(phi_star_cdf(n, phi_star_quantile(n, u)) == Approx(u).margin(1e-10));
            const double v = r + (1.0 - r) * i / 50.0;
            CHECK(phi_star_quantile(n, phi_star_cdf(n, v)) == Approx(v).margin(1e-9));
        }
    }
}

TEST_CASE("make_phi_star wraps the closed forms") {
    const ReserveDistribution phi = make_phi_star(3);
    CHECK(phi.support_lo() == solve_reserve(3));
    CHECK(phi.support_hi() == 1.0);
    CHECK(phi.cdf(0.6) == phi_star_cdf(3, 0.6));
    CHECK(phi.density(0.6) == phi_star_density(3, 0.6));
    CHECK(phi.density(0.01) == 0.0);
    CHECK(phi.quantile(0.4) == Approx(phi_star_quantile(3, 0.4)).margin(1e-14));
}

TEST_CASE("isorevenue marginal") {
    const Marginal f = isorevenue_marginal(kInvE);
    CHECK(f.cdf_left(1.0) == Approx(1.0 - kInvE).margin(1e-15));
    CHECK(f.atom_mass_at(1.0) == Approx(kInvE).margin(1e-15));
    for (double r : {0.1, 0.3, 0.5, 0.9}) {
        const Marginal g = isorevenue_marginal(r);
        for (double p : {r, 0.5 * (1.0 + r), 0.999}) CHECK(p * (1.0 - g.cdf(p)) == Approx(r).margin(1e-15));
        for (double v : {0.5 * r, r + 1e-3, 0.95}) {
            if (v > r) CHECK(1.0 - g.cdf(v) - v * g.density(v) == Approx(0.0).margin(1e-15));
        }
    }
    CHECK(isorevenue_marginal(0.5).cdf(0.75) == Approx(1.0 / 3.0).margin(1e-15));
    CHECK_THROWS_AS(isorevenue_marginal(0.0), DomainError);
    CHECK_THROWS_AS(isorevenue_marginal(1.0), DomainError);
}

TEST_CASE("minimax regret: published values and monotonicity") {
    CHECK(minimax_regret(1) == Approx(0.3679).margin(5e-5));
    CHECK(minimax_regret(5) == Approx(0.2979).margin(5e-5));
    CHECK(minimax_regret(10) == Approx(0.2896).margin(5e-5));
    CHECK(minimax_regret(1) == Approx(kInvE).margin(1e-12));
    // n = 2: the integral has the closed form (1 - r) + r log r.
    const double r2 = solve_reserve(2);
    CHECK(minimax_regret(2) == Approx(-r2 * std::log(r2)).margin(1e-12));
    const double limit = asymptotic_constants().limit_regret;
    double prev = 1.0;
    for (int n = 1; n <= 50; ++n) {
        const double R = minimax_regret(n);
        CHECK(R < prev);
        CHECK(R > limit);
        CHECK(R <= kInvE + 1e-15);
        prev = R;
    }
    const OptimalSolution s = optimal_solution(4);
    CHECK(s.n == 4);
    CHECK(s.r_star == solve_reserve(4));
    CHECK(s.regret == Approx(0.3021).margin(5e-5));
}

TEST_CASE("asymptotic constants") {
    const AsymptoticConstants a = asymptotic_constants();
    CHECK(a.c == Approx(0.434818).margin(1e-5));
    CHECK(a.limit_regret == Approx(0.281494).margin(1e-5));
    // Substituting v = c/t turns the limit integral into c E2-type terms; the
    // value collapses to c e^{-c} at the root.
    CHECK(a.limit_regret == Approx(a.c * std::exp(-a.c)).margin(1e-12));
    CHECK(std::exp(-a.c) == Approx(oracle::e1(a.c)).margin(1e-12));
    CHECK(std::abs(minimax_regret(200) - a.limit_regret) < 5e-3);
}

TEST_CASE("limiting reserve CDF") {
    CHECK(phi_infinity_cdf(1.0) == Approx(1.0).margin(1e-6));
    CHECK(phi_infinity_cdf(1e-4) < 1e-3);
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double v = i / 100.0;
        const double p = phi_infinity_cdf(v);
        CHECK(p >= prev);
        prev = p;
    }
    CHECK(std::abs(phi_star_cdf(500, 0.7) - phi_infinity_cdf(0.7)) < 1e-2);
    CHECK_THROWS_AS(phi_infinity_cdf(0.0), DomainError);
    const ReserveDistribution inf = make_phi_infinity();
    CHECK(inf.cdf(0.5) == phi_infinity_cdf(0.5));
}
