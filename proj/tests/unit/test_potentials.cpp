#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "capdet/error.hpp"
#include "capdet/potentials.hpp"

using namespace capdet;
using std::numbers::pi;

TEST_CASE("gaussian well") {
    const GaussianWell w{0.6, 3.0};
    CHECK(gaussian_well(0.0, w) == doctest::Approx(-0.6));
    CHECK(gaussian_well(3.0, w) == doctest::Approx(-0.6 * std::exp(-0.5)));
    CHECK(std::abs(gaussian_well(200.0, w)) < 1e-300);
    CHECK(gaussian_well(-1.3, w) == gaussian_well(1.3, w));
    CHECK_THROWS_AS(validate(GaussianWell{0.0, 3.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(GaussianWell{0.6, -1.0}), InvalidArgument);
}

TEST_CASE("pulse pair") {
    const PulsePair p{2.0, 1.0, 20.0 * pi, 5.0, -1.0};
    CHECK(p.support_end() == doctest::Approx(40.0 * pi - 5.0));
    CHECK(field(0.0, p) == 0.0);
    CHECK(field(-1.0, p) == 0.0);

    // At t = T only the second pulse contributes, evaluated at tau.
    CHECK(single_pulse(p.T, p) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(field(p.T, p) == doctest::Approx(single_pulse(p.tau, p)).epsilon(1e-12));

    for (double t : {p.support_end() + 1e-9, p.support_end() + 3.0, 1e4}) CHECK(field(t, p) == 0.0);

    CHECK(std::abs(field(p.T / 2, p)) < 1e-12);
    const double t = p.T / 2 + pi / (2 * p.omega);
    const double env = std::sin(pi / p.T * t);
    CHECK(single_pulse(t, p) == doctest::Approx(p.E0 * env * env));

    // Two overlapping pulses on [T - tau, T].
    const double s = p.T - 2.0;
    CHECK(field(s, p) == doctest::Approx(single_pulse(s, p) + single_pulse(s - p.T + p.tau, p)));

    CHECK_THROWS_AS(validate(PulsePair{2.0, 1.0, 0.0, 0.0, -1.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(PulsePair{2.0, 1.0, 10.0, 10.0, -1.0}), InvalidArgument);
}

TEST_CASE("fermi function is overflow safe") {
    CHECK(fermi(0.0, 0.1) == doctest::Approx(0.5));
    CHECK(fermi(1e4, 0.1) == 0.0);
    CHECK(fermi(-1e4, 0.1) == 1.0);
    CHECK(std::isfinite(fermi(700.0, 1e-3)));
    for (double x : {-3.0, -0.2, 0.05, 1.0}) CHECK(fermi(x, 0.7) + fermi(-x, 0.7) == doctest::Approx(1.0));
}

TEST_CASE("double slit wall") {
    const DoubleSlitWall w;
    CHECK(double_slit(0.0, 0.0, w) == doctest::Approx(w.V0).epsilon(1e-12));
    // Slit centre: only the two near edges leak, 2 V0 f(w/2) with w/2 = 7.5 T_s.
    const double open = 2.0 * w.V0 * fermi(w.w / 2, w.T_s);
    CHECK(open < 2e-3 * w.V0);
    CHECK(double_slit(0.0, w.d / 2, w) == doctest::Approx(open).epsilon(1e-6));
    CHECK(double_slit(0.0, -w.d / 2, w) == doctest::Approx(open).epsilon(1e-6));
    CHECK(double_slit(0.0, 60.0, w) == doctest::Approx(w.V0));
    CHECK(double_slit(10.0, 0.0, w) < 1e-100);

    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ux(-5.0, 5.0), uy(-40.0, 40.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng), y = uy(rng);
        REQUIRE(std::abs(double_slit(x, y, w) - double_slit(x, -y, w)) <= 1e-12);
        REQUIRE(std::abs(double_slit(x, y, w) - double_slit(-x, y, w)) <= 1e-12);
    }
    CHECK_THROWS_AS(validate(DoubleSlitWall{100.0, 2.0, 1.0, 1.5, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(validate(DoubleSlitWall{100.0, 2.0, 20.0, 1.5, 0.0}), InvalidArgument);
}

TEST_CASE("CAP profiles") {
    const LocalCapProfile g{0.03, 200.0};
    CHECK(local_gamma(200.0, g) == 0.0);
    CHECK(local_gamma(201.0, g) == doctest::Approx(0.03));
    CHECK(local_gamma(150.0, g) == 0.0);
    CHECK(local_gamma(210.0, g) == doctest::Approx(3.0));

    const EnergyCapProfile m{0.2};
    CHECK(mu(0.0, m) == 0.0);
    CHECK(mu(1.0, m) == doctest::Approx(0.2));
    CHECK(mu(64.0, m) == doctest::Approx(0.4));
    CHECK_THROWS_AS(mu(-1e-9, m), InvalidArgument);

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int i = 0; i < 1000; ++i) {
        const double s = u(rng);
        REQUIRE(local_gamma(s, g) >= 0.0);
        REQUIRE(mu(s, m) >= 0.0);
        if (s <= g.R) REQUIRE(local_gamma(s, g) == 0.0);
    }
    CHECK_THROWS_AS(validate(LocalCapProfile{-1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(validate(EnergyCapProfile{-0.1}), InvalidArgument);
}
