#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "capdet/error.hpp"
#include "capdet/fourier.hpp"
#include "capdet/grid.hpp"

using namespace capdet;
using std::numbers::pi;

namespace {

WaveFunction gaussian(const Grid1D& g, double x0, double sigma, double k0 = 0.0) {
    auto psi = WaveFunction::sample(g, [&](double x) {
        const double a = (x - x0) / sigma;
        return std::exp(-0.5 * a * a) * std::polar(1.0, k0 * x);
    });
    psi.normalize();
    return psi;
}

WaveFunction random_state(const Grid& g, std::mt19937& rng) {
    std::normal_distribution<double> n;
    WaveFunction psi(g);
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = {n(rng), n(rng)};
    return psi;
}

} // namespace

TEST_CASE("grid construction and coordinates") {
    const auto g = Grid1D::from_spacing(-250.0, 250.0, 0.25);
    CHECK(g.n() == 2001);
    CHECK(g.dx() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(g.x(0) == doctest::Approx(-250.0));
    CHECK(g.x(1000) == 0.0);
    for (std::size_t j = 0; j < g.n(); ++j) REQUIRE(g.x(j) == -g.x(g.n() - 1 - j));

    CHECK_THROWS_AS(Grid1D::from_count(0.0, 1.0, 7), InvalidArgument);
    CHECK_THROWS_AS(Grid1D::from_count(1.0, 1.0, 10), InvalidArgument);
    CHECK_THROWS_AS(Grid1D::from_spacing(0.0, 1.0, 0.3), InvalidArgument);

    const Grid2D g2(Grid1D::from_count(-1.0, 1.0, 9), Grid1D::from_count(-2.0, 2.0, 11));
    CHECK(g2.size() == 99);
    CHECK(g2.r(8, 10) == doctest::Approx(std::hypot(1.0, 2.0)));
    CHECK(g2.theta(8, 5) == doctest::Approx(0.0));
    CHECK(g2.theta(4, 10) == doctest::Approx(pi / 2));
    CHECK(g2.theta(0, 5) == doctest::Approx(pi));
}

TEST_CASE("inner product") {
    const auto g = Grid1D::from_spacing(-30.0, 30.0, 0.05);
    const auto psi = gaussian(g, 0.0, 2.0);
    CHECK(std::abs(inner_product(psi, psi) - 1.0) < 1e-12);

    SUBCASE("disjoint support") {
        auto a = WaveFunction::sample(g, [](double x) { return x < -1.0 ? cplx(1.0, 0.5) : cplx(0.0); });
        auto b = WaveFunction::sample(g, [](double x) { return x > 1.0 ? cplx(2.0, -1.0) : cplx(0.0); });
        CHECK(std::abs(inner_product(a, b)) == 0.0);
    }
    SUBCASE("sine orthogonality by quadrature") {
        const double L = 10.0;
        for (double dx : {0.1, 0.05}) {
            const auto h = Grid1D::from_spacing(0.0, L, dx);
            const auto s1 = WaveFunction::sample(h, [&](double x) { return cplx(std::sin(pi * x / L)); });
            const auto s2 = WaveFunction::sample(h, [&](double x) { return cplx(std::sin(2 * pi * x / L)); });
            CHECK(std::abs(inner_product(s1, s2)) < 10.0 * dx * dx);
        }
    }
    SUBCASE("conjugate symmetry") {
        std::mt19937 rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const auto a = random_state(g, rng), b = random_state(g, rng);
            const cplx ab = inner_product(a, b), ba = inner_product(b, a);
            CHECK(std::abs(ab - std::conj(ba)) <= 1e-12 * std::abs(ab));
        }
    }
    SUBCASE("grid mismatch") {
        const auto h = Grid1D::from_spacing(-30.0, 30.0, 0.1);
        CHECK_THROWS_AS(inner_product(psi, WaveFunction(h)), GridMismatch);
    }
}

TEST_CASE("kinetic stencil") {
    const Units u;
    const auto g = Grid1D::from_spacing(-10.0, 10.0, 0.1);

    SUBCASE("constant has zero interior curvature") {
        const auto c = WaveFunction::sample(g, [](double) { return cplx(3.0); });
        const auto t = apply_kinetic(c, u);
        for (std::size_t j = 1; j + 1 < g.n(); ++j) REQUIRE(std::abs(t[j]) < 1e-10);
        CHECK(std::abs(t[0]) > 1.0); // hard wall outside the grid
    }
    SUBCASE("quadratic is exact") {
        const auto q = WaveFunction::sample(g, [](double x) { return cplx(x * x); });
        const auto t = apply_kinetic(q, u);
        for (std::size_t j = 1; j + 1 < g.n(); ++j) REQUIRE(std::abs(t[j] + 1.0) < 1e-9);
    }
    SUBCASE("plane wave follows the discrete dispersion") {
        const double k = 1.7, dx = g.dx();
        const auto w = WaveFunction::sample(g, [&](double x) { return std::polar(1.0, k * x); });
        const auto t = apply_kinetic(w, u);
        const double e = (2.0 / (dx * dx)) * (1.0 - std::cos(k * dx)) / 2.0;
        for (std::size_t j = 1; j + 1 < g.n(); ++j) REQUIRE(std::abs(t[j] - e * w[j]) < 1e-9);
    }
    SUBCASE("mass and hbar scaling") {
        const Units v{2.0, 3.0};
        const auto q = WaveFunction::sample(g, [](double x) { return cplx(x * x); });
        const auto t = apply_kinetic(q, v);
        CHECK(t[50].real() == doctest::Approx(-4.0 / 3.0));
    }
    SUBCASE("hermitian and positive, 1D and 2D") {
        std::mt19937 rng(11);
        const Grid2D g2(Grid1D::from_count(-3.0, 3.0, 17), Grid1D::from_count(-2.0, 2.0, 13));
        for (const Grid& gg : {Grid(g), Grid(g2)}) {
            for (int trial = 0; trial < 10; ++trial) {
                const auto a = random_state(gg, rng), b = random_state(gg, rng);
                const cplx l = inner_product(a, apply_kinetic(b, u));
                const cplx r = std::conj(inner_product(b, apply_kinetic(a, u)));
                CHECK(std::abs(l - r) <= 1e-12 * std::abs(l));
                const cplx aa = inner_product(a, apply_kinetic(a, u));
                CHECK(aa.real() >= 0.0);
                CHECK(std::abs(aa.imag()) <= 1e-12 * aa.real());
            }
        }
    }
}

TEST_CASE("momentum grid and transform") {
    const Units u;
    const auto g = Grid1D::from_spacing(-250.0, 250.0, 0.25);
    const auto mg = MomentumGrid::dual_of(g, u);
    CHECK(mg.n == 2001);
    CHECK(mg.dp == doctest::Approx(2 * pi / (2001 * 0.25)));
    CHECK(mg.j_min == -1000);
    CHECK(mg.p(1000) == 0.0);
    CHECK(mg.p_max() <= pi / 0.25 + 1e-12);

    const auto even = MomentumGrid::dual_of(Grid1D::from_count(0.0, 1.0, 64), u);
    CHECK(even.j_min == -32);

    SUBCASE("Gaussian pair") {
        const double sigma = 2.0;
        const auto h = Grid1D::from_spacing(-40.0, 40.0, 0.1);
        const auto psi = gaussian(h, 0.0, sigma);
        const auto phi = to_momentum(psi, u);
        // |psi|^2 has standard deviation sigma/sqrt2, so |Phi|^2 has hbar/(sigma sqrt2).
        const double sp = 1.0 / (std::sqrt(2.0) * sigma);
        double err = 0.0;
        for (std::size_t k = 0; k < phi.grid.n; ++k) {
            const double p = phi.grid.p(k);
            const double rho = std::exp(-0.5 * p * p / (sp * sp)) / (std::sqrt(2 * pi) * sp);
            err = std::max(err, std::abs(std::norm(phi.values[k]) - rho));
        }
        CHECK(err < 1e-10);
    }
    SUBCASE("Parseval on random states") {
        std::mt19937 rng(3);
        for (std::size_t n : {64u, 101u, 2001u}) {
            const auto h = Grid1D::from_count(-5.0, 7.0, n);
            const auto psi = random_state(h, rng);
            const auto phi = to_momentum(psi, u);
            double s = 0.0;
            for (const auto& v : phi.values) s += std::norm(v);
            CHECK(std::abs(s * phi.grid.dp - psi.norm2()) <= 1e-10 * psi.norm2());
        }
    }
    SUBCASE("matches the defining sum") {
        std::mt19937 rng(5);
        const auto h = Grid1D::from_count(-3.0, 4.0, 37);
        const auto psi = random_state(h, rng);
        const auto phi = to_momentum(psi, u);
        for (std::size_t k = 0; k < phi.grid.n; ++k) {
            cplx s = 0.0;
            for (std::size_t j = 0; j < h.n(); ++j) s += std::polar(1.0, -phi.grid.p(k) * h.x(j)) * psi[j];
            s *= h.dx() / std::sqrt(2 * pi);
            REQUIRE(std::abs(s - phi.values[k]) < 1e-12);
        }
    }
    SUBCASE("translation and momentum shift") {
        const auto h = Grid1D::from_spacing(-50.0, 50.0, 0.1);
        const auto a = to_momentum(gaussian(h, 0.0, 2.0), u);
        const auto b = to_momentum(gaussian(h, 7.0, 2.0), u);
        for (std::size_t k = 0; k < a.grid.n; ++k) REQUIRE(std::abs(std::abs(a.values[k]) - std::abs(b.values[k])) < 1e-10);

        const long shift = 40;
        const double k0 = static_cast<double>(shift) * a.grid.dp;
        const auto c = to_momentum(gaussian(h, 0.0, 2.0, k0), u);
        for (std::size_t k = static_cast<std::size_t>(shift); k < a.grid.n; ++k)
            REQUIRE(std::abs(std::abs(c.values[k]) - std::abs(a.values[k - shift])) < 1e-10);
    }
    SUBCASE("Dft1D reuses its plan") {
        const auto h = Grid1D::from_count(-5.0, 5.0, 128);
        Dft1D dft(h, u);
        std::mt19937 rng(9);
        for (int t = 0; t < 3; ++t) {
            const auto psi = random_state(h, rng);
            std::vector<cplx> out(h.n());
            dft.forward(psi.amps(), out);
            const auto ref = to_momentum(psi, u);
            for (std::size_t k = 0; k < out.size(); ++k) REQUIRE(std::abs(out[k] - ref.values[k]) < 1e-13);
        }
        std::vector<cplx> small(5);
        CHECK_THROWS(dft.forward(std::vector<cplx>(128), small));
    }
}

TEST_CASE("wave function basics") {
    const auto g = Grid1D::from_count(0.0, 1.0, 16);
    WaveFunction z(g);
    CHECK(z.norm2() == 0.0);
    CHECK_THROWS(z.normalize());
    CHECK_THROWS_AS(WaveFunction(g, std::vector<cplx>(3)), InvalidArgument);
    CHECK_THROWS(z.grid_2d());
}
