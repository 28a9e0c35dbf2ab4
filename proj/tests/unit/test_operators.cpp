#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "capdet/error.hpp"
#include "capdet/operators.hpp"

using namespace capdet;
using std::numbers::pi;

namespace {

WaveFunction random_state(const Grid& g, std::mt19937& rng) {
    std::normal_distribution<double> n;
    WaveFunction psi(g);
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = {n(rng), n(rng)};
    return psi;
}

// Sum_j,ch w_j phi_j(x) phi_j(y) dx assembled from independently sampled states.
Eigen::MatrixXd dense_energy_cap(const Grid1D& g, double R, const EnergyCapProfile& prof, double eps_min,
                                 double eps_max, std::size_t n_eps) {
    const double de = (eps_max - eps_min) / double(n_eps);
    const auto n = static_cast<Eigen::Index>(g.n());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < n_eps; ++j) {
        const double e = eps_min + (double(j) + 0.5) * de;
        const double w = prof.mu0 * std::pow(e, 1.0 / 6.0) * de;
        for (Channel ch : {Channel::left, Channel::right}) {
            const auto s = exterior_state(e, ch, g, R);
            const Eigen::Map<const Eigen::VectorXd> v(s.samples.data(), n);
            G.noalias() += w * g.dx() * v * v.transpose();
        }
    }
    return G;
}

Eigen::VectorXcd as_vec(const WaveFunction& psi) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(psi.size()));
    for (std::size_t k = 0; k < psi.size(); ++k) v(static_cast<Eigen::Index>(k)) = psi[k];
    return v;
}

} // namespace

TEST_CASE("local absorber") {
    const auto g = Grid1D::from_spacing(-250.0, 250.0, 0.25);
    const auto a = build_local(g, {0.03, 200.0});
    std::size_t left = 0, right = 0;
    for (std::size_t j = 0; j < g.n(); ++j) {
        REQUIRE(a.diag[j] >= 0.0);
        if (std::abs(g.x(j)) <= 200.0) REQUIRE(a.diag[j] == 0.0);
        if (a.diag[j] > 0.0) (g.x(j) > 0 ? right : left)++;
    }
    // Nodes 200.25, 200.5, ..., 250.
    CHECK(left == 200);
    CHECK(right == 200);
    CHECK(a.diag[g.n() - 1] == doctest::Approx(0.03 * 50.0 * 50.0));

    CHECK_THROWS_WITH_AS(build_local(g, {0.03, 250.0}), doctest::Contains("CAP region unresolved"), InvalidArgument);
    CHECK_THROWS_WITH_AS(build_local(g, {0.03, 300.0}), doctest::Contains("CAP region unresolved"), InvalidArgument);
    CHECK_THROWS_AS(build_local(g, {0.03, 238.0}), InvalidArgument); // 48 nodes per side
    CHECK_NOTHROW(build_local(g, {0.03, 237.5}));                    // exactly 50

    const auto z = build_local(g, {0.0, 200.0});
    for (double v : z.diag) REQUIRE(v == 0.0);

    // A one-sided grid only needs the side that exists.
    CHECK_NOTHROW(build_local(Grid1D::from_spacing(-100.0, 160.0, 0.1), {0.001, 100.0}));
}

TEST_CASE("radial absorber") {
    const Grid2D g(Grid1D::from_spacing(-40.0, 120.0, 0.5), Grid1D::from_spacing(-80.0, 80.0, 0.5));
    const auto a = build_radial(g, {0.03, 40.0});
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const double v = a.diag[g.index(i, j)];
            REQUIRE(v >= 0.0);
            if (g.r(i, j) <= 40.0) REQUIRE(v == 0.0);
            else REQUIRE(v == doctest::Approx(0.03 * std::pow(g.r(i, j) - 40.0, 2)));
        }
    CHECK_THROWS_WITH_AS(build_radial(g, {0.03, 130.0}), doctest::Contains("CAP region unresolved"), InvalidArgument);
}

TEST_CASE("exterior eigenstates") {
    const auto g = Grid1D::from_spacing(-60.0, 60.0, 0.1);
    const double R = 20.0;
    const auto s = exterior_state(0.5, Channel::right, g, R);
    CHECK(s.k == doctest::Approx(1.0));
    for (std::size_t j = 0; j < g.n(); ++j) {
        const double x = g.x(j);
        if (x <= R) REQUIRE(s.samples[j] == 0.0);
        else REQUIRE(s.samples[j] == doctest::Approx(std::sqrt(2.0 / pi) * std::sin(x - R)));
    }
    const auto l = exterior_state(0.5, Channel::left, g, R);
    for (std::size_t j = 0; j < g.n(); ++j) REQUIRE(l.samples[j] == s.samples[g.n() - 1 - j]);

    const auto h = exterior_state(2.0, Channel::right, g, R, Units{1.0, 4.0});
    CHECK(h.k == doctest::Approx(4.0));
    CHECK_THROWS_AS(exterior_state(0.0, Channel::right, g, R), InvalidArgument);
    CHECK_THROWS_AS(exterior_state(-1.0, Channel::left, g, R), InvalidArgument);
    CHECK(std::string(to_string(Channel::left)) == "left");
}

TEST_CASE("exterior basis completeness") {
    // Unit-norm packets living entirely beyond |x| = R.
    const auto g = Grid1D::from_spacing(-250.0, 250.0, 0.25);
    const auto a = build_energy(g, 200.0, {1.0}, 0.005, 6.0, 600);
    for (double x0 : {225.0, -222.0}) {
        for (double k0 : {0.8, 1.5}) {
            auto psi = WaveFunction::sample(g, [&](double x) {
                const double u = (x - x0) / 3.0;
                return std::exp(-0.5 * u * u) * std::polar(1.0, k0 * x);
            });
            psi.normalize();
            double s = 0.0;
            for (std::size_t b = 0; b < a.channels().size(); ++b)
                for (const cplx& c : a.project(psi, b)) s += a.d_eps() * std::norm(c);
            CHECK(s == doctest::Approx(1.0).epsilon(0.02));
        }
    }
}

TEST_CASE("exterior near-orthogonality on a matched exterior") {
    // With exterior length L = pi k / d_eps neighbouring states around k are
    // box modes of the exterior, so d_eps <phi_j|phi_k> approaches delta_jk.
    const double R = 10.0, de = 0.01, eps0 = 0.5;
    const double L = pi * std::sqrt(2.0 * eps0) / de;
    const auto g = Grid1D::from_count(-(R + L), R + L, 6401);
    const auto a = build_energy(g, R, {1.0}, eps0 - 16 * de, eps0 + 16 * de, 32);
    REQUIRE(a.d_eps() == doctest::Approx(de));
    const auto& b = a.channels().front();
    const Eigen::MatrixXd K = de * g.dx() * b.basis.transpose() * b.basis;
    for (Eigen::Index j = 0; j < K.rows(); ++j)
        for (Eigen::Index k = 0; k < K.cols(); ++k) {
            const double ej = a.energies()[std::size_t(j)], ek = a.energies()[std::size_t(k)];
            if (std::abs(ej - eps0) > 0.03 || std::abs(ek - eps0) > 0.03) continue;
            if (j == k) CHECK(K(j, k) == doctest::Approx(1.0).epsilon(0.05));
            else CHECK(std::abs(K(j, k)) <= 0.05);
        }
}

TEST_CASE("energy absorber against the dense oracle") {
    std::mt19937 rng(42);
    const EnergyCapProfile prof{0.2};
    struct Case {
        Grid1D grid;
        double R;
        bool dense_path;
    };
    for (const auto& c : {Case{Grid1D::from_count(-8.0, 8.0, 64), 4.0, true},
                          Case{Grid1D::from_count(-10.0, 10.0, 200), 3.0, false}}) {
        const auto e = build_energy(c.grid, c.R, prof, 0.05, 3.0, 32);
        CHECK(e.channels().size() == 2);
        CHECK((e.channels()[0].count <= e.n_eps()) == c.dense_path);
        for (double w : e.weights()) REQUIRE(w >= 0.0);
        const AbsorberHandle h(e);
        CHECK(h.variant() == AbsorberHandle::Variant::energy);
        CHECK(h.diagonal().empty());

        const Eigen::MatrixXd G = dense_energy_cap(c.grid, c.R, prof, 0.05, 3.0, 32);
        CHECK((G - G.transpose()).norm() <= 1e-14 * G.norm());
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
        Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
        lu.setThreshold(1e-10);
        CHECK(lu.rank() <= 2 * 32);

        for (int t = 0; t < 5; ++t) {
            const auto psi = random_state(c.grid, rng), phi = random_state(c.grid, rng);
            const auto gpsi = apply(h, psi);
            const Eigen::VectorXcd ref = G.cast<cplx>() * as_vec(psi);
            REQUIRE((as_vec(gpsi) - ref).norm() <= 1e-12 * ref.norm());
            const cplx l = inner_product(phi, gpsi), r = std::conj(inner_product(psi, apply(h, phi)));
            CHECK(std::abs(l - r) <= 1e-12 * std::abs(l));
            const double ex = expectation(h, psi);
            CHECK(ex >= 0.0);
            CHECK(ex == doctest::Approx(inner_product(psi, gpsi).real()).epsilon(1e-12));

            // Crank-Nicolson decay factor against a dense solve.
            const double span = 0.7;
            const RationalDecay d(e, span);
            CHECK(d.residual() < 1e-10);
            const Eigen::MatrixXd A = 0.5 * span * G;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(G.rows(), G.cols());
            const Eigen::MatrixXd D = (I + A).lu().solve(I - A);
            auto x = psi;
            d.apply(x.amps());
            const Eigen::VectorXcd dref = D.cast<cplx>() * as_vec(psi);
            REQUIRE((as_vec(x) - dref).norm() <= 1e-11 * dref.norm());
            CHECK(x.norm2() <= psi.norm2());
        }
    }
}

TEST_CASE("every absorber vanishes on the interior") {
    std::mt19937 rng(5);
    const auto g = Grid1D::from_spacing(-30.0, 30.0, 0.1);
    const double R = 20.0;
    auto inside = random_state(g, rng);
    for (std::size_t j = 0; j < g.n(); ++j)
        if (std::abs(g.x(j)) > R) inside[j] = 0.0;

    const AbsorberHandle loc(build_local(g, {0.1, R}));
    const AbsorberHandle en(build_energy(g, R, {0.3}, 0.01, 4.0, 64));
    for (const auto* h : {&loc, &en}) {
        const auto out = apply(*h, inside);
        for (std::size_t j = 0; j < g.n(); ++j) REQUIRE(out[j] == cplx(0.0));
        CHECK(expectation(*h, inside) == 0.0);
    }

    const Grid2D g2(Grid1D::from_spacing(-10.0, 30.0, 0.2), Grid1D::from_spacing(-20.0, 20.0, 0.2));
    const AbsorberHandle rad(build_radial(g2, {0.03, 12.0}));
    auto in2 = random_state(g2, rng);
    for (std::size_t j = 0; j < g2.ny(); ++j)
        for (std::size_t i = 0; i < g2.nx(); ++i)
            if (g2.r(i, j) > 12.0) in2[g2.index(i, j)] = 0.0;
    CHECK(expectation(rad, in2) == 0.0);

    const auto other = Grid1D::from_spacing(-30.0, 30.0, 0.2);
    CHECK_THROWS_AS(apply(loc, WaveFunction(other)), GridMismatch);
    CHECK_THROWS_AS(expectation(en, WaveFunction(other)), GridMismatch);
}

TEST_CASE("position-diagonal absorbers are hermitian and PSD") {
    std::mt19937 rng(8);
    const auto g = Grid1D::from_spacing(-30.0, 30.0, 0.1);
    const AbsorberHandle h(build_local(g, {0.05, 20.0}));
    for (int t = 0; t < 10; ++t) {
        const auto a = random_state(g, rng), b = random_state(g, rng);
        const cplx l = inner_product(a, apply(h, b)), r = std::conj(inner_product(b, apply(h, a)));
        CHECK(std::abs(l - r) <= 1e-12 * std::abs(l));
        CHECK(expectation(h, a) >= 0.0);
    }
}

TEST_CASE("energy absorber argument checks") {
    const auto g = Grid1D::from_spacing(-30.0, 30.0, 0.1);
    CHECK_THROWS_AS(build_energy(g, 20.0, {0.1}, 0.0, 1.0, 64), InvalidArgument);
    CHECK_THROWS_AS(build_energy(g, 20.0, {0.1}, 1.0, 0.5, 64), InvalidArgument);
    CHECK_THROWS_AS(build_energy(g, 20.0, {0.1}, 0.1, 1.0, 31), InvalidArgument);
    CHECK_THROWS_AS(build_energy(g, 31.0, {0.1}, 0.1, 1.0, 64), InvalidArgument);
    const auto e = build_energy(g, 20.0, {0.1}, 0.1, 1.0, 64);
    CHECK(e.energies()[0] == doctest::Approx(0.1 + 0.5 * 0.9 / 64));
    CHECK(e.weights()[0] == doctest::Approx(0.1 * std::pow(e.energies()[0], 1.0 / 6.0) * 0.9 / 64));
    const auto st = e.state(3, Channel::left);
    const auto ref = exterior_state(e.energies()[3], Channel::left, g, 20.0);
    for (std::size_t j = 0; j < g.n(); ++j) REQUIRE(st.samples[j] == ref.samples[j]);
    CHECK_THROWS_AS(e.state(64, Channel::left), InvalidArgument);
    CHECK_THROWS_AS(RationalDecay(e, 0.0), InvalidArgument);
}
