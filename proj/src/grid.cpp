#include "capdet/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "capdet/error.hpp"
#include "capdet/fourier.hpp"

namespace capdet {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n)
    : x_min_(x_min), x_max_(x_max), n_(n), dx_((x_max - x_min) / static_cast<double>(n - 1)),
      centre_(0.5 * (x_min + x_max)) {}

Grid1D Grid1D::from_count(double x_min, double x_max, std::size_t n) {
    if (n < min_nodes)
        throw InvalidArgument("Grid1D needs at least " + std::to_string(min_nodes) + " nodes");
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw InvalidArgument("Grid1D needs finite x_min < x_max");
    return Grid1D(x_min, x_max, n);
}

Grid1D Grid1D::from_spacing(double x_min, double x_max, double dx) {
    if (!(dx > 0.0)) throw InvalidArgument("Grid1D spacing must be positive");
    const double cells = (x_max - x_min) / dx;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
        throw InvalidArgument("Grid1D spacing does not divide the interval");
    return from_count(x_min, x_max, static_cast<std::size_t>(rounded) + 1);
}

double Grid2D::r(std::size_t i, std::size_t j) const { return std::hypot(x(i), y(j)); }

double Grid2D::theta(std::size_t i, std::size_t j) const { return std::atan2(y(j), x(i)); }

std::size_t node_count(const Grid& grid) {
    return std::visit(
        [](const auto& g) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, Grid1D>)
                return g.n();
            else
                return g.size();
        },
        grid);
}

double cell_volume(const Grid& grid) {
    return std::visit(
        [](const auto& g) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, Grid1D>)
                return g.dx();
            else
                return g.cell_area();
        },
        grid);
}

WaveFunction::WaveFunction(Grid grid) : grid_(std::move(grid)), amps_(node_count(grid_)) {}

WaveFunction::WaveFunction(Grid grid, std::vector<cplx> amps)
    : grid_(std::move(grid)), amps_(std::move(amps)) {
    if (amps_.size() != node_count(grid_))
        throw InvalidArgument("WaveFunction: amplitude count does not match the grid");
}

const Grid1D& WaveFunction::grid_1d() const {
    if (const auto* g = std::get_if<Grid1D>(&grid_)) return *g;
    throw InvalidArgument("expected a 1D wave function");
}

const Grid2D& WaveFunction::grid_2d() const {
    if (const auto* g = std::get_if<Grid2D>(&grid_)) return *g;
    throw InvalidArgument("expected a 2D wave function");
}

double WaveFunction::norm2() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s * cell_volume();
}

void WaveFunction::normalize() {
    const double n2 = norm2();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("cannot normalise a zero wave function");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& a : amps_) a *= s;
}

cplx inner_product(const WaveFunction& psi, const WaveFunction& phi) {
    if (!(psi.grid() == phi.grid())) throw GridMismatch();
    cplx s = 0.0;
    const auto a = psi.amps();
    const auto b = phi.amps();
    for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
    return s * psi.cell_volume();
}

namespace {

void kinetic_1d(std::span<const cplx> in, std::span<cplx> out, std::size_t n, std::size_t stride,
                double coeff) {
    // out += coeff * (2 psi_j - psi_{j-1} - psi_{j+1}) along one line
    for (std::size_t j = 0; j < n; ++j) {
        const cplx c = in[j * stride];
        const cplx l = j > 0 ? in[(j - 1) * stride] : cplx{};
        const cplx r = j + 1 < n ? in[(j + 1) * stride] : cplx{};
        out[j * stride] += coeff * (2.0 * c - l - r);
    }
}

} // namespace

WaveFunction apply_kinetic(const WaveFunction& psi, const Units& units) {
    WaveFunction out(psi.grid());
    const double h2m = units.hbar * units.hbar / (2.0 * units.mass);
    if (psi.is_1d()) {
        const auto& g = psi.grid_1d();
        kinetic_1d(psi.amps(), out.amps(), g.n(), 1, h2m / (g.dx() * g.dx()));
    } else {
        const auto& g = psi.grid_2d();
        const double cx = h2m / (g.x_axis().dx() * g.x_axis().dx());
        const double cy = h2m / (g.y_axis().dx() * g.y_axis().dx());
        for (std::size_t j = 0; j < g.ny(); ++j)
            kinetic_1d(psi.amps().subspan(g.index(0, j)), out.amps().subspan(g.index(0, j)), g.nx(), 1, cx);
        for (std::size_t i = 0; i < g.nx(); ++i)
            kinetic_1d(psi.amps().subspan(i), out.amps().subspan(i), g.ny(), g.nx(), cy);
    }
    return out;
}

MomentumGrid MomentumGrid::dual_of(const Grid1D& grid, const Units& units) {
    MomentumGrid m;
    m.n = grid.n();
    m.dp = 2.0 * std::numbers::pi * units.hbar / (static_cast<double>(grid.n()) * grid.dx());
    m.j_min = -static_cast<long>(grid.n() / 2);
    return m;
}

double MomentumGrid::p_max() const {
    return std::max(std::abs(p(0)), std::abs(p(n - 1)));
}

MomentumFunction to_momentum(const WaveFunction& psi, const Units& units) {
    const auto& g = psi.grid_1d();
    Dft1D dft(g, units);
    MomentumFunction f{dft.momentum_grid(), std::vector<cplx>(g.n())};
    dft.forward(psi.amps(), f.values);
    return f;
}

} // namespace capdet
