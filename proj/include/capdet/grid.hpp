#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace capdet {

using cplx = std::complex<double>;

/// Physical unit scale. Everything in the library is expressed in units of
/// hbar and the particle mass; the defaults give the usual hbar = m = 1.
struct Units {
    double hbar = 1.0;
    double mass = 1.0;
};

/// Uniform 1D grid with nodes at x_min + j*dx, j = 0..n-1 (both ends included).
class Grid1D {
public:
    static constexpr std::size_t min_nodes = 8;

    static Grid1D from_count(double x_min, double x_max, std::size_t n);
    /// dx must divide (x_max - x_min) to within 1e-9 relative.
    static Grid1D from_spacing(double x_min, double x_max, double dx);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t n() const { return n_; }
    double dx() const { return dx_; }

    // Evaluated about the centre so that grids symmetric about 0 give
    // exactly antisymmetric coordinates.
    double x(std::size_t j) const {
        return centre_ + (static_cast<double>(j) - 0.5 * static_cast<double>(n_ - 1)) * dx_;
    }

    bool operator==(const Grid1D&) const = default;

private:
    Grid1D(double x_min, double x_max, std::size_t n);

    double x_min_ = 0.0;
    double x_max_ = 0.0;
    std::size_t n_ = 0;
    double dx_ = 0.0;
    double centre_ = 0.0;
};

/// Tensor-product grid. Storage is row-major with x fastest: index = j*nx + i.
class Grid2D {
public:
    Grid2D(Grid1D x_axis, Grid1D y_axis) : x_axis_(x_axis), y_axis_(y_axis) {}

    const Grid1D& x_axis() const { return x_axis_; }
    const Grid1D& y_axis() const { return y_axis_; }
    std::size_t nx() const { return x_axis_.n(); }
    std::size_t ny() const { return y_axis_.n(); }
    std::size_t size() const { return nx() * ny(); }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx() + i; }
    double x(std::size_t i) const { return x_axis_.x(i); }
    double y(std::size_t j) const { return y_axis_.x(j); }
    double r(std::size_t i, std::size_t j) const;
    double theta(std::size_t i, std::size_t j) const;
    double cell_area() const { return x_axis_.dx() * y_axis_.dx(); }

    bool operator==(const Grid2D&) const = default;

private:
    Grid1D x_axis_;
    Grid1D y_axis_;
};

using Grid = std::variant<Grid1D, Grid2D>;

std::size_t node_count(const Grid& grid);
double cell_volume(const Grid& grid);

/// Complex amplitudes on a grid.
class WaveFunction {
public:
    explicit WaveFunction(Grid grid);
    WaveFunction(Grid grid, std::vector<cplx> amps);

    template <class F>
    static WaveFunction sample(const Grid1D& grid, F&& f) {
        std::vector<cplx> a(grid.n());
        for (std::size_t j = 0; j < grid.n(); ++j) a[j] = f(grid.x(j));
        return WaveFunction(grid, std::move(a));
    }

    template <class F>
    static WaveFunction sample(const Grid2D& grid, F&& f) {
        std::vector<cplx> a(grid.size());
        for (std::size_t j = 0; j < grid.ny(); ++j)
            for (std::size_t i = 0; i < grid.nx(); ++i)
                a[grid.index(i, j)] = f(grid.x(i), grid.y(j));
        return WaveFunction(grid, std::move(a));
    }

    const Grid& grid() const { return grid_; }
    bool is_1d() const { return std::holds_alternative<Grid1D>(grid_); }
    const Grid1D& grid_1d() const;
    const Grid2D& grid_2d() const;

    std::size_t size() const { return amps_.size(); }
    std::span<cplx> amps() { return amps_; }
    std::span<const cplx> amps() const { return amps_; }
    cplx& operator[](std::size_t k) { return amps_[k]; }
    const cplx& operator[](std::size_t k) const { return amps_[k]; }

    double cell_volume() const { return capdet::cell_volume(grid_); }
    double norm2() const;
    /// Scales to unit norm; throws if the norm is zero.
    void normalize();

private:
    Grid grid_;
    std::vector<cplx> amps_;
};

/// sum conj(psi)*phi * cell volume. Throws GridMismatch.
cplx inner_product(const WaveFunction& psi, const WaveFunction& phi);

/// Second-order finite-difference -(hbar^2/2m) Laplacian with zero amplitude
/// outside the grid (3-point in 1D, 5-point in 2D).
WaveFunction apply_kinetic(const WaveFunction& psi, const Units& units = {});

/// DFT dual of a Grid1D: p_k = (j_min + k) dp, k = 0..n-1, dp = 2 pi hbar/(n dx).
struct MomentumGrid {
    std::size_t n = 0;
    double dp = 0.0;
    long j_min = 0;

    static MomentumGrid dual_of(const Grid1D& grid, const Units& units = {});
    double p(std::size_t k) const { return static_cast<double>(j_min + static_cast<long>(k)) * dp; }
    double p_max() const;
    bool operator==(const MomentumGrid&) const = default;
};

struct MomentumFunction {
    MomentumGrid grid;
    std::vector<cplx> values;
};

/// Phi(p) = (2 pi hbar)^{-1/2} dx sum_n exp(-i p x_n / hbar) psi(x_n).
MomentumFunction to_momentum(const WaveFunction& psi, const Units& units = {});

} // namespace capdet
