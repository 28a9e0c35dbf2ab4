#include "capdet/eigensolve.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "capdet/error.hpp"

namespace capdet {

namespace {

struct Tridiagonal {
    std::vector<double> diag;
    double off = 0.0;
};

Tridiagonal hamiltonian(const Grid1D& grid, const std::vector<double>& potential, const Units& units) {
    if (potential.size() != grid.n()) throw InvalidArgument("potential size does not match the grid");
    const double h2m = units.hbar * units.hbar / (2.0 * units.mass);
    const double c = h2m / (grid.dx() * grid.dx());
    Tridiagonal t;
    t.diag.resize(grid.n());
    for (std::size_t j = 0; j < grid.n(); ++j) t.diag[j] = 2.0 * c + potential[j];
    t.off = -c;
    return t;
}

std::vector<double> multiply(const Tridiagonal& h, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = h.diag[j] * v[j];
        if (j > 0) s += h.off * v[j - 1];
        if (j + 1 < n) s += h.off * v[j + 1];
        out[j] = s;
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

struct Attempt {
    std::vector<double> v;
    double energy = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
};

Attempt inverse_iteration(const Tridiagonal& h, double shift, double dx, const EigenOptions& opts) {
    const auto n = static_cast<lapack_int>(h.diag.size());
    std::vector<double> dl(h.diag.size() - 1, h.off), du(h.diag.size() - 1, h.off), du2(h.diag.size()), d(h.diag);
    for (auto& x : d) x -= shift;
    std::vector<lapack_int> ipiv(h.diag.size());
    if (LAPACKE_dgttrf(n, dl.data(), d.data(), du.data(), du2.data(), ipiv.data()) != 0)
        throw NumericalError("ground_state: shifted Hamiltonian is singular");

    Attempt a;
    a.v.assign(h.diag.size(), 1.0); // node-free start vector overlaps the ground state
    for (a.iterations = 1; a.iterations <= opts.max_iterations; ++a.iterations) {
        if (LAPACKE_dgttrs(LAPACK_COL_MAJOR, 'N', n, 1, dl.data(), d.data(), du.data(), du2.data(),
                           ipiv.data(), a.v.data(), n) != 0)
            throw NumericalError("ground_state: tridiagonal solve failed");
        const double nv = std::sqrt(dot(a.v, a.v) * dx);
        for (auto& x : a.v) x /= nv;
        const auto hv = multiply(h, a.v);
        a.energy = dot(a.v, hv) * dx;
        double r2 = 0.0;
        for (std::size_t j = 0; j < hv.size(); ++j) {
            const double r = hv[j] - a.energy * a.v[j];
            r2 += r * r;
        }
        a.residual = std::sqrt(r2 * dx);
        if (a.residual <= opts.tolerance) return a;
    }
    a.iterations = opts.max_iterations;
    return a;
}

} // namespace

std::size_t count_eigenvalues_below(const Grid1D& grid, const std::vector<double>& potential,
                                    double energy, const Units& units) {
    const auto h = hamiltonian(grid, potential, units);
    std::size_t count = 0;
    double q = 1.0;
    const double off2 = h.off * h.off;
    for (std::size_t j = 0; j < h.diag.size(); ++j) {
        q = (h.diag[j] - energy) - (j > 0 ? off2 / q : 0.0);
        if (q == 0.0) q = -1e-300;
        if (q < 0.0) ++count;
    }
    return count;
}

EigenResult ground_state(const Grid1D& grid, const std::vector<double>& potential, const Units& units,
                         const EigenOptions& opts) {
    const auto h = hamiltonian(grid, potential, units);
    const double vmin = *std::min_element(potential.begin(), potential.end());
    // Preferred shift sits just above the potential minimum; if that lands
    // past the ground state the Sturm count rejects it and a shift below the
    // whole spectrum (H >= min V) is used instead.
    const double shifts[] = {vmin + 0.1 * std::abs(vmin), vmin - 0.1 * std::abs(vmin) - 1e-3};
    Attempt best;
    bool have = false;
    for (double shift : shifts) {
        auto a = inverse_iteration(h, shift, grid.dx(), opts);
        const double guard = std::max(1e-12, 1e-9 * std::abs(a.energy));
        const bool lowest = count_eigenvalues_below(grid, potential, a.energy + guard, units) == 1;
        if (lowest && a.residual <= opts.tolerance) {
            best = std::move(a);
            have = true;
            break;
        }
        if (!have || a.residual < best.residual) best = std::move(a);
    }
    if (!have)
        throw NumericalError("ground_state did not converge: residual " + std::to_string(best.residual) +
                             " after " + std::to_string(best.iterations) + " iterations");

    const auto peak = std::max_element(best.v.begin(), best.v.end(),
                                       [](double a, double b) { return std::abs(a) < std::abs(b); });
    const double sign = *peak < 0.0 ? -1.0 : 1.0;
    std::vector<cplx> amps(best.v.size());
    for (std::size_t j = 0; j < amps.size(); ++j) amps[j] = sign * best.v[j];
    return EigenResult{best.energy, WaveFunction(grid, std::move(amps)), best.residual, best.iterations};
}

} // namespace capdet
