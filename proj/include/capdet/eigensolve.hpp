#pragma once

#include <cstddef>
#include <vector>

#include "capdet/grid.hpp"

namespace capdet {

struct EigenResult {
    double energy = 0.0;
    WaveFunction state;
    double residual = 0.0; // ||H psi - E psi|| in the grid L2 norm
    std::size_t iterations = 0;
};

struct EigenOptions {
    double tolerance = 1e-8;
    std::size_t max_iterations = 500;
};

/// Lowest eigenpair of the field-free 1D Hamiltonian -(hbar^2/2m) d^2/dx^2 + V
/// (3-point stencil, hard walls) by shifted inverse iteration. The returned
/// state is real, normalised and positive at its maximum.
EigenResult ground_state(const Grid1D& grid, const std::vector<double>& potential,
                         const Units& units = {}, const EigenOptions& opts = {});

/// Number of eigenvalues of the discrete Hamiltonian below `energy`
/// (Sturm sequence count).
std::size_t count_eigenvalues_below(const Grid1D& grid, const std::vector<double>& potential,
                                    double energy, const Units& units = {});

} // namespace capdet
