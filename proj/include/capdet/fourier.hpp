#pragma once

#include <memory>
#include <span>

#include "capdet/grid.hpp"

namespace capdet {

/// Reusable position -> momentum transform for one Grid1D, backed by an FFTW
/// plan. Output is ordered by ascending momentum on MomentumGrid::dual_of.
/// Not copyable; one instance per thread.
class Dft1D {
public:
    Dft1D(const Grid1D& grid, const Units& units = {});
    ~Dft1D();
    Dft1D(Dft1D&&) noexcept;
    Dft1D& operator=(Dft1D&&) noexcept;
    Dft1D(const Dft1D&) = delete;
    Dft1D& operator=(const Dft1D&) = delete;

    const MomentumGrid& momentum_grid() const;

    /// `in` has grid.n() position samples, `out` receives n momentum samples.
    void forward(std::span<const cplx> in, std::span<cplx> out);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace capdet
