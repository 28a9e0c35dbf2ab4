#include "capdet/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

#include "capdet/error.hpp"

namespace capdet {

namespace {
// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

struct Dft1D::Impl {
    MomentumGrid pgrid;
    std::size_t n = 0;
    fftw_complex* buffer = nullptr;
    fftw_plan plan = nullptr;
    std::vector<std::size_t> fft_index; // ascending-p slot -> FFT bin
    std::vector<cplx> phase;            // dx/sqrt(2 pi hbar) * exp(-i p x_0 / hbar)

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (plan) fftw_destroy_plan(plan);
        if (buffer) fftw_free(buffer);
    }
};

Dft1D::Dft1D(const Grid1D& grid, const Units& units) : impl_(std::make_unique<Impl>()) {
    auto& im = *impl_;
    im.n = grid.n();
    im.pgrid = MomentumGrid::dual_of(grid, units);
    {
        std::lock_guard lock(planner_mutex());
        im.buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * im.n));
        if (!im.buffer) throw NumericalError("fftw_malloc failed");
        im.plan = fftw_plan_dft_1d(static_cast<int>(im.n), im.buffer, im.buffer, FFTW_FORWARD,
                                   FFTW_ESTIMATE);
        if (!im.plan) throw NumericalError("FFTW could not create a plan");
    }
    const double norm = grid.dx() / std::sqrt(2.0 * std::numbers::pi * units.hbar);
    const double x0 = grid.x(0);
    const long n = static_cast<long>(im.n);
    im.fft_index.resize(im.n);
    im.phase.resize(im.n);
    for (std::size_t k = 0; k < im.n; ++k) {
        const long j = im.pgrid.j_min + static_cast<long>(k);
        im.fft_index[k] = static_cast<std::size_t>(((j % n) + n) % n);
        im.phase[k] = std::polar(norm, -im.pgrid.p(k) * x0 / units.hbar);
    }
}

Dft1D::~Dft1D() = default;
Dft1D::Dft1D(Dft1D&&) noexcept = default;
Dft1D& Dft1D::operator=(Dft1D&&) noexcept = default;

const MomentumGrid& Dft1D::momentum_grid() const { return impl_->pgrid; }

void Dft1D::forward(std::span<const cplx> in, std::span<cplx> out) {
    auto& im = *impl_;
    if (in.size() != im.n || out.size() != im.n)
        throw InvalidArgument("Dft1D::forward: size does not match the grid");
    for (std::size_t k = 0; k < im.n; ++k) {
        im.buffer[k][0] = in[k].real();
        im.buffer[k][1] = in[k].imag();
    }
    fftw_execute(im.plan);
    for (std::size_t k = 0; k < im.n; ++k) {
        const auto& b = im.buffer[im.fft_index[k]];
        out[k] = im.phase[k] * cplx(b[0], b[1]);
    }
}

} // namespace capdet
