#include "capdet/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capdet/error.hpp"

namespace capdet {

double MomentumSpectrum::integral() const {
    double s = 0.0;
    for (double v : dPdp) s += v;
    return s * grid.dp;
}

double EnergySpectrum::integral() const {
    double s = 0.0;
    for (std::size_t j = 0; j < dPde.size(); ++j) s += dPde[j] * weights[j];
    return s;
}

double AngularSpectrum::integral() const {
    double s = 0.0;
    for (double v : dPdtheta) s += v;
    return s * dtheta;
}

// ---------------------------------------------------------------------------

CoherentMomentumAccumulator::CoherentMomentumAccumulator(const LocalAbsorber& absorber, const Units& units)
    : absorber_(absorber), units_(units), dft_(absorber.grid, units), acc_(absorber.grid.n()),
      phi_(absorber.grid.n()), gphi_(absorber.grid.n()), buf_(absorber.grid.n()), rate_(absorber.grid.n()) {}

void CoherentMomentumAccumulator::add(const WaveFunction& psi, double span, const std::vector<double>& rate) {
    if (result_) throw Error("coherent accumulator used after finalize");
    if (!(psi.grid() == Grid(absorber_.grid))) throw GridMismatch("coherent accumulator: grid mismatch");
    const auto a = psi.amps();
    bool any = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        buf_[k] = rate[k] * a[k];
        any = any || rate[k] != 0.0;
    }
    if (!any || span == 0.0) return;
    dft_.forward(a, phi_);
    dft_.forward(buf_, gphi_);
    for (std::size_t k = 0; k < acc_.size(); ++k) acc_[k] += span * std::conj(phi_[k]) * gphi_[k];
}

void CoherentMomentumAccumulator::accumulate(const WaveFunction& psi, double dt) { add(psi, dt, absorber_.diag); }

void CoherentMomentumAccumulator::accumulate(const WaveFunction& psi, const AbsorptionWindow& window) {
    for (std::size_t k = 0; k < rate_.size(); ++k) rate_[k] = window.effective_rate(absorber_.diag[k], units_.hbar);
    add(psi, window.span(), rate_);
}

const MomentumSpectrum& CoherentMomentumAccumulator::finalize() {
    if (!result_) {
        MomentumSpectrum s{dft_.momentum_grid(), std::vector<double>(acc_.size())};
        for (std::size_t k = 0; k < acc_.size(); ++k) s.dPdp[k] = 2.0 / units_.hbar * acc_[k].real();
        result_ = std::move(s);
    }
    return *result_;
}

StepHook CoherentMomentumAccumulator::hook() {
    return [this](const HookArgs& a) { accumulate(a.psi, a.window); };
}

// ---------------------------------------------------------------------------

IncoherentEnergyAccumulator::IncoherentEnergyAccumulator(const EnergyAbsorber& absorber)
    : absorber_(absorber), dPde_(absorber.n_eps(), 0.0) {}

void IncoherentEnergyAccumulator::accumulate(const WaveFunction& psi, double dt) {
    const double pre = 2.0 / absorber_.units().hbar * dt;
    const EnergyCapProfile& prof = absorber_.profile();
    const auto eps = absorber_.energies();
    for (std::size_t b = 0; b < absorber_.channels().size(); ++b) {
        const auto c = absorber_.project(psi, b);
        for (std::size_t j = 0; j < c.size(); ++j) dPde_[j] += pre * mu(eps[j], prof) * std::norm(c[j]);
    }
}

EnergySpectrum IncoherentEnergyAccumulator::spectrum() const {
    const auto e = absorber_.energies();
    EnergySpectrum s;
    s.eps.assign(e.begin(), e.end());
    s.weights.assign(e.size(), absorber_.d_eps());
    s.dPde = dPde_;
    return s;
}

StepHook IncoherentEnergyAccumulator::hook() {
    return [this](const HookArgs& a) { accumulate(a.psi, a.window); };
}

// ---------------------------------------------------------------------------

AngularAccumulator::AngularAccumulator(const RadialAbsorber& absorber, const Units& units, std::size_t n_bins)
    : grid_(absorber.grid), units_(units), n_bins_(n_bins), bins_(n_bins, 0.0) {
    if (n_bins < 2) throw InvalidArgument("angular accumulator needs at least 2 bins");
    dtheta_ = 2.0 * std::numbers::pi / static_cast<double>(n_bins);
    for (std::size_t j = 0; j < grid_.ny(); ++j)
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            const std::size_t k = grid_.index(i, j);
            const double gamma = absorber.diag[k];
            if (!(gamma > 0.0)) continue;
            // A node exactly on a bin edge (the theta = pi ray of every grid
            // with a y = 0 row) is shared by both neighbours, which keeps
            // mirror-symmetric states exactly symmetric.
            const double u = (grid_.theta(i, j) + std::numbers::pi) / dtheta_;
            const double e = std::round(u);
            if (std::abs(u - e) <= 1e-9 * std::max(1.0, u)) {
                const auto edge = static_cast<std::size_t>(e) % n_bins_;
                nodes_.push_back({k, (edge + n_bins_ - 1) % n_bins_, 0.5 * gamma});
                nodes_.push_back({k, edge, 0.5 * gamma});
            } else {
                nodes_.push_back({k, bin_of(grid_.theta(i, j)), gamma});
            }
        }
}

std::size_t AngularAccumulator::bin_of(double theta) const {
    // Bins are (-pi + b dtheta, -pi + (b+1) dtheta].
    const double u = (theta + std::numbers::pi) / dtheta_;
    const double c = std::ceil(u) - 1.0;
    if (c < 0.0) return 0;
    return std::min(static_cast<std::size_t>(c), n_bins_ - 1);
}

void AngularAccumulator::accumulate(const WaveFunction& psi, double dt) {
    if (!(psi.grid() == Grid(grid_))) throw GridMismatch("angular accumulator: grid mismatch");
    const double pre = 2.0 / units_.hbar * dt * grid_.cell_area() / dtheta_;
    const auto a = psi.amps();
    for (const auto& n : nodes_) bins_[n.bin] += pre * n.gamma * std::norm(a[n.index]);
}

void AngularAccumulator::accumulate(const WaveFunction& psi, const AbsorptionWindow& window) {
    if (!(psi.grid() == Grid(grid_))) throw GridMismatch("angular accumulator: grid mismatch");
    const double pre = 2.0 / units_.hbar * window.span() * grid_.cell_area() / dtheta_;
    if (pre == 0.0) return;
    const auto a = psi.amps();
    for (const auto& n : nodes_)
        bins_[n.bin] += pre * window.effective_rate(n.gamma, units_.hbar) * std::norm(a[n.index]);
}

AngularSpectrum AngularAccumulator::spectrum() const {
    AngularSpectrum s;
    s.dtheta = dtheta_;
    s.theta.resize(n_bins_);
    for (std::size_t b = 0; b < n_bins_; ++b) s.theta[b] = -std::numbers::pi + (static_cast<double>(b) + 0.5) * dtheta_;
    s.dPdtheta = bins_;
    return s;
}

StepHook AngularAccumulator::hook() {
    return [this](const HookArgs& a) { accumulate(a.psi, a.window); };
}

// ---------------------------------------------------------------------------

namespace {

// Value of dP/dp at the node with integer index j (p = j dp), zero off-grid.
double at_index(const MomentumSpectrum& s, long j) {
    const long k = j - s.grid.j_min;
    if (k < 0 || k >= static_cast<long>(s.grid.n)) return 0.0;
    return s.dPdp[static_cast<std::size_t>(k)];
}

double at_momentum(const MomentumSpectrum& s, double p) {
    const double u = p / s.grid.dp;
    const double f = std::floor(u);
    const long j = static_cast<long>(f);
    const double w = u - f;
    return (1.0 - w) * at_index(s, j) + w * at_index(s, j + 1);
}

} // namespace

EnergySpectrum momentum_to_energy(const MomentumSpectrum& spectrum, const Units& units) {
    const double m = units.mass;
    const double dp = spectrum.grid.dp;
    const long j_max = spectrum.grid.j_min + static_cast<long>(spectrum.grid.n) - 1;
    EnergySpectrum s;
    for (long j = 1; j <= j_max; ++j) {
        const double p = static_cast<double>(j) * dp;
        s.eps.push_back(p * p / (2.0 * m));
        s.weights.push_back(p * dp / m);
        s.dPde.push_back(m / p * (at_index(spectrum, j) + at_index(spectrum, -j)));
    }
    return s;
}

EnergySpectrum momentum_to_energy(const MomentumSpectrum& spectrum, const std::vector<double>& eps,
                                  const Units& units) {
    const double m = units.mass;
    const double p_first = spectrum.grid.dp;
    EnergySpectrum s;
    for (double e : eps) {
        if (!(e > 0.0) || std::sqrt(2.0 * m * e) < p_first) {
            ++s.omitted;
            continue;
        }
        const double p = std::sqrt(2.0 * m * e);
        s.eps.push_back(e);
        s.dPde.push_back(m / p * (at_momentum(spectrum, p) + at_momentum(spectrum, -p)));
    }
    const std::size_t n = s.eps.size();
    s.weights.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = j > 0 ? 0.5 * (s.eps[j] + s.eps[j - 1]) : (n > 1 ? s.eps[0] - 0.5 * (s.eps[1] - s.eps[0]) : s.eps[0]);
        const double hi = j + 1 < n ? 0.5 * (s.eps[j] + s.eps[j + 1]) : (n > 1 ? s.eps[j] + 0.5 * (s.eps[j] - s.eps[j - 1]) : s.eps[j]);
        s.weights[j] = hi - lo;
    }
    return s;
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t width) {
    if (width % 2 == 0) throw InvalidArgument("smoothing width must be odd");
    const std::size_t h = width / 2;
    const std::size_t n = values.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t lo = j >= h ? j - h : 0;
        const std::size_t hi = std::min(n - 1, j + h);
        double s = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) s += values[k];
        out[j] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

double fringe_visibility(const std::vector<double>& x, const std::vector<double>& values, double lo, double hi,
                         std::size_t width) {
    if (x.size() != values.size()) throw InvalidArgument("fringe_visibility: size mismatch");
    const auto sm = smooth(values, width);
    double mx = -HUGE_VAL, mn = HUGE_VAL;
    std::size_t count = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] < lo || x[j] > hi) continue;
        mx = std::max(mx, sm[j]);
        mn = std::min(mn, sm[j]);
        ++count;
    }
    if (count < 2 || !(mx + mn > 0.0)) return 0.0;
    return (mx - mn) / (mx + mn);
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double xq) {
    if (x.empty() || x.size() != y.size()) throw InvalidArgument("interpolate: bad table");
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    const std::size_t k = static_cast<std::size_t>(it - x.begin());
    const double w = (xq - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - w) * y[k - 1] + w * y[k];
}

} // namespace capdet
