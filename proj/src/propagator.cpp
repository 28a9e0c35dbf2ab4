#include "capdet/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "capdet/error.hpp"

namespace capdet {

namespace {

/// Constant-coefficient Cayley factor along one grid line:
/// solves (I - i beta L) x = (I + i beta L) psi with L = tridiag(1, -2, 1)
/// and zero amplitude beyond both ends.
struct CayleyLine {
    std::size_t n = 0;
    cplx ib;  // i beta
    cplx off; // -i beta
    std::vector<cplx> cprime;
    std::vector<cplx> inv_den;

    CayleyLine() = default;
    CayleyLine(std::size_t n_, double beta) : n(n_), ib(0.0, beta), off(0.0, -beta), cprime(n_), inv_den(n_) {
        const cplx diag(1.0, 2.0 * beta);
        inv_den[0] = 1.0 / diag;
        cprime[0] = off * inv_den[0];
        for (std::size_t j = 1; j < n; ++j) {
            inv_den[j] = 1.0 / (diag - off * cprime[j - 1]);
            cprime[j] = off * inv_den[j];
        }
    }

    void solve(cplx* psi, std::size_t stride, cplx* work) const {
        const cplx centre = 1.0 - 2.0 * ib;
        for (std::size_t j = 0; j < n; ++j) {
            cplx nb = 0.0;
            if (j > 0) nb += psi[(j - 1) * stride];
            if (j + 1 < n) nb += psi[(j + 1) * stride];
            work[j] = centre * psi[j * stride] + ib * nb;
        }
        work[0] *= inv_den[0];
        for (std::size_t j = 1; j < n; ++j) work[j] = (work[j] - off * work[j - 1]) * inv_den[j];
        psi[(n - 1) * stride] = work[n - 1];
        for (std::size_t j = n - 1; j-- > 0;) psi[j * stride] = work[j] - cprime[j] * psi[(j + 1) * stride];
    }

    // Solves every column of a row-major nx-by-n block at once (lines run along
    // the slow index), keeping memory access contiguous.
    void solve_columns(cplx* psi, std::size_t nx, cplx* work) const {
        const cplx centre = 1.0 - 2.0 * ib;
        for (std::size_t j = 0; j < n; ++j) {
            const cplx* row = psi + j * nx;
            const cplx* up = j > 0 ? psi + (j - 1) * nx : nullptr;
            const cplx* dn = j + 1 < n ? psi + (j + 1) * nx : nullptr;
            cplx* w = work + j * nx;
            for (std::size_t i = 0; i < nx; ++i) {
                cplx nb = 0.0;
                if (up) nb += up[i];
                if (dn) nb += dn[i];
                w[i] = centre * row[i] + ib * nb;
            }
        }
        for (std::size_t i = 0; i < nx; ++i) work[i] *= inv_den[0];
        for (std::size_t j = 1; j < n; ++j) {
            cplx* w = work + j * nx;
            const cplx* wp = work + (j - 1) * nx;
            const cplx d = inv_den[j];
            for (std::size_t i = 0; i < nx; ++i) w[i] = (w[i] - off * wp[i]) * d;
        }
        std::copy(work + (n - 1) * nx, work + n * nx, psi + (n - 1) * nx);
        for (std::size_t j = n - 1; j-- > 0;) {
            cplx* row = psi + j * nx;
            const cplx* next = psi + (j + 1) * nx;
            const cplx* w = work + j * nx;
            const cplx c = cprime[j];
            for (std::size_t i = 0; i < nx; ++i) row[i] = w[i] - c * next[i];
        }
    }
};

double beta_for(const Units& u, double dt, double dx) { return u.hbar * dt / (4.0 * u.mass * dx * dx); }

} // namespace

struct Propagator::Impl {
    Impl(Grid g, Hamiltonian h, std::optional<AbsorberHandle> a, double dt_)
        : grid(std::move(g)), ham(std::move(h)), absorber(std::move(a)), dt(dt_) {}

    Grid grid;
    Hamiltonian ham;
    std::optional<AbsorberHandle> absorber;
    double dt;
    bool report_rate = true;

    std::vector<double> x_of_node;       // dipole coordinate per node
    std::vector<cplx> static_phase;      // exp(-i V dt / 2 hbar)
    std::vector<cplx> phase;             // per-step potential factor
    std::vector<double> decay_half;      // exp(-gamma dt / 2 hbar), diagonal absorbers
    std::optional<RationalDecay> rational_half;
    CayleyLine line_x, line_y;
    std::vector<cplx> work;

    void apply_decay(WaveFunction& psi) const {
        if (rational_half) {
            rational_half->apply(psi.amps());
        } else if (!decay_half.empty()) {
            auto a = psi.amps();
            for (std::size_t k = 0; k < a.size(); ++k) a[k] *= decay_half[k];
        }
    }

    void apply_phase(WaveFunction& psi, const std::vector<cplx>& ph) const {
        auto a = psi.amps();
        for (std::size_t k = 0; k < a.size(); ++k) a[k] *= ph[k];
    }

    void apply_kinetic_step(WaveFunction& psi) {
        cplx* p = psi.amps().data();
        if (std::holds_alternative<Grid1D>(grid)) {
            line_x.solve(p, 1, work.data());
        } else {
            const auto& g2 = std::get<Grid2D>(grid);
            for (std::size_t j = 0; j < g2.ny(); ++j) line_x.solve(p + g2.index(0, j), 1, work.data());
            line_y.solve_columns(p, g2.nx(), work.data());
        }
    }
};

Propagator::Propagator(Grid grid, Hamiltonian hamiltonian, std::optional<AbsorberHandle> absorber, double dt,
                       double linear_solve_tol)
    : impl_(std::make_unique<Impl>(std::move(grid), std::move(hamiltonian), std::move(absorber), dt)) {
    auto& im = *impl_;
    if (!(dt > 0.0)) throw InvalidArgument("propagator needs dt > 0");
    const std::size_t n = node_count(im.grid);
    const Units& u = im.ham.units;
    if (im.ham.potential.empty()) im.ham.potential.assign(n, 0.0);
    if (im.ham.potential.size() != n) throw InvalidArgument("potential size does not match the grid");
    if (im.absorber && !(im.absorber->grid() == im.grid))
        throw GridMismatch("absorber and propagator live on different grids");

    im.x_of_node.resize(n);
    if (const auto* g = std::get_if<Grid1D>(&im.grid)) {
        for (std::size_t j = 0; j < n; ++j) im.x_of_node[j] = g->x(j);
        im.line_x = CayleyLine(g->n(), beta_for(u, dt, g->dx()));
        im.work.resize(g->n());
    } else {
        const auto& g2 = std::get<Grid2D>(im.grid);
        for (std::size_t j = 0; j < g2.ny(); ++j)
            for (std::size_t i = 0; i < g2.nx(); ++i) im.x_of_node[g2.index(i, j)] = g2.x(i);
        im.line_x = CayleyLine(g2.nx(), beta_for(u, dt, g2.x_axis().dx()));
        im.line_y = CayleyLine(g2.ny(), beta_for(u, dt, g2.y_axis().dx()));
        im.work.resize(g2.size());
    }

    im.static_phase.resize(n);
    for (std::size_t k = 0; k < n; ++k) im.static_phase[k] = std::polar(1.0, -im.ham.potential[k] * dt / (2.0 * u.hbar));
    im.phase = im.static_phase;

    if (im.absorber) {
        if (const auto* e = im.absorber->energy()) {
            im.rational_half.emplace(*e, 0.5 * dt, linear_solve_tol);
        } else {
            const auto diag = im.absorber->diagonal();
            im.decay_half.resize(n);
            for (std::size_t k = 0; k < n; ++k) im.decay_half[k] = std::exp(-diag[k] * dt / (2.0 * u.hbar));
        }
    }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

double Propagator::dt() const { return impl_->dt; }
const Grid& Propagator::grid() const { return impl_->grid; }
const Hamiltonian& Propagator::hamiltonian() const { return impl_->ham; }
const AbsorberHandle* Propagator::absorber() const { return impl_->absorber ? &*impl_->absorber : nullptr; }
void Propagator::set_report_rate(bool on) { impl_->report_rate = on; }

StepReport Propagator::step(WaveFunction& psi, double t) {
    auto& im = *impl_;
    if (!(psi.grid() == im.grid)) throw GridMismatch("wave function and propagator live on different grids");
    StepReport r;
    r.norm2_before = psi.norm2();

    const std::vector<cplx>* ph = &im.static_phase;
    if (im.ham.field) {
        const double e = im.ham.field(t + 0.5 * im.dt);
        const double c = -im.ham.charge * e * im.dt / (2.0 * im.ham.units.hbar);
        for (std::size_t k = 0; k < im.phase.size(); ++k)
            im.phase[k] = im.static_phase[k] * std::polar(1.0, c * im.x_of_node[k]);
        ph = &im.phase;
    }

    im.apply_decay(psi);
    im.apply_phase(psi, *ph);
    im.apply_kinetic_step(psi);
    im.apply_phase(psi, *ph);
    im.apply_decay(psi);

    r.t = t + im.dt;
    r.norm2_after = psi.norm2();
    r.absorbed = r.norm2_before - r.norm2_after;
    if (!std::isfinite(r.norm2_after)) throw NumericalError("propagation produced a non-finite norm");
    if (r.norm2_after > r.norm2_before + 1e-12)
        throw NumericalError("norm increased during a step (" + std::to_string(r.norm2_before) + " -> " +
                             std::to_string(r.norm2_after) + ")");
    if (im.absorber && im.report_rate) r.gamma_expectation = expectation(*im.absorber, psi);
    return r;
}

double Propagator::boundary_amplitude(const WaveFunction& psi) const {
    const auto a = psi.amps();
    double m = 0.0;
    if (const auto* g = std::get_if<Grid1D>(&impl_->grid)) {
        m = std::max(std::abs(a[0]), std::abs(a[g->n() - 1]));
    } else {
        const auto& g2 = std::get<Grid2D>(impl_->grid);
        for (std::size_t i = 0; i < g2.nx(); ++i)
            m = std::max({m, std::abs(a[g2.index(i, 0)]), std::abs(a[g2.index(i, g2.ny() - 1)])});
        for (std::size_t j = 0; j < g2.ny(); ++j)
            m = std::max({m, std::abs(a[g2.index(0, j)]), std::abs(a[g2.index(g2.nx() - 1, j)])});
    }
    return m;
}

StepReport step(WaveFunction& psi, double t, double dt, const Hamiltonian& hamiltonian,
                const std::optional<AbsorberHandle>& absorber) {
    Propagator p(psi.grid(), hamiltonian, absorber, dt);
    return p.step(psi, t);
}

void validate(const PropagatorConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw InvalidArgument("propagation.dt must be positive");
    if (!(cfg.t_end >= cfg.field_end)) throw InvalidArgument("propagation.t_end must cover the field support");
    if (!(cfg.t_end >= cfg.dt)) throw InvalidArgument("propagation.t_end must be at least one step");
    if (!(cfg.post_pulse_time >= 0.0)) throw InvalidArgument("propagation.post_pulse_time must be >= 0");
    if (!(cfg.stability_fraction > 0.0 && cfg.stability_fraction < 1.0))
        throw InvalidArgument("propagation.stability_fraction must lie in (0, 1)");
    if (!(cfg.stability_tol > 0.0)) throw InvalidArgument("propagation.stability_tol must be positive");
}

RunResult run(Propagator& propagator, WaveFunction psi, const PropagatorConfig& cfg,
              std::span<const StepHook> hooks) {
    validate(cfg);
    if (std::abs(cfg.dt - propagator.dt()) > 1e-15 * cfg.dt)
        throw InvalidArgument("run: config dt differs from the propagator's dt");
    const double dt = cfg.dt;
    const double hbar = propagator.hamiltonian().units.hbar;
    const double n0 = psi.norm2();

    RunResult res{psi, AbsorptionLedger(n0), 0, 0.0, "t_end"};
    const auto* absorber = propagator.absorber();

    StepReport r0{0.0, n0, n0, 0.0, absorber ? expectation(*absorber, psi) : 0.0};
    for (const auto& h : hooks) h(HookArgs{psi, 0.0, {0.0, 0.5 * dt}, r0});
    res.boundary_amplitude_max = propagator.boundary_amplitude(psi);

    const auto max_steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt - 1e-9));
    const double stable_from = cfg.field_end + cfg.post_pulse_time;
    auto cum_before = [&](std::size_t k) { return k == 0 ? 0.0 : res.ledger.cumulative_at(k - 1); };

    for (std::size_t n = 1; n <= max_steps; ++n) {
        const StepReport rep = propagator.step(psi, static_cast<double>(n - 1) * dt);
        const double t = static_cast<double>(n) * dt;
        res.ledger.record(t, rep.absorbed, rep.norm2_after);
        res.rate_integral += 2.0 / hbar * dt * rep.gamma_expectation;
        const double bnd = propagator.boundary_amplitude(psi);
        res.boundary_amplitude_max = std::max(res.boundary_amplitude_max, bnd);
        if (bnd > cfg.boundary_warn) ++res.boundary_warnings;

        const auto k0 = static_cast<std::size_t>(std::floor((1.0 - cfg.stability_fraction) * double(n)));
        const double change = res.ledger.cumulative() - cum_before(k0);
        res.drift_per_time = change / (double(n - k0) * dt);

        bool stop = n == max_steps;
        if (!stop && cfg.stop_when_stable && t >= stable_from && n >= 10 && change < cfg.stability_tol) {
            stop = true;
            res.termination = "ledger-stable";
        }
        const AbsorptionWindow w{0.5 * dt, stop ? 0.0 : 0.5 * dt};
        for (const auto& h : hooks) h(HookArgs{psi, t, w, rep});
        res.steps = n;
        res.t_final = t;
        if (stop) break;
    }
    res.psi = std::move(psi);
    return res;
}

} // namespace capdet
