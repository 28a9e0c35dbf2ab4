#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capdet/absorption.hpp"
#include "capdet/grid.hpp"
#include "capdet/operators.hpp"

namespace capdet {

/// Hermitian part of the effective Hamiltonian: kinetic stencil, a static
/// potential and an optional dipole coupling q E(t) x.
struct Hamiltonian {
    Units units;
    std::vector<double> potential;       // per node; empty means V = 0
    std::function<double(double)> field; // E(t); empty means no field
    double charge = -1.0;
};

struct StepReport {
    double t = 0.0; // time at the end of the step
    double norm2_before = 0.0;
    double norm2_after = 0.0;
    double absorbed = 0.0;
    double gamma_expectation = 0.0; // <psi|Gamma|psi> of the end-of-step state
};

/// Strang-split propagator for H - i Gamma.
///
/// One step is D(dt/2) P(dt/2) K(dt) P(dt/2) D(dt/2): P is the exact phase of
/// the potential plus dipole term evaluated at the step midpoint, K the Cayley
/// (Crank-Nicolson) kinetic factor, solved as a tridiagonal system in 1D or as
/// an x-sweep followed by a y-sweep in 2D, and D the CAP decay: the exact
/// exponential for position-diagonal absorbers and the Crank-Nicolson rational
/// factor for the energy absorber.
class Propagator {
public:
    Propagator(Grid grid, Hamiltonian hamiltonian, std::optional<AbsorberHandle> absorber, double dt,
               double linear_solve_tol = 1e-10);
    ~Propagator();
    Propagator(Propagator&&) noexcept;
    Propagator& operator=(Propagator&&) noexcept;

    /// Advances psi from t to t + dt in place. Throws NumericalError if the
    /// norm grows by more than 1e-12.
    StepReport step(WaveFunction& psi, double t);

    double dt() const;
    const Grid& grid() const;
    const Hamiltonian& hamiltonian() const;
    const AbsorberHandle* absorber() const;

    /// Skip <Gamma> in StepReport (it costs a full projection for the energy CAP).
    void set_report_rate(bool on);

    /// Largest |psi| on the outermost nodes.
    double boundary_amplitude(const WaveFunction& psi) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience single step that builds a throwaway propagator.
StepReport step(WaveFunction& psi, double t, double dt, const Hamiltonian& hamiltonian,
                const std::optional<AbsorberHandle>& absorber);

struct PropagatorConfig {
    double dt = 0.02;
    /// Hard stop.
    double t_end = 0.0;
    /// Minimum field-free propagation after the field support ends before the
    /// ledger-stability stop may trigger.
    double post_pulse_time = 0.0;
    double field_end = 0.0;
    double linear_solve_tol = 1e-10;
    /// Stop once the cumulative absorbed probability changes by less than
    /// `stability_tol` over the last `stability_fraction` of the steps.
    bool stop_when_stable = true;
    double stability_tol = 1e-4;
    double stability_fraction = 0.1;
    /// Boundary amplitude above which a warning is recorded.
    double boundary_warn = 1e-8;
};

void validate(const PropagatorConfig& cfg);

struct HookArgs {
    const WaveFunction& psi;
    double t;
    AbsorptionWindow window;
    const StepReport& report;
};

using StepHook = std::function<void(const HookArgs&)>;

struct RunResult {
    WaveFunction psi;
    AbsorptionLedger ledger;
    std::size_t steps = 0;
    double t_final = 0.0;
    std::string termination;         // "ledger-stable" or "t_end"
    double drift_per_time = 0.0;     // absorbed per unit time over the stability window
    double rate_integral = 0.0;      // (2/hbar) sum dt <Gamma>
    double boundary_amplitude_max = 0.0;
    std::size_t boundary_warnings = 0; // steps whose boundary amplitude exceeded the threshold
};

/// Runs from t = 0. Hooks see the initial state (window {0, dt/2}) and then
/// every end-of-step state (window {dt/2, dt/2}, or {dt/2, 0} for the last).
RunResult run(Propagator& propagator, WaveFunction psi, const PropagatorConfig& cfg,
              std::span<const StepHook> hooks = {});

} // namespace capdet
