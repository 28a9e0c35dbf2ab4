#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "capdet/absorption.hpp"
#include "capdet/fourier.hpp"
#include "capdet/grid.hpp"
#include "capdet/operators.hpp"
#include "capdet/propagator.hpp"

namespace capdet {

struct MomentumSpectrum {
    MomentumGrid grid;
    std::vector<double> dPdp;

    double integral() const;
};

/// Density on a set of energy nodes; `weights` are the quadrature weights
/// (bin widths) attached to each node.
struct EnergySpectrum {
    std::vector<double> eps;
    std::vector<double> weights;
    std::vector<double> dPde;
    /// Requested nodes that could not be represented (see momentum_to_energy).
    std::size_t omitted = 0;

    double integral() const;
};

struct AngularSpectrum {
    double dtheta = 0.0;
    std::vector<double> theta; // bin centres, ascending in (-pi, pi]
    std::vector<double> dPdtheta;

    double integral() const;
};

/// Time integral of conj(Phi(p)) F{gamma psi}(p) for a local absorber.
/// The finalised spectrum (2/hbar) Re A(p) is real but may be negative.
class CoherentMomentumAccumulator {
public:
    explicit CoherentMomentumAccumulator(const LocalAbsorber& absorber, const Units& units = {});

    /// A += dt conj(Phi) F{gamma psi}.
    void accumulate(const WaveFunction& psi, double dt);
    /// Same with the exact per-node rates of the absorption window, so the
    /// integrated spectrum matches the norm the propagator actually removed.
    void accumulate(const WaveFunction& psi, const AbsorptionWindow& window);

    /// Idempotent; accumulate() throws afterwards.
    const MomentumSpectrum& finalize();
    bool finalized() const { return result_.has_value(); }

    const MomentumGrid& momentum_grid() const { return dft_.momentum_grid(); }
    const std::vector<cplx>& raw() const { return acc_; }

    StepHook hook();

private:
    void add(const WaveFunction& psi, double span, const std::vector<double>& rate);

    LocalAbsorber absorber_;
    Units units_;
    Dft1D dft_;
    std::vector<cplx> acc_;
    std::vector<cplx> phi_, gphi_, buf_;
    std::vector<double> rate_;
    std::optional<MomentumSpectrum> result_;
};

/// Incoherent "detector" histogram (2/hbar) dt mu_j |<phi_j|psi>|^2 summed
/// over both exterior channels. Every bin is non-decreasing in time.
class IncoherentEnergyAccumulator {
public:
    explicit IncoherentEnergyAccumulator(const EnergyAbsorber& absorber);

    void accumulate(const WaveFunction& psi, double dt);
    void accumulate(const WaveFunction& psi, const AbsorptionWindow& window) {
        accumulate(psi, window.span());
    }

    EnergySpectrum spectrum() const;
    StepHook hook();

private:
    EnergyAbsorber absorber_;
    std::vector<double> dPde_;
};

/// Angular histogram of the probability removed by a radial absorber, using
/// the Cartesian cell measure for every absorbing node. Nodes exactly on a bin
/// edge contribute half to each neighbouring bin.
class AngularAccumulator {
public:
    static constexpr std::size_t default_bins = 721;

    explicit AngularAccumulator(const RadialAbsorber& absorber, const Units& units = {},
                                std::size_t n_bins = default_bins);

    void accumulate(const WaveFunction& psi, double dt);
    void accumulate(const WaveFunction& psi, const AbsorptionWindow& window);

    /// Bin index for an angle in (-pi, pi].
    std::size_t bin_of(double theta) const;
    AngularSpectrum spectrum() const;
    StepHook hook();

private:
    struct Node {
        std::size_t index;
        std::size_t bin;
        double gamma;
    };
    const Grid2D grid_;
    Units units_;
    std::size_t n_bins_;
    double dtheta_;
    std::vector<Node> nodes_;
    std::vector<double> bins_;
};

/// dP/deps = (m/p) [dP/dp(p) + dP/dp(-p)], p = sqrt(2 m eps), on the image of the
/// positive momentum nodes. Weights are p dp / m, so the integral over eps is
/// the integral of dP/dp over p != 0.
EnergySpectrum momentum_to_energy(const MomentumSpectrum& spectrum, const Units& units = {});

/// Same on a caller-chosen energy grid with linear interpolation in p.
/// Nodes at eps <= 0 or below the first positive momentum node are omitted
/// and counted in `omitted`.
EnergySpectrum momentum_to_energy(const MomentumSpectrum& spectrum, const std::vector<double>& eps,
                                  const Units& units = {});

/// Centred moving average over `width` samples (odd); the ends use the
/// samples that exist.
std::vector<double> smooth(const std::vector<double>& values, std::size_t width = 3);

/// (max - min)/(max + min) of smooth(values, width) over nodes with lo <= x <= hi.
/// Returns 0 when the window holds fewer than two nodes or max + min <= 0.
double fringe_visibility(const std::vector<double>& x, const std::vector<double>& values, double lo, double hi,
                         std::size_t width = 3);

/// Linear interpolation of (x, y) at xq; x ascending. Outside the range the
/// end values are returned.
double interpolate(const std::vector<double>& x, const std::vector<double>& y, double xq);

} // namespace capdet
