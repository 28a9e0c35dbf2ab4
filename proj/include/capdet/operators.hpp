#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "capdet/grid.hpp"
#include "capdet/potentials.hpp"

namespace capdet {

/// Position-diagonal absorber on a 1D grid, gamma(|x|) per node.
struct LocalAbsorber {
    Grid1D grid;
    LocalCapProfile profile;
    std::vector<double> diag;
};

/// Position-diagonal isotropic absorber on a 2D grid, gamma(r) per node.
struct RadialAbsorber {
    Grid2D grid;
    LocalCapProfile profile;
    std::vector<double> diag;
};

enum class Channel { left, right };

const char* to_string(Channel ch);

/// Energy-normalised eigenfunction of the free Hamiltonian restricted to
/// one side of the exterior |x| > R, with a hard wall at |x| = R.
struct ExteriorEigenstate {
    double eps = 0.0;
    double k = 0.0;
    Channel channel = Channel::right;
    std::vector<double> samples; // one per node of the 1D grid
};

/// Minimum number of grid nodes a local absorber needs on each absorbing side.
inline constexpr std::size_t min_cap_nodes = 50;

LocalAbsorber build_local(const Grid1D& grid, const LocalCapProfile& prof);
RadialAbsorber build_radial(const Grid2D& grid, const LocalCapProfile& prof);

ExteriorEigenstate exterior_state(double eps, Channel channel, const Grid1D& grid, double R,
                                  const Units& units = {});

/// Gamma_eps = sum_{j,ch} mu(eps_j) d_eps |phi_{j,ch}><phi_{j,ch}| stored in
/// factored form: for each channel, the exterior samples of every state.
class EnergyAbsorber {
public:
    struct ChannelBlock {
        Channel channel;
        std::size_t first = 0; // first grid node of this exterior side
        std::size_t count = 0; // number of exterior nodes
        Eigen::MatrixXd basis; // count x n_eps, column j = phi_j on this side
    };

    EnergyAbsorber(const Grid1D& grid, double R, const EnergyCapProfile& prof, double eps_min,
                   double eps_max, std::size_t n_eps, const Units& units);

    const Grid1D& grid() const { return grid_; }
    double R() const { return R_; }
    const EnergyCapProfile& profile() const { return profile_; }
    const Units& units() const { return units_; }
    std::size_t n_eps() const { return energies_.size(); }
    double d_eps() const { return d_eps_; }
    std::span<const double> energies() const { return energies_; }
    /// mu(eps_j) * d_eps
    std::span<const double> weights() const { return weights_; }
    const std::vector<ChannelBlock>& channels() const { return channels_; }

    /// Materialises one stored state on the full grid.
    ExteriorEigenstate state(std::size_t j, Channel ch) const;

    /// <phi_{j,ch}|psi> for every j of one channel block (index into channels()).
    std::vector<cplx> project(const WaveFunction& psi, std::size_t block) const;

private:
    Grid1D grid_;
    double R_;
    EnergyCapProfile profile_;
    Units units_;
    double d_eps_;
    std::vector<double> energies_;
    std::vector<double> weights_;
    std::vector<ChannelBlock> channels_;
};

EnergyAbsorber build_energy(const Grid1D& grid, double R, const EnergyCapProfile& prof,
                            double eps_min, double eps_max, std::size_t n_eps,
                            const Units& units = {});

/// Exactly one absorber realisation.
class AbsorberHandle {
public:
    enum class Variant { local, radial, energy };

    AbsorberHandle(LocalAbsorber a) : payload_(std::move(a)) {}
    AbsorberHandle(RadialAbsorber a) : payload_(std::move(a)) {}
    AbsorberHandle(EnergyAbsorber a) : payload_(std::move(a)) {}

    Variant variant() const { return static_cast<Variant>(payload_.index()); }
    Grid grid() const;

    const LocalAbsorber* local() const { return std::get_if<LocalAbsorber>(&payload_); }
    const RadialAbsorber* radial() const { return std::get_if<RadialAbsorber>(&payload_); }
    const EnergyAbsorber* energy() const { return std::get_if<EnergyAbsorber>(&payload_); }

    /// Per-node gamma for the position-diagonal variants, empty otherwise.
    std::span<const double> diagonal() const;

private:
    std::variant<LocalAbsorber, RadialAbsorber, EnergyAbsorber> payload_;
};

/// Gamma psi. Throws GridMismatch.
WaveFunction apply(const AbsorberHandle& absorber, const WaveFunction& psi);

/// <psi|Gamma|psi>, real and non-negative up to rounding.
double expectation(const AbsorberHandle& absorber, const WaveFunction& psi);

/// Crank-Nicolson decay factor (1 + Gamma s/2hbar)^{-1}(1 - Gamma s/2hbar) for
/// an energy absorber over a time span s, applied through the Woodbury
/// identity on each exterior block.
class RationalDecay {
public:
    RationalDecay(const EnergyAbsorber& absorber, double span, double solve_tol = 1e-10);

    /// In-place application to a wave function on the absorber's grid.
    void apply(std::span<cplx> amps) const;

    /// Relative residual of the resolvent solve measured at construction.
    double residual() const { return residual_; }

private:
    struct Block {
        std::size_t first = 0;
        std::size_t count = 0;
        Eigen::MatrixXd u;     // count x r, sqrt(alpha dx w_j) phi_j
        Eigen::LLT<Eigen::MatrixXd> small; // I + u^T u
        Eigen::MatrixXd dense; // full count x count factor when count <= r
    };
    std::vector<Block> blocks_;
    double residual_ = 0.0;
};

} // namespace capdet
