#include "capdet/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "capdet/error.hpp"

namespace capdet {

namespace {

using RowPair = Eigen::Matrix<double, 2, Eigen::Dynamic>;
using RowPairMap = Eigen::Map<RowPair>;
using ConstRowPairMap = Eigen::Map<const RowPair>;

// A contiguous run of complex amplitudes seen as a 2 x count real matrix
// (row 0 real parts, row 1 imaginary parts).
ConstRowPairMap as_rows(std::span<const cplx> amps, std::size_t first, std::size_t count) {
    return ConstRowPairMap(reinterpret_cast<const double*>(amps.data() + first), 2,
                           static_cast<Eigen::Index>(count));
}

RowPairMap as_rows(std::span<cplx> amps, std::size_t first, std::size_t count) {
    return RowPairMap(reinterpret_cast<double*>(amps.data() + first), 2,
                      static_cast<Eigen::Index>(count));
}

void check_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw GridMismatch("absorber and wave function live on different grids");
}

} // namespace

const char* to_string(Channel ch) { return ch == Channel::left ? "left" : "right"; }

LocalAbsorber build_local(const Grid1D& grid, const LocalCapProfile& prof) {
    validate(prof);
    LocalAbsorber a{grid, prof, std::vector<double>(grid.n())};
    std::size_t left = 0, right = 0;
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        a.diag[j] = local_gamma(std::abs(x), prof);
        if (x > prof.R) ++right;
        if (x < -prof.R) ++left;
    }
    const bool has_left = grid.x_min() < -prof.R;
    const bool has_right = grid.x_max() > prof.R;
    if ((!has_left && !has_right) || (has_left && left < min_cap_nodes) ||
        (has_right && right < min_cap_nodes))
        throw InvalidArgument("CAP region unresolved: need at least " + std::to_string(min_cap_nodes) +
                              " nodes beyond R on every absorbing side (left " +
                              std::to_string(left) + ", right " + std::to_string(right) + ")");
    return a;
}

RadialAbsorber build_radial(const Grid2D& grid, const LocalCapProfile& prof) {
    validate(prof);
    RadialAbsorber a{grid, prof, std::vector<double>(grid.size())};
    for (std::size_t j = 0; j < grid.ny(); ++j)
        for (std::size_t i = 0; i < grid.nx(); ++i)
            a.diag[grid.index(i, j)] = local_gamma(grid.r(i, j), prof);
    // Resolution is judged along the best-covered axis ray from the origin.
    auto beyond = [&](const Grid1D& ax, double sign) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < ax.n(); ++i)
            if (sign * ax.x(i) > prof.R) ++c;
        return c;
    };
    const std::size_t best = std::max({beyond(grid.x_axis(), 1.0), beyond(grid.x_axis(), -1.0),
                                       beyond(grid.y_axis(), 1.0), beyond(grid.y_axis(), -1.0)});
    if (best < min_cap_nodes)
        throw InvalidArgument("CAP region unresolved: radial absorber has only " +
                              std::to_string(best) + " nodes beyond R along any axis");
    return a;
}

ExteriorEigenstate exterior_state(double eps, Channel channel, const Grid1D& grid, double R,
                                  const Units& units) {
    if (!(eps > 0.0)) throw InvalidArgument("exterior eigenstates need eps > 0");
    ExteriorEigenstate s;
    s.eps = eps;
    s.k = std::sqrt(2.0 * units.mass * eps) / units.hbar;
    s.channel = channel;
    s.samples.assign(grid.n(), 0.0);
    const double amp =
        std::sqrt(2.0 * units.mass / (std::numbers::pi * units.hbar * units.hbar * s.k));
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        const bool on_side = channel == Channel::right ? x > R : x < -R;
        if (on_side) s.samples[j] = amp * std::sin(s.k * (std::abs(x) - R));
    }
    return s;
}

EnergyAbsorber::EnergyAbsorber(const Grid1D& grid, double R, const EnergyCapProfile& prof,
                               double eps_min, double eps_max, std::size_t n_eps,
                               const Units& units)
    : grid_(grid), R_(R), profile_(prof), units_(units), d_eps_(0.0) {
    validate(prof);
    if (!(eps_min > 0.0) || !(eps_max > eps_min))
        throw InvalidArgument("energy absorber needs 0 < eps_min < eps_max");
    if (n_eps < 32) throw InvalidArgument("energy absorber needs n_eps >= 32");
    if (!(R >= 0.0)) throw InvalidArgument("energy absorber needs R >= 0");

    d_eps_ = (eps_max - eps_min) / static_cast<double>(n_eps);
    energies_.resize(n_eps);
    weights_.resize(n_eps);
    for (std::size_t j = 0; j < n_eps; ++j) {
        energies_[j] = eps_min + (static_cast<double>(j) + 0.5) * d_eps_;
        weights_[j] = mu(energies_[j], prof) * d_eps_;
    }

    for (Channel ch : {Channel::left, Channel::right}) {
        ChannelBlock b{ch, 0, 0, {}};
        bool found = false;
        for (std::size_t j = 0; j < grid.n(); ++j) {
            const double x = grid.x(j);
            const bool on_side = ch == Channel::right ? x > R : x < -R;
            if (on_side) {
                if (!found) b.first = j;
                found = true;
                ++b.count;
            }
        }
        if (b.count == 0) continue;
        b.basis.resize(static_cast<Eigen::Index>(b.count), static_cast<Eigen::Index>(n_eps));
        for (std::size_t j = 0; j < n_eps; ++j) {
            const auto st = exterior_state(energies_[j], ch, grid, R, units);
            for (std::size_t m = 0; m < b.count; ++m)
                b.basis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = st.samples[b.first + m];
        }
        channels_.push_back(std::move(b));
    }
    if (channels_.empty()) throw InvalidArgument("CAP region unresolved: no grid nodes beyond R");
}

ExteriorEigenstate EnergyAbsorber::state(std::size_t j, Channel ch) const {
    if (j >= n_eps()) throw InvalidArgument("energy index out of range");
    ExteriorEigenstate s;
    s.eps = energies_[j];
    s.k = std::sqrt(2.0 * units_.mass * s.eps) / units_.hbar;
    s.channel = ch;
    s.samples.assign(grid_.n(), 0.0);
    for (const auto& b : channels_) {
        if (b.channel != ch) continue;
        for (std::size_t m = 0; m < b.count; ++m)
            s.samples[b.first + m] = b.basis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j));
    }
    return s;
}

std::vector<cplx> EnergyAbsorber::project(const WaveFunction& psi, std::size_t block) const {
    check_same_grid(psi.grid(), Grid{grid_});
    const auto& b = channels_.at(block);
    const RowPair c = as_rows(psi.amps(), b.first, b.count) * b.basis * grid_.dx();
    std::vector<cplx> out(n_eps());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = cplx(c(0, static_cast<Eigen::Index>(j)), c(1, static_cast<Eigen::Index>(j)));
    return out;
}

EnergyAbsorber build_energy(const Grid1D& grid, double R, const EnergyCapProfile& prof,
                            double eps_min, double eps_max, std::size_t n_eps, const Units& units) {
    return EnergyAbsorber(grid, R, prof, eps_min, eps_max, n_eps, units);
}

Grid AbsorberHandle::grid() const {
    return std::visit([](const auto& a) -> Grid {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, EnergyAbsorber>)
            return a.grid();
        else
            return a.grid;
    }, payload_);
}

std::span<const double> AbsorberHandle::diagonal() const {
    if (const auto* l = local()) return l->diag;
    if (const auto* r = radial()) return r->diag;
    return {};
}

WaveFunction apply(const AbsorberHandle& absorber, const WaveFunction& psi) {
    check_same_grid(psi.grid(), absorber.grid());
    WaveFunction out(psi.grid());
    if (const auto* e = absorber.energy()) {
        const Eigen::Map<const Eigen::VectorXd> w(e->weights().data(),
                                                  static_cast<Eigen::Index>(e->n_eps()));
        for (const auto& b : e->channels()) {
            RowPair c = as_rows(psi.amps(), b.first, b.count) * b.basis * e->grid().dx();
            c.array().rowwise() *= w.transpose().array();
            as_rows(out.amps(), b.first, b.count) = c * b.basis.transpose();
        }
        return out;
    }
    const auto diag = absorber.diagonal();
    for (std::size_t k = 0; k < psi.size(); ++k) out[k] = diag[k] * psi[k];
    return out;
}

double expectation(const AbsorberHandle& absorber, const WaveFunction& psi) {
    check_same_grid(psi.grid(), absorber.grid());
    if (const auto* e = absorber.energy()) {
        double s = 0.0;
        for (std::size_t b = 0; b < e->channels().size(); ++b) {
            const auto c = e->project(psi, b);
            for (std::size_t j = 0; j < c.size(); ++j) s += e->weights()[j] * std::norm(c[j]);
        }
        return s;
    }
    const auto diag = absorber.diagonal();
    double s = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) s += diag[k] * std::norm(psi[k]);
    return s * psi.cell_volume();
}

RationalDecay::RationalDecay(const EnergyAbsorber& absorber, double span, double solve_tol) {
    if (!(span > 0.0)) throw InvalidArgument("RationalDecay needs a positive time span");
    const double alpha = span / (2.0 * absorber.units().hbar);
    const double dx = absorber.grid().dx();
    const auto weights = absorber.weights();
    Eigen::VectorXd scale(static_cast<Eigen::Index>(absorber.n_eps()));
    for (std::size_t j = 0; j < absorber.n_eps(); ++j)
        scale(static_cast<Eigen::Index>(j)) = std::sqrt(alpha * dx * weights[j]);

    for (const auto& cb : absorber.channels()) {
        Block b;
        b.first = cb.first;
        b.count = cb.count;
        // alpha Gamma = u u^T on this block.
        b.u = cb.basis * scale.asDiagonal();
        const auto r = b.u.cols();
        Eigen::MatrixXd s = Eigen::MatrixXd::Identity(r, r);
        s.noalias() += b.u.transpose() * b.u;
        b.small.compute(s);
        if (b.small.info() != Eigen::Success)
            throw NumericalError("energy CAP decay factor: Cholesky factorisation failed");

        // Probe the resolvent (I + u u^T)^{-1} = I - u (I + u^T u)^{-1} u^T.
        const auto n = static_cast<Eigen::Index>(b.count);
        Eigen::VectorXd rhs(n);
        for (Eigen::Index m = 0; m < n; ++m) rhs(m) = std::cos(0.37 * double(m)) + 0.5 * std::sin(1.3 * double(m));
        const Eigen::VectorXd x = rhs - b.u * b.small.solve(b.u.transpose() * rhs);
        const Eigen::VectorXd back = x + b.u * (b.u.transpose() * x);
        const double res = (back - rhs).norm() / rhs.norm();
        residual_ = std::max(residual_, res);
        if (!(res <= solve_tol))
            throw NumericalError("energy CAP decay factor: resolvent residual " + std::to_string(res) +
                                 " exceeds tolerance");

        if (n <= r) {
            // D = 2 (I + u u^T)^{-1} - I = I - 2 u S^{-1} u^T
            b.dense = Eigen::MatrixXd::Identity(n, n);
            b.dense.noalias() -= 2.0 * b.u * b.small.solve(b.u.transpose());
        }
        blocks_.push_back(std::move(b));
    }
}

void RationalDecay::apply(std::span<cplx> amps) const {
    for (const auto& b : blocks_) {
        auto m = as_rows(amps, b.first, b.count);
        if (b.dense.size() > 0) {
            const RowPair tmp = m * b.dense; // dense is symmetric
            m = tmp;
        } else {
            const RowPair y = m * b.u;
            const RowPair z = b.small.solve(y.transpose()).transpose();
            m.noalias() -= 2.0 * z * b.u.transpose();
        }
    }
}

} // namespace capdet
