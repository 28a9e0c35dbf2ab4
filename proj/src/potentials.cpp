#include "capdet/potentials.hpp"

#include <cmath>
#include <numbers>

#include "capdet/error.hpp"

namespace capdet {

void validate(const GaussianWell& well) {
    if (!(well.V0 > 0.0) || !(well.sigma_V > 0.0))
        throw InvalidArgument("GaussianWell needs V0 > 0 and sigma_V > 0");
}

void validate(const PulsePair& pulses) {
    if (!(pulses.T > 0.0)) throw InvalidArgument("PulsePair needs T > 0");
    if (!(pulses.tau >= 0.0) || !(pulses.tau < pulses.T))
        throw InvalidArgument("PulsePair needs 0 <= tau < T");
}

void validate(const DoubleSlitWall& wall) {
    if (!(wall.V0 > 0.0)) throw InvalidArgument("DoubleSlitWall needs V0 > 0");
    if (!(wall.W > 0.0)) throw InvalidArgument("DoubleSlitWall needs W > 0");
    if (!(wall.w > 0.0) || !(wall.d > wall.w)) throw InvalidArgument("DoubleSlitWall needs d > w > 0");
    if (!(wall.T_s > 0.0)) throw InvalidArgument("DoubleSlitWall needs T_s > 0");
}

void validate(const LocalCapProfile& prof) {
    if (!(prof.gamma0 >= 0.0)) throw InvalidArgument("LocalCapProfile needs gamma0 >= 0");
    if (!(prof.R >= 0.0)) throw InvalidArgument("LocalCapProfile needs R >= 0");
}

void validate(const EnergyCapProfile& prof) {
    if (!(prof.mu0 >= 0.0)) throw InvalidArgument("EnergyCapProfile needs mu0 >= 0");
}

double gaussian_well(double x, const GaussianWell& well) {
    return -well.V0 * std::exp(-x * x / (2.0 * well.sigma_V * well.sigma_V));
}

double single_pulse(double t, const PulsePair& pulses) {
    if (t < 0.0 || t > pulses.T) return 0.0;
    const double env = std::sin(std::numbers::pi * t / pulses.T);
    return pulses.E0 * env * env * std::sin(pulses.omega * t);
}

double field(double t, const PulsePair& pulses) {
    return single_pulse(t, pulses) + single_pulse(t - pulses.T + pulses.tau, pulses);
}

double fermi(double x, double T) {
    const double a = x / T;
    if (a > 0.0) {
        const double e = std::exp(-a);
        return e / (1.0 + e);
    }
    return 1.0 / (std::exp(a) + 1.0);
}

double double_slit(double x, double y, const DoubleSlitWall& wall) {
    const double u = x / wall.W;
    const double vx = std::exp(-(u * u) * (u * u));
    const double outer = 0.5 * (wall.d + wall.w);
    const double inner = 0.5 * (wall.d - wall.w);
    const double vy = fermi(y + outer, wall.T_s) + fermi(-y - inner, wall.T_s) +
                      fermi(y - inner, wall.T_s) + fermi(-y + outer, wall.T_s) - 1.0;
    return wall.V0 * vx * vy;
}

double local_gamma(double s, const LocalCapProfile& prof) {
    if (s <= prof.R) return 0.0;
    const double u = s - prof.R;
    return prof.gamma0 * u * u;
}

double mu(double eps, const EnergyCapProfile& prof) {
    if (eps < 0.0) throw InvalidArgument("energy CAP function is defined for eps >= 0 only");
    return prof.mu0 * std::pow(eps, EnergyCapProfile::exponent);
}

} // namespace capdet
