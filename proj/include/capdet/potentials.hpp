#pragma once

namespace capdet {

/// V(x) = -V0 exp(-x^2 / (2 sigma_V^2)).
struct GaussianWell {
    double V0 = 0.6;
    double sigma_V = 3.0;
};

/// Two identical sin^2-enveloped pulses; the second starts at t = T - tau.
struct PulsePair {
    double E0 = 2.0;
    double omega = 1.0;
    double T = 0.0;
    double tau = 5.0;
    double q = -1.0;

    /// End of the field support, 2T - tau.
    double support_end() const { return 2.0 * T - tau; }
};

/// Wall V0 exp(-(x/W)^4) V_y(y) with two smooth slits of width w at y = +-d/2.
/// T_s sets the edge softness of the Fermi functions.
struct DoubleSlitWall {
    double V0 = 100.0;
    double W = 2.0;
    double d = 20.0;
    double w = 1.5;
    double T_s = 0.1;
};

/// gamma(s) = gamma0 (s - R)^2 for s > R, zero otherwise.
struct LocalCapProfile {
    double gamma0 = 0.0;
    double R = 0.0;
};

/// mu(eps) = mu0 eps^(1/6).
struct EnergyCapProfile {
    double mu0 = 0.0;
    static constexpr double exponent = 1.0 / 6.0;
};

void validate(const GaussianWell& well);
void validate(const PulsePair& pulses);
void validate(const DoubleSlitWall& wall);
void validate(const LocalCapProfile& prof);
void validate(const EnergyCapProfile& prof);

double gaussian_well(double x, const GaussianWell& well);

/// Single sin^2 pulse, zero outside [0, T].
double single_pulse(double t, const PulsePair& pulses);
double field(double t, const PulsePair& pulses);

/// 1 / (exp(x/T) + 1), evaluated without overflow.
double fermi(double x, double T);

double double_slit(double x, double y, const DoubleSlitWall& wall);

double local_gamma(double s, const LocalCapProfile& prof);

/// Throws InvalidArgument for eps < 0.
double mu(double eps, const EnergyCapProfile& prof);

} // namespace capdet
