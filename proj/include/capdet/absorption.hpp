#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace capdet {

/// Time span of CAP decay attributed to one recorded state.
///
/// The propagator splits every decay factor into two halves around the
/// unitary part of the step, so each end-of-step state sits at the centre of
/// a decay interval: `before` of it elapsed, `after` of it still to come.
/// Interior states carry dt/2 on both sides; the initial state has no
/// `before` and the final state no `after`.
struct AbsorptionWindow {
    double before = 0.0;
    double after = 0.0;

    double span() const { return before + after; }

    /// Rate g with (2/hbar) * span * g * |psi|^2 equal to the probability a
    /// position-diagonal decay exp(-gamma s/hbar) removes over the window.
    /// Tends to gamma as gamma * span / hbar -> 0.
    double effective_rate(double gamma, double hbar) const {
        const double s = span();
        if (s <= 0.0) return 0.0;
        return hbar * (std::expm1(2.0 * gamma * before / hbar) - std::expm1(-2.0 * gamma * after / hbar)) /
               (2.0 * s);
    }
};

/// Probability bookkeeping of a propagation run.
class AbsorptionLedger {
public:
    struct Entry {
        double t;
        double absorbed; // increment in this step
        double survival; // norm^2 after the step
    };

    explicit AbsorptionLedger(double initial_norm2 = 1.0) : initial_(initial_norm2), survival_(initial_norm2) {}

    void record(double t, double absorbed, double survival) {
        cumulative_ += absorbed;
        survival_ = survival;
        entries_.push_back({t, absorbed, survival});
        running_.push_back(cumulative_);
    }

    double initial() const { return initial_; }
    double cumulative() const { return cumulative_; }
    double survival() const { return survival_; }
    const std::vector<Entry>& entries() const { return entries_; }
    /// cumulative after step k (k = 0 is the first recorded step)
    double cumulative_at(std::size_t k) const { return running_.at(k); }
    /// |cumulative + survival - initial|
    double closure_error() const { return std::abs(cumulative_ + survival_ - initial_); }

private:
    double initial_;
    double cumulative_ = 0.0;
    double survival_;
    std::vector<Entry> entries_;
    std::vector<double> running_;
};

} // namespace capdet
