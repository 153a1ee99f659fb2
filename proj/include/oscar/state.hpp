#pragma once

#include <complex>
#include <string_view>

namespace oscar {

using cdouble = std::complex<double>;

// Spin sector in the rotated frame: e has S_z = +1, g has S_z = -1.
enum class Branch { e, g };

constexpr double spin_sign(Branch b) noexcept { return b == Branch::e ? 1.0 : -1.0; }
constexpr std::string_view to_string(Branch b) noexcept { return b == Branch::e ? "e" : "g"; }

// Initial preparation: displaced thermal cantilever (alpha), coherent
// readout field (beta), rotated-frame spin populations.
struct SystemState {
    cdouble alpha{0.0, 0.0};
    cdouble beta{0.0, 0.0};
    double w_e = 0.0;
    double w_g = 1.0;

    double weight(Branch b) const noexcept { return b == Branch::e ? w_e : w_g; }

    // Throws ValidationError.
    void validate() const;

    static SystemState eigenstate_g(cdouble alpha, cdouble beta) { return {alpha, beta, 0.0, 1.0}; }
    static SystemState eigenstate_e(cdouble alpha, cdouble beta) { return {alpha, beta, 1.0, 0.0}; }
    static SystemState superposition(cdouble alpha, cdouble beta) { return {alpha, beta, 0.5, 0.5}; }
};

// The master equation is written in t (units of 1/omega_c); the coefficient
// equations in tau = gamma t. A Time always carries its scale.
enum class TimeScale { t, tau };

struct Time {
    double value = 0.0;
    TimeScale scale = TimeScale::tau;

    static Time scaled(double tau) { return {tau, TimeScale::tau}; }
    static Time unscaled(double t) { return {t, TimeScale::t}; }

    double tau(double gamma) const noexcept { return scale == TimeScale::tau ? value : gamma * value; }
    double t(double gamma) const noexcept { return scale == TimeScale::t ? value : value / gamma; }
};

constexpr std::string_view to_string(TimeScale s) noexcept { return s == TimeScale::t ? "t" : "tau"; }

}  // namespace oscar
