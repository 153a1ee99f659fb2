#pragma once

#include <string>
#include <vector>

#include "oscar/state.hpp"

namespace oscar {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double k_boltzmann = 1.380649e-23;      // J/K
inline constexpr double gamma_electron = 1.76085963023e11;  // rad/(s T)
}  // namespace constants

// Laboratory quantities, SI units.
struct PhysicalParams {
    double omega_c = 0.0;  // cantilever angular frequency
    double omega_r = 0.0;  // readout-field angular frequency
    double k_c = 0.0;      // spring constant
    double B1 = 0.0;       // rf field amplitude
    double dBz_dz = 0.0;   // field gradient magnitude
    double L = 0.0;        // interferometer cavity length
    double gamma_e = constants::gamma_electron;
    double T = 0.0;  // bath temperature
    double Q = 0.0;  // cantilever quality factor

    void validate() const;
};

// Model constants in units of hbar*omega_c and 1/omega_c.
struct DimensionlessParams {
    double epsilon = 0.0;  // drive amplitude
    double eta = 0.0;      // spin-cantilever coupling
    double kappa = 0.0;    // optomechanical coupling
    double gamma = 0.0;    // damping Gamma/omega_c
    double chi = 0.0;      // dispersive coupling
    double N_th = 0.0;     // k_B T/(hbar omega_c) - 1/2
    double M_th = -0.5;    // -k_B T/(hbar omega_c)

    double kappa_over_gamma() const noexcept { return kappa / gamma; }
    // k_B T/(hbar omega_c), the coefficient of the [x,[x,.]] dissipator term.
    double thermal_energy() const noexcept { return N_th + 0.5; }

    // Builds the set used by the coefficient equations; M_th follows N_th.
    static DimensionlessParams scaled(double gamma, double chi, double kappa_over_gamma, double N_th);

    void validate() const;
};

struct Conversion {
    DimensionlessParams params;
    std::vector<std::string> warnings;
};

// Throws ValidationError on non-positive inputs.
Conversion to_dimensionless(const PhysicalParams& p);

// Dispersive coupling 16 eta^2 eps / (4 eps^2 - 1). Throws PoleError when
// |4eps^2 - 1| < 1e-9 max(1, 4eps^2). Appends an adiabaticity warning to
// `warnings` (if given) when eps <= 1 + |eta|.
double compute_chi(double epsilon, double eta, std::vector<std::string>* warnings = nullptr);

// eta that yields a given chi at drive eps (inverse of compute_chi).
double eta_for_chi(double epsilon, double chi);

inline constexpr double high_temperature_threshold = 10.0;

struct BranchFrequency {
    Branch branch = Branch::e;
    double omega = 0.0;  // (1 +- chi)/gamma
    cdouble Omega;       // principal sqrt(1 - 4 omega^2)
};

BranchFrequency branch_frequency(const DimensionlessParams& d, Branch b);

struct ConditionReport {
    Time time;
    double adiabatic_ratio = 0.0;         // eps^2/(eta |alpha|), want >> 1
    double partial_reversal_ratio = 0.0;  // eps/(eta |alpha|), ~1 for partial reversals
    double distinguishability_ratio = 0.0;  // chi t, want > 1
    double backaction_ratio = 0.0;        // kappa t |beta|^2/|alpha|^2, want << 1
    bool adiabatic = false;
    bool distinguishable = false;
    bool backaction_negligible = false;
    bool high_temperature = false;
    // N(N+1) - |M|^2; equals -1/4 with M = -(N+1/2).
    double positivity_gap = 0.0;
    std::string positivity_note;
};

// Ratios use |alpha| as the oscillation amplitude. adiabatic needs ratio >= 10,
// backaction_negligible needs ratio < 1.
ConditionReport check_conditions(const DimensionlessParams& d, const SystemState& state, Time time);

}  // namespace oscar
