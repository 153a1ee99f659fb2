#include "oscar/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "oscar/errors.hpp"

namespace oscar {

namespace {

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError("model", fmt::format("{} must be finite and > 0 (got {})", field, v));
    }
}

}  // namespace

void SystemState::validate() const {
    auto finite = [](cdouble z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
    if (!finite(alpha) || !finite(beta)) {
        throw ValidationError("phase", "alpha and beta must be finite");
    }
    if (w_e < 0.0 || w_g < 0.0 || w_e > 1.0 || w_g > 1.0) {
        throw ValidationError("phase", "spin weights must lie in [0, 1]");
    }
    if (std::abs(w_e + w_g - 1.0) > 1e-12) {
        throw ValidationError("phase", fmt::format("spin weights must sum to 1 (got {})", w_e + w_g));
    }
}

void PhysicalParams::validate() const {
    require_positive(omega_c, "omega_c");
    require_positive(omega_r, "omega_r");
    require_positive(k_c, "k_c");
    require_positive(B1, "B1");
    require_positive(dBz_dz, "dBz_dz");
    require_positive(L, "L");
    require_positive(gamma_e, "gamma_e");
    require_positive(T, "T");
    require_positive(Q, "Q");
}

DimensionlessParams DimensionlessParams::scaled(double gamma, double chi, double kappa_over_gamma,
                                                double N_th) {
    DimensionlessParams d;
    d.gamma = gamma;
    d.chi = chi;
    d.kappa = kappa_over_gamma * gamma;
    d.N_th = N_th;
    d.M_th = -(N_th + 0.5);
    return d;
}

void DimensionlessParams::validate() const {
    for (double v : {epsilon, eta, kappa, gamma, chi, N_th, M_th}) {
        if (!std::isfinite(v)) throw ValidationError("model", "dimensionless parameters must be finite");
    }
    require_positive(gamma, "gamma");
    if (N_th < 0.0) {
        throw ValidationError("model", fmt::format("N_th must be >= 0 (got {}); k_B T >> hbar omega_c required", N_th));
    }
    if (std::abs(M_th + N_th + 0.5) > 1e-12 * std::max(1.0, N_th)) {
        throw ValidationError("model", "M_th must equal -(N_th + 1/2)");
    }
}

double compute_chi(double epsilon, double eta, std::vector<std::string>* warnings) {
    const double four_eps2 = 4.0 * epsilon * epsilon;
    const double denom = four_eps2 - 1.0;
    if (std::abs(denom) < 1e-9 * std::max(1.0, four_eps2)) {
        throw PoleError("model", fmt::format("chi has a pole at epsilon = 1/2 (epsilon = {})", epsilon));
    }
    if (warnings && epsilon <= 1.0 + std::abs(eta)) {
        warnings->push_back(fmt::format(
            "adiabaticity: epsilon = {:.6g} is not >> 1 + eta = {:.6g}; effective Hamiltonian unreliable", epsilon,
            1.0 + std::abs(eta)));
    }
    return 16.0 * eta * eta * epsilon / denom;
}

double eta_for_chi(double epsilon, double chi) {
    const double denom = 4.0 * epsilon * epsilon - 1.0;
    if (std::abs(denom) < 1e-9 * std::max(1.0, 4.0 * epsilon * epsilon) || epsilon == 0.0) {
        throw PoleError("model", "cannot invert chi(epsilon, eta) at epsilon = 1/2 or 0");
    }
    const double eta2 = chi * denom / (16.0 * epsilon);
    if (eta2 < 0.0) {
        throw ValidationError("model", fmt::format("no real eta gives chi = {} at epsilon = {}", chi, epsilon));
    }
    return std::sqrt(eta2);
}

Conversion to_dimensionless(const PhysicalParams& p) {
    p.validate();
    using namespace constants;
    Conversion out;
    auto& d = out.params;
    d.epsilon = p.gamma_e * p.B1 / p.omega_c;
    d.eta = 0.5 * p.gamma_e * std::sqrt(hbar / (p.omega_c * p.k_c)) * std::abs(p.dBz_dz);
    d.kappa = (p.omega_r / p.L) * std::sqrt(hbar / (2.0 * p.k_c * p.omega_c));
    d.gamma = 1.0 / p.Q;
    const double thermal = k_boltzmann * p.T / (hbar * p.omega_c);
    d.N_th = thermal - 0.5;
    d.M_th = -thermal;
    if (d.N_th < 0.0) {
        throw ValidationError("model",
                              fmt::format("T = {} K gives N_th = {} < 0; the high-temperature bath model needs "
                                          "k_B T >> hbar omega_c",
                                          p.T, d.N_th));
    }
    if (d.N_th < high_temperature_threshold) {
        out.warnings.push_back(fmt::format(
            "high-temperature validity: N_th = {:.6g} < {}; Caldeira-Leggett bath needs k_B T >> hbar omega_c", d.N_th,
            high_temperature_threshold));
    }
    d.chi = compute_chi(d.epsilon, d.eta, &out.warnings);
    return out;
}

BranchFrequency branch_frequency(const DimensionlessParams& d, Branch b) {
    BranchFrequency f;
    f.branch = b;
    f.omega = (1.0 + spin_sign(b) * d.chi) / d.gamma;
    f.Omega = std::sqrt(cdouble(1.0 - 4.0 * f.omega * f.omega, 0.0));
    return f;
}

ConditionReport check_conditions(const DimensionlessParams& d, const SystemState& state, Time time) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    ConditionReport r;
    r.time = time;
    const double amp = std::abs(state.alpha);
    const double coupling = std::abs(d.eta) * amp;
    r.adiabatic_ratio = coupling > 0.0 ? d.epsilon * d.epsilon / coupling : inf;
    r.partial_reversal_ratio = coupling > 0.0 ? d.epsilon / coupling : inf;
    const double t = time.t(d.gamma);
    r.distinguishability_ratio = std::abs(d.chi) * t;
    const double photons = std::norm(state.beta);
    if (photons == 0.0) {
        r.backaction_ratio = 0.0;
    } else {
        r.backaction_ratio = amp > 0.0 ? std::abs(d.kappa) * t * photons / (amp * amp) : inf;
    }
    r.adiabatic = r.adiabatic_ratio >= 10.0;
    r.distinguishable = r.distinguishability_ratio > 1.0;
    r.backaction_negligible = r.backaction_ratio < 1.0;
    r.high_temperature = d.N_th >= high_temperature_threshold;
    r.positivity_gap = d.N_th * (d.N_th + 1.0) - d.M_th * d.M_th;
    r.positivity_note = fmt::format(
        "N(N+1) >= |M|^2 is approximately satisfied in the high-T limit only; gap = {:.6g} (relative {:.3g})",
        r.positivity_gap, d.M_th != 0.0 ? r.positivity_gap / (d.M_th * d.M_th) : 0.0);
    return r;
}

}  // namespace oscar
