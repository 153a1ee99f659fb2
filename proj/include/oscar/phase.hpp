#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oscar/closed_form.hpp"
#include "oscar/gaussian_dynamics.hpp"
#include "oscar/model.hpp"
#include "oscar/state.hpp"

namespace oscar {

// Field Fock cutoff for a coherent amplitude beta and the Poisson mass above it.
struct Truncation {
    int n_max = 0;
    double tail = 0.0;  // sum_{n > n_max} e^{-|b|^2} |b|^{2n}/n!
};

inline constexpr double max_truncation_tail = 1e-8;

// n_max = ceil(|b|^2 + 8|b| + 10) unless overridden. Throws TruncationError
// when the tail exceeds max_truncation_tail.
Truncation truncation_for(cdouble beta, std::optional<int> n_max_override = std::nullopt);

// Uniform half-open grid over [-pi, pi).
std::vector<double> theta_grid(int size);

inline constexpr int min_grid_size = 64;
inline constexpr int default_grid_size = 512;

struct PhaseOptions {
    int grid_size = default_grid_size;
    EvolutionMethod method = EvolutionMethod::automatic;
    IntegratorOptions integrator;
    std::optional<int> n_max_override;
};

struct PhaseMeta {
    Time time;
    int n_max = 0;
    double tail = 0.0;
    double trace = 0.0;               // sum_n Theta_nn, both branches
    double max_imag_residue = 0.0;    // largest |Im| of the assembled sum
    double min_raw = 0.0;             // smallest raw value before clipping
    std::string method_e, method_g;   // resolved evolution route per branch
};

// P(theta) sampled on theta_grid. `values` are clipped at zero; `raw` keeps
// the unclipped real parts.
struct PhaseDistribution {
    std::vector<double> thetas;
    std::vector<double> values;
    std::vector<double> raw;
    double tau = 0.0;
    PhaseMeta meta;

    // Trapezoidal rule on the periodic grid.
    double integral() const;
    double step() const;
};

// Sums (1/2pi) sum_nm e^{-i(n-m)theta} rho_nm over a field density matrix
// given as a row-major (n_max+1)^2 array. Fills values/raw/max_imag_residue.
PhaseDistribution assemble_phase(const std::vector<cdouble>& rho_field, int n_max, int grid_size);

PhaseDistribution phase_distribution(const DimensionlessParams& d, const SystemState& state, Time time,
                                     const PhaseOptions& opts = {});

// Several times sharing one integration per branch.
std::vector<PhaseDistribution> phase_distributions(const DimensionlessParams& d, const SystemState& state,
                                                   const std::vector<Time>& times, const PhaseOptions& opts = {});

// Theta_nm(0, tau) of the whole field (both branches, weighted), row-major.
std::vector<cdouble> field_theta_matrix(const DimensionlessParams& d, const SystemState& state, double tau,
                                        int n_max, EvolutionMethod method = EvolutionMethod::automatic,
                                        const IntegratorOptions& opts = {});

struct Peak {
    int index = 0;
    double theta = 0.0;
    double height = 0.0;
    double prominence = 0.0;
    double width = 0.0;  // full width at half prominence, radians
};

// Tunable analysis constants, not physics.
inline constexpr double peak_threshold_factor = 1.05;  // times the uniform level 1/2pi
inline constexpr double resolution_threshold = 1.0;

// Local maxima above peak_threshold_factor/2pi on the circular grid, sorted
// by decreasing height.
std::vector<Peak> find_peaks(const std::vector<double>& thetas, const std::vector<double>& values);
std::vector<Peak> find_peaks(const PhaseDistribution& dist);

// Circular separation of the two tallest peaks over their mean width; 0 with
// fewer than two peaks.
double distinguishability(const std::vector<Peak>& peaks);
double distinguishability(const PhaseDistribution& dist);

}  // namespace oscar
