#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "oscar/model.hpp"
#include "oscar/state.hpp"

namespace oscar {

// Field Fock indices (n, m) and spin branch of one term of the expansion
// rho = sum_nm |n><m| (x) rho_nm.
struct CoeffKey {
    int n = 0;
    int m = 0;
    Branch branch = Branch::e;

    void validate() const;
};

// Theta(lambda) = exp{A lambda + B lambda* + C |lambda|^2 + D lambda^2 + E lambda*^2 + F}
// for the cantilever part of one (n, m, branch) term. At lambda = 0 only F
// survives; <a^dag> = A and <a> = -B (up to the e^F normalisation).
struct GaussianCoeffs {
    cdouble A, B, C, D, E, F;
};

// Coefficients at tau = 0. Returns nullopt when the term carries no weight
// (spin weight 0, or beta = 0 with n + m > 0).
std::optional<GaussianCoeffs> initial_coeffs(const DimensionlessParams& d, const SystemState& state, CoeffKey key);

// ln[w e^{-|beta|^2} beta^n beta*^m / sqrt(n! m!)]; nullopt for zero weight.
std::optional<cdouble> initial_log_weight(const SystemState& state, CoeffKey key);

enum class Scheme { dop853, dp5 };

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    Scheme scheme = Scheme::dop853;
};

// Largest tau step the integrator may take at frequency omega.
double step_ceiling(double omega);

// Accepted steps the ODE route would need to reach tau.
double estimated_steps(double omega, double tau);

// Integrates the six coefficient equations of one key from `start` at
// tau = 0 up to `tau`. tau uses the gamma t scaling.
GaussianCoeffs evolve_ode(const DimensionlessParams& d, CoeffKey key, const GaussianCoeffs& start, double tau,
                          const IntegratorOptions& opts = {});

// Same, starting from initial_coeffs(d, state, key).
std::optional<GaussianCoeffs> evolve_ode(const DimensionlessParams& d, const SystemState& state, CoeffKey key,
                                         double tau, const IntegratorOptions& opts = {});

enum class EvolutionMethod {
    automatic,    // ode below the step budget, propagator above it
    ode,          // adaptive Runge-Kutta
    propagator,   // matrix exponential of the constant-coefficient system
    closed_form,  // analytic F(tau), corrected coefficients
};

std::string_view to_string(EvolutionMethod m) noexcept;
EvolutionMethod parse_evolution_method(std::string_view s);

// Above this many estimated steps `automatic` switches to the propagator.
inline constexpr double automatic_step_budget = 2e6;

// Resolves `automatic` for one branch at the largest requested tau.
EvolutionMethod resolve_method(EvolutionMethod m, double omega, double tau_max);

// A and B are affine in (n, m) and C, D, E do not depend on them, so one
// integration of the decomposed system
//   A = A0 + n A1 + m A2,  B = B0 + n B1 + m B2,  G = int_0^tau (A - B)
// serves every key of a branch: F = F(0) + i (kappa/gamma)(n - m)(G0 + n G1 + m G2).
class BranchSolution {
public:
    static constexpr int dim = 12;
    using Vector = std::array<cdouble, dim>;

    BranchSolution(Branch branch, double tau, const Vector& y) : branch_(branch), tau_(tau), y_(y) {}

    Branch branch() const noexcept { return branch_; }
    double tau() const noexcept { return tau_; }
    const Vector& raw() const noexcept { return y_; }

    cdouble A(int n, int m) const noexcept { return y_[0] + double(n) * y_[1] + double(m) * y_[2]; }
    cdouble B(int n, int m) const noexcept { return y_[3] + double(n) * y_[4] + double(m) * y_[5]; }
    cdouble C() const noexcept { return y_[6]; }
    cdouble D() const noexcept { return y_[7]; }
    cdouble E() const noexcept { return y_[8]; }
    cdouble G(int n, int m) const noexcept { return y_[9] + double(n) * y_[10] + double(m) * y_[11]; }

    // F(tau) - F(0) for the key (n, m).
    cdouble delta_F(double kappa_over_gamma, int n, int m) const noexcept;

    GaussianCoeffs coeffs(double kappa_over_gamma, int n, int m, cdouble F0) const noexcept;

private:
    Branch branch_;
    double tau_;
    Vector y_;
};

// Solutions at each tau in `taus` (any order, all >= 0). Method must be ode,
// propagator or automatic.
std::vector<BranchSolution> solve_branch(const DimensionlessParams& d, Branch branch, cdouble alpha,
                                         const std::vector<double>& taus,
                                         EvolutionMethod method = EvolutionMethod::automatic,
                                         const IntegratorOptions& opts = {});

// Theta_nm(lambda = 0, tau) = e^{F(tau)}; zero for absent terms.
cdouble theta_at_origin(const DimensionlessParams& d, const SystemState& state, CoeffKey key, double tau,
                        EvolutionMethod method = EvolutionMethod::automatic, const IntegratorOptions& opts = {});

struct CoeffSample {
    double tau = 0.0;
    CoeffKey key;
    GaussianCoeffs coeffs;
};

// Per-key trajectory by the six-equation ODE. Empty if the key is absent.
std::vector<CoeffSample> coefficient_trajectory(const DimensionlessParams& d, const SystemState& state,
                                                CoeffKey key, const std::vector<double>& taus,
                                                const IntegratorOptions& opts = {});

// Columns: tau, branch, n, m, then Re/Im of A..F.
void write_coefficients_csv(std::ostream& os, const std::vector<CoeffSample>& samples);

}  // namespace oscar
