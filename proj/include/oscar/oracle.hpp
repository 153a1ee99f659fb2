#pragma once

// Brute-force master-equation integration on a truncated Fock space.
//
// Layout: the field photon number is conserved by both Hamiltonians and the
// bath touches only the cantilever, so rho = sum_nm |n><m|_r (x) R_nm and each
// block R_nm (spin (x) cantilever, size 2 d_c) evolves on its own. Blocks
// are stored side by side in one (2 d_c) x (2 d_c d_r^2) matrix, block (n, m)
// at column offset (n d_r + m) 2 d_c. Inside a block, index = s d_c + k with
// s = 0 for e (S_z = +1) and s = 1 for g.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oscar/gaussian_dynamics.hpp"
#include "oscar/model.hpp"
#include "oscar/phase.hpp"
#include "oscar/state.hpp"

namespace oscar {

struct TruncatedSpace {
    int d_c = 2;  // cantilever levels
    int d_r = 2;  // field levels

    int block_dim() const noexcept { return 2 * d_c; }
    int dim() const noexcept { return 2 * d_c * d_r; }
    int block_offset(int n, int m) const noexcept { return (n * d_r + m) * block_dim(); }

    // Throws DimensionError for a cutoff below 2.
    void validate() const;
};

enum class HamiltonianKind {
    effective,     // a^dag a + eps S_z + chi a^dag a S_z - kappa b^dag b x
    pre_adiabatic  // a^dag a + eps S_z - (sqrt2 eta S_x + kappa b^dag b) x
};

std::string_view to_string(HamiltonianKind k) noexcept;

using Blocks = Eigen::MatrixXcd;

class DensityMatrix {
public:
    DensityMatrix(TruncatedSpace space, Blocks blocks, double t = 0.0);

    const TruncatedSpace& space() const noexcept { return space_; }
    double t() const noexcept { return t_; }
    void set_t(double t) noexcept { t_ = t; }
    const Blocks& blocks() const noexcept { return blocks_; }
    Blocks& blocks() noexcept { return blocks_; }

    Eigen::MatrixXcd block(int n, int m) const;
    Eigen::MatrixXcd to_dense() const;  // field-major full matrix
    static DensityMatrix from_dense(TruncatedSpace space, const Eigen::MatrixXcd& full, double t = 0.0);

    cdouble trace() const;
    double hermiticity_error() const;
    double min_eigenvalue() const;
    // Population in the top two cantilever levels.
    double cantilever_leakage() const;
    double spin_z() const;
    cdouble cantilever_mean() const;  // <a>

    // <n| Tr_{s,c} rho |m>, row-major d_r x d_r; with a branch, the trace
    // covers only that spin sector.
    std::vector<cdouble> field_matrix(std::optional<Branch> branch = std::nullopt) const;

private:
    TruncatedSpace space_;
    Blocks blocks_;
    double t_;
};

struct InitialDensity {
    DensityMatrix rho;
    double field_tail = 0.0;       // coherent-state mass dropped at d_r
    double cantilever_tail = 0.0;  // displaced-thermal mass dropped at d_c
};

// Coherent field (beta) (x) pure spin sqrt(w_g)|g> + sqrt(w_e)|e> (x) thermal
// cantilever with mean occupation N + 1/2 displaced by alpha. Each factor is
// renormalised after truncation.
InitialDensity initial_density(const DimensionlessParams& d, const SystemState& state, TruncatedSpace space);

class Liouvillian {
public:
    Liouvillian(const DimensionlessParams& d, TruncatedSpace space, HamiltonianKind kind);

    const TruncatedSpace& space() const noexcept { return space_; }
    HamiltonianKind kind() const noexcept { return kind_; }
    const DimensionlessParams& params() const noexcept { return params_; }

    // out = L(rho), both in block layout.
    void apply(const Blocks& rho, Blocks& out) const;

    // Generator restricted to block (n, m): R and out are 2 d_c square.
    void apply_block(int n, int m, const Eigen::Ref<const Eigen::MatrixXcd>& R,
                     Eigen::Ref<Eigen::MatrixXcd> out) const;

    // Spin (x) cantilever Hamiltonian of one block, without the field term.
    Eigen::MatrixXcd block_hamiltonian() const;

private:
    DimensionlessParams params_;
    TruncatedSpace space_;
    HamiltonianKind kind_;
    Eigen::VectorXd sqrt_k_;      // sqrt(1) .. sqrt(d_c - 1)
    Eigen::VectorXd h_;           // diagonal of H within a block
    double flip_ = 0.0;           // coefficient of S_x x (pre-adiabatic only)
};

Liouvillian build_generator(const DimensionlessParams& d, TruncatedSpace space, HamiltonianKind kind);

struct OracleOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    Scheme scheme = Scheme::dop853;
    double leakage_limit = 1e-6;
    double eigenvalue_floor = -1e-6;
    bool track_min_eigenvalue = true;
};

struct Diagnostics {
    double t = 0.0;
    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;  // NaN when not tracked
    bool below_floor = false;
    double leakage = 0.0;
    double spin_z = 0.0;
    cdouble cantilever_mean;
};

struct Trajectory {
    std::vector<DensityMatrix> states;
    std::vector<Diagnostics> diagnostics;
    std::size_t steps = 0;
    std::size_t rhs_evals = 0;
};

Diagnostics diagnose(const DensityMatrix& rho, const OracleOptions& opts = {});

// Integrates to each time in `times` (unscaled t, ascending, >= rho0.t()).
// Throws LeakageError when leakage exceeds opts.leakage_limit at an output.
Trajectory integrate(const DensityMatrix& rho0, const Liouvillian& L, const std::vector<double>& times,
                     const OracleOptions& opts = {});

PhaseDistribution phase_from_density(const DensityMatrix& rho, int grid_size = default_grid_size);

// Full d^2 x d^2 superoperator from Kronecker products of the full-space
// operators, column-major vec convention. Only for tiny spaces.
Eigen::MatrixXcd dense_superoperator(const DimensionlessParams& d, TruncatedSpace space, HamiltonianKind kind);

// rho(t) = exp(S t) rho0 with S from dense_superoperator.
DensityMatrix evolve_dense(const DensityMatrix& rho0, const Eigen::MatrixXcd& superop, double t);

struct DiscrepancyReport {
    double epsilon = 0.0;
    double eta = 0.0;
    double chi = 0.0;
    std::vector<double> times;
    double phase_linf = 0.0;   // max over times and theta
    double spin_z_linf = 0.0;  // max over times
    bool regime_ok = true;     // eps >= 2 (1 + eta)
    std::string note;
};

// Runs both Hamiltonians from one initial state and compares their phase
// distributions and <S_z> at each of `times`.
DiscrepancyReport validate_adiabatic(const DimensionlessParams& d, const SystemState& state, TruncatedSpace space,
                                     const std::vector<double>& times, const OracleOptions& opts = {},
                                     int grid_size = default_grid_size);

// Columns: t, trace_error, hermiticity_error, min_eigenvalue, leakage,
// spin_z, Re/Im <a>, then Re/Im Theta_nm for each requested (n, m).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::pair<int, int>>& elements);

}  // namespace oscar
