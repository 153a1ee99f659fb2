#include "oscar/gaussian_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "oscar/closed_form.hpp"
#include "oscar/errors.hpp"
#include "oscar/ode.hpp"

namespace oscar {

namespace {

constexpr cdouble I{0.0, 1.0};

void require_tau(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw ValidationError("gaussian_dynamics", fmt::format("tau must be finite and >= 0 (got {})", tau));
    }
}

ode::StepLimits limits_for(double omega) {
    ode::StepLimits lim;
    lim.h_max = step_ceiling(omega);
    return lim;
}

// Runs the chosen scheme over [t0, t1].
template <class State, class Rhs>
void integrate(const IntegratorOptions& opts, double omega, Rhs&& rhs, State& y, double t0, double t1) {
    const ode::Tolerance tol{opts.rtol, opts.atol};
    double t = t0;
    if (opts.scheme == Scheme::dp5) {
        ode::DormandPrince5<State> stepper(tol, limits_for(omega));
        stepper.advance(rhs, y, t, t1);
    } else {
        ode::DormandPrince853<State> stepper(tol, limits_for(omega));
        stepper.advance(rhs, y, t, t1);
    }
}

using Vec6 = Eigen::Matrix<cdouble, 6, 1>;
using Vec12 = Eigen::Matrix<cdouble, 12, 1>;
using Mat13 = Eigen::Matrix<cdouble, 13, 13>;

BranchSolution::Vector to_array(const Vec12& v) {
    BranchSolution::Vector out;
    for (int i = 0; i < 12; ++i) out[i] = v[i];
    return out;
}

Vec12 branch_start(const DimensionlessParams& d, cdouble alpha) {
    Vec12 y = Vec12::Zero();
    y[0] = std::conj(alpha);
    y[3] = -alpha;
    y[6] = -(d.N_th + 0.5);
    return y;
}

// Constant-coefficient form y' = M y + b of the decomposed system, with b
// stored in column 12 against a constant unit component.
Mat13 branch_generator(const DimensionlessParams& d, double w) {
    const double k = d.kappa_over_gamma();
    const double N = d.N_th;
    const cdouble a_diag = I * w - 0.5;
    const cdouble b_diag = -(I * w + 0.5);
    Mat13 M = Mat13::Zero();
    for (int j = 0; j < 3; ++j) {
        M(j, j) = a_diag;
        M(j, 3 + j) = -0.5;
        M(3 + j, j) = -0.5;
        M(3 + j, 3 + j) = b_diag;
        M(9 + j, j) = 1.0;
        M(9 + j, 3 + j) = -1.0;
    }
    // A1: -ik(C - D); A2: +ik(C - D) - ik
    M(1, 6) = -I * k;
    M(1, 7) = I * k;
    M(2, 6) = I * k;
    M(2, 7) = -I * k;
    M(2, 12) = -I * k;
    // B1: +ik(C - E) - ik; B2: -ik(C - E)
    M(4, 6) = I * k;
    M(4, 8) = -I * k;
    M(4, 12) = -I * k;
    M(5, 6) = -I * k;
    M(5, 8) = I * k;
    // C, D, E
    M(6, 6) = -1.0;
    M(6, 7) = -0.5;
    M(6, 8) = -0.5;
    M(6, 12) = -N;
    M(7, 6) = -1.0;
    M(7, 7) = 2.0 * I * w - 1.0;
    M(7, 12) = -N;
    M(8, 6) = -1.0;
    M(8, 8) = -(2.0 * I * w + 1.0);
    M(8, 12) = -N;
    return M;
}

}  // namespace

void CoeffKey::validate() const {
    if (n < 0 || m < 0) {
        throw ValidationError("gaussian_dynamics", fmt::format("Fock indices must be >= 0 (got n={}, m={})", n, m));
    }
}

std::optional<cdouble> initial_log_weight(const SystemState& state, CoeffKey key) {
    key.validate();
    const double w = state.weight(key.branch);
    if (w <= 0.0) return std::nullopt;
    const cdouble beta = state.beta;
    cdouble F = std::log(w) - std::norm(beta);
    if (key.n + key.m > 0) {
        if (beta == 0.0) return std::nullopt;
        const cdouble lb = std::log(beta);
        F += double(key.n) * lb + double(key.m) * std::conj(lb);
        F -= 0.5 * (std::lgamma(key.n + 1.0) + std::lgamma(key.m + 1.0));
    }
    return F;
}

std::optional<GaussianCoeffs> initial_coeffs(const DimensionlessParams& d, const SystemState& state, CoeffKey key) {
    const auto F0 = initial_log_weight(state, key);
    if (!F0) return std::nullopt;
    GaussianCoeffs c;
    c.A = std::conj(state.alpha);
    c.B = -state.alpha;
    c.C = -(d.N_th + 0.5);
    c.D = 0.0;
    c.E = 0.0;
    c.F = *F0;
    return c;
}

double step_ceiling(double omega) {
    const double w = std::abs(omega);
    return w > 0.0 ? std::min(0.05, 0.1 * 2.0 * M_PI / w) : 0.05;
}

double estimated_steps(double omega, double tau) { return tau / step_ceiling(omega); }

GaussianCoeffs evolve_ode(const DimensionlessParams& d, CoeffKey key, const GaussianCoeffs& start, double tau,
                          const IntegratorOptions& opts) {
    key.validate();
    require_tau(tau);
    if (tau == 0.0) return start;
    const double w = branch_frequency(d, key.branch).omega;
    const double k = d.kappa_over_gamma();
    const double N = d.N_th;
    const double dl = key.n - key.m;
    const double n = key.n, m = key.m;

    auto rhs = [=](double, const Vec6& y, Vec6& f) {
        const cdouble A = y[0], B = y[1], C = y[2], D = y[3], E = y[4];
        f[0] = (I * w - 0.5) * A - 0.5 * B - I * k * dl * (C - D) - I * k * m;
        f[1] = -0.5 * A - (I * w + 0.5) * B + I * k * dl * (C - E) - I * k * n;
        f[2] = -C - 0.5 * (D + E) - N;
        f[3] = -C + (2.0 * I * w - 1.0) * D - N;
        f[4] = -C - (2.0 * I * w + 1.0) * E - N;
        f[5] = I * k * dl * (A - B);
    };
    Vec6 y;
    y << start.A, start.B, start.C, start.D, start.E, start.F;
    integrate(opts, w, rhs, y, 0.0, tau);
    return {y[0], y[1], y[2], y[3], y[4], y[5]};
}

std::optional<GaussianCoeffs> evolve_ode(const DimensionlessParams& d, const SystemState& state, CoeffKey key,
                                         double tau, const IntegratorOptions& opts) {
    const auto c0 = initial_coeffs(d, state, key);
    if (!c0) return std::nullopt;
    return evolve_ode(d, key, *c0, tau, opts);
}

std::string_view to_string(EvolutionMethod m) noexcept {
    switch (m) {
        case EvolutionMethod::automatic: return "automatic";
        case EvolutionMethod::ode: return "ode";
        case EvolutionMethod::propagator: return "propagator";
        case EvolutionMethod::closed_form: return "closed_form";
    }
    return "automatic";
}

EvolutionMethod parse_evolution_method(std::string_view s) {
    for (auto m : {EvolutionMethod::automatic, EvolutionMethod::ode, EvolutionMethod::propagator,
                   EvolutionMethod::closed_form}) {
        if (s == to_string(m)) return m;
    }
    throw ValidationError("gaussian_dynamics", fmt::format("unknown evolution method '{}'", s));
}

EvolutionMethod resolve_method(EvolutionMethod m, double omega, double tau_max) {
    if (m != EvolutionMethod::automatic) return m;
    return estimated_steps(omega, tau_max) > automatic_step_budget ? EvolutionMethod::propagator
                                                                   : EvolutionMethod::ode;
}

cdouble BranchSolution::delta_F(double kappa_over_gamma, int n, int m) const noexcept {
    if (n == m) return 0.0;
    return I * kappa_over_gamma * double(n - m) * G(n, m);
}

GaussianCoeffs BranchSolution::coeffs(double kappa_over_gamma, int n, int m, cdouble F0) const noexcept {
    return {A(n, m), B(n, m), C(), D(), E(), F0 + delta_F(kappa_over_gamma, n, m)};
}

std::vector<BranchSolution> solve_branch(const DimensionlessParams& d, Branch branch, cdouble alpha,
                                         const std::vector<double>& taus, EvolutionMethod method,
                                         const IntegratorOptions& opts) {
    for (double t : taus) require_tau(t);
    const double w = branch_frequency(d, branch).omega;
    const double tau_max = taus.empty() ? 0.0 : *std::max_element(taus.begin(), taus.end());
    method = resolve_method(method, w, tau_max);
    if (method == EvolutionMethod::closed_form) {
        throw ValidationError("gaussian_dynamics", "solve_branch needs method ode, propagator or automatic");
    }

    std::vector<std::size_t> order(taus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return taus[a] < taus[b]; });

    const Vec12 y0 = branch_start(d, alpha);
    std::vector<BranchSolution> out(taus.size(), BranchSolution(branch, 0.0, to_array(y0)));

    if (method == EvolutionMethod::propagator) {
        const Mat13 M = branch_generator(d, w);
        Eigen::Matrix<cdouble, 13, 1> z0;
        z0.head<12>() = y0;
        z0[12] = 1.0;
        for (std::size_t i : order) {
            const Mat13 Phi = (M * taus[i]).exp();
            const Eigen::Matrix<cdouble, 13, 1> z = Phi * z0;
            out[i] = BranchSolution(branch, taus[i], to_array(z.head<12>()));
        }
        return out;
    }

    const Mat13 M = branch_generator(d, w);
    const Eigen::Matrix<cdouble, 12, 12> Mh = M.topLeftCorner<12, 12>();
    const Vec12 b = M.col(12).head<12>();
    auto rhs = [&](double, const Vec12& y, Vec12& f) { f.noalias() = Mh * y + b; };
    Vec12 y = y0;
    double t = 0.0;
    for (std::size_t i : order) {
        integrate(opts, w, rhs, y, t, taus[i]);
        t = std::max(t, taus[i]);
        out[i] = BranchSolution(branch, taus[i], to_array(y));
    }
    return out;
}

cdouble theta_at_origin(const DimensionlessParams& d, const SystemState& state, CoeffKey key, double tau,
                        EvolutionMethod method, const IntegratorOptions& opts) {
    require_tau(tau);
    const auto F0 = initial_log_weight(state, key);
    if (!F0) return 0.0;
    const double w = branch_frequency(d, key.branch).omega;
    switch (resolve_method(method, w, tau)) {
        case EvolutionMethod::closed_form:
            return std::exp(evolve_closed_form(d, state, key, tau, ClosedFormVariant::corrected)->F);
        case EvolutionMethod::propagator: {
            const auto sol = solve_branch(d, key.branch, state.alpha, {tau}, EvolutionMethod::propagator, opts);
            return std::exp(*F0 + sol.front().delta_F(d.kappa_over_gamma(), key.n, key.m));
        }
        default:
            return std::exp(evolve_ode(d, state, key, tau, opts)->F);
    }
}

std::vector<CoeffSample> coefficient_trajectory(const DimensionlessParams& d, const SystemState& state,
                                                CoeffKey key, const std::vector<double>& taus,
                                                const IntegratorOptions& opts) {
    std::vector<CoeffSample> out;
    auto c = initial_coeffs(d, state, key);
    if (!c) return out;
    std::vector<double> sorted = taus;
    std::sort(sorted.begin(), sorted.end());
    double t = 0.0;
    for (double tau : sorted) {
        require_tau(tau);
        // Restarting from the previous sample is exact: the system is autonomous.
        *c = evolve_ode(d, key, *c, tau - t, opts);
        t = tau;
        out.push_back({tau, key, *c});
    }
    return out;
}

void write_coefficients_csv(std::ostream& os, const std::vector<CoeffSample>& samples) {
    os << "tau,branch,n,m,A_re,A_im,B_re,B_im,C_re,C_im,D_re,D_im,E_re,E_im,F_re,F_im\n";
    for (const auto& s : samples) {
        const auto& c = s.coeffs;
        os << fmt::format("{:.12g},{},{},{}", s.tau, to_string(s.key.branch), s.key.n, s.key.m);
        for (cdouble z : {c.A, c.B, c.C, c.D, c.E, c.F}) os << fmt::format(",{:.12g},{:.12g}", z.real(), z.imag());
        os << '\n';
    }
}

}  // namespace oscar
