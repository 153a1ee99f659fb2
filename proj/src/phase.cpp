#include "oscar/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "oscar/errors.hpp"

namespace oscar {

namespace {

constexpr double two_pi = 2.0 * M_PI;

void require_grid(int size) {
    if (size < min_grid_size) {
        throw ValidationError("phase", fmt::format("grid size must be >= {} (got {})", min_grid_size, size));
    }
}

struct BranchPlan {
    Branch branch;
    double weight;
    EvolutionMethod method;
};

std::vector<BranchPlan> plan_branches(const DimensionlessParams& d, const SystemState& state, double tau_max,
                                      EvolutionMethod method) {
    std::vector<BranchPlan> plans;
    for (Branch b : {Branch::e, Branch::g}) {
        const double w = state.weight(b);
        if (w <= 0.0) continue;
        plans.push_back({b, w, resolve_method(method, branch_frequency(d, b).omega, tau_max)});
    }
    return plans;
}

// Adds one branch's Theta_nm to `theta` (row-major, (n_max+1)^2).
void accumulate_branch(const DimensionlessParams& d, const SystemState& state, Branch b, int n_max,
                       const BranchSolution* sol, double tau, std::vector<cdouble>& theta) {
    const int dim = n_max + 1;
    const double k = d.kappa_over_gamma();
    for (int n = 0; n < dim; ++n) {
        for (int m = 0; m < dim; ++m) {
            const CoeffKey key{n, m, b};
            const auto F0 = initial_log_weight(state, key);
            if (!F0) continue;
            cdouble dF = 0.0;
            if (n != m) {
                if (sol) {
                    dF = sol->delta_F(k, n, m);
                } else {
                    const auto terms = closed_form_terms(d, state.alpha, key, ClosedFormVariant::corrected);
                    dF = closed_form_increment(terms, k, key, tau);
                }
            }
            theta[std::size_t(n) * dim + m] += std::exp(*F0 + dF);
        }
    }
}

std::vector<std::vector<cdouble>> theta_matrices(const DimensionlessParams& d, const SystemState& state,
                                                 const std::vector<double>& taus, int n_max,
                                                 const std::vector<BranchPlan>& plans,
                                                 const IntegratorOptions& opts) {
    const std::size_t dim = std::size_t(n_max) + 1;
    std::vector<std::vector<cdouble>> out(taus.size(), std::vector<cdouble>(dim * dim, 0.0));
    for (const auto& p : plans) {
        if (p.method == EvolutionMethod::closed_form) {
            for (std::size_t i = 0; i < taus.size(); ++i) {
                accumulate_branch(d, state, p.branch, n_max, nullptr, taus[i], out[i]);
            }
            continue;
        }
        const auto sols = solve_branch(d, p.branch, state.alpha, taus, p.method, opts);
        for (std::size_t i = 0; i < taus.size(); ++i) {
            accumulate_branch(d, state, p.branch, n_max, &sols[i], taus[i], out[i]);
        }
    }
    return out;
}

}  // namespace

Truncation truncation_for(cdouble beta, std::optional<int> n_max_override) {
    const double b = std::abs(beta);
    Truncation t;
    t.n_max = n_max_override ? *n_max_override : int(std::ceil(b * b + 8.0 * b + 10.0));
    if (t.n_max < 0) throw ValidationError("phase", fmt::format("n_max must be >= 0 (got {})", t.n_max));
    if (b > 0.0) {
        // Poisson terms beyond n_max, summed in log space until negligible.
        const double lb2 = 2.0 * std::log(b);
        double tail = 0.0;
        for (int n = t.n_max + 1;; ++n) {
            const double term = std::exp(-b * b + n * lb2 - std::lgamma(n + 1.0));
            tail += term;
            if (n > b * b && term < 1e-30 * std::max(tail, 1e-300)) break;
            if (n > t.n_max + 100000) break;
        }
        t.tail = tail;
    }
    if (t.tail > max_truncation_tail) {
        throw TruncationError("phase", fmt::format("Poisson tail {:.3g} above {:.0e} at n_max = {} for |beta| = {}",
                                                   t.tail, max_truncation_tail, t.n_max, b));
    }
    return t;
}

std::vector<double> theta_grid(int size) {
    require_grid(size);
    std::vector<double> g(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) g[std::size_t(i)] = -M_PI + two_pi * i / size;
    return g;
}

double PhaseDistribution::step() const { return thetas.empty() ? 0.0 : two_pi / double(thetas.size()); }

double PhaseDistribution::integral() const {
    double s = 0.0;
    for (double v : raw) s += v;
    return s * step();
}

PhaseDistribution assemble_phase(const std::vector<cdouble>& rho, int n_max, int grid_size) {
    const std::size_t dim = std::size_t(n_max) + 1;
    if (rho.size() != dim * dim) {
        throw DimensionError("phase", fmt::format("field matrix has {} entries, expected {}", rho.size(), dim * dim));
    }
    PhaseDistribution out;
    out.thetas = theta_grid(grid_size);
    out.values.resize(out.thetas.size());
    out.raw.resize(out.thetas.size());
    out.meta.n_max = n_max;
    out.meta.min_raw = std::numeric_limits<double>::infinity();

    std::vector<cdouble> u(dim);
    for (std::size_t i = 0; i < out.thetas.size(); ++i) {
        // P = (1/2pi) sum_nm z^n conj(z)^m rho_nm with z = e^{-i theta}.
        const cdouble z = std::polar(1.0, -out.thetas[i]);
        u[0] = 1.0;
        for (std::size_t n = 1; n < dim; ++n) u[n] = u[n - 1] * z;
        cdouble sum = 0.0;
        for (std::size_t n = 0; n < dim; ++n) {
            cdouble row = 0.0;
            for (std::size_t m = 0; m < dim; ++m) row += rho[n * dim + m] * std::conj(u[m]);
            sum += u[n] * row;
        }
        sum /= two_pi;
        out.raw[i] = sum.real();
        out.values[i] = std::max(0.0, sum.real());
        out.meta.max_imag_residue = std::max(out.meta.max_imag_residue, std::abs(sum.imag()));
        out.meta.min_raw = std::min(out.meta.min_raw, sum.real());
    }
    double trace = 0.0;
    for (std::size_t n = 0; n < dim; ++n) trace += rho[n * dim + n].real();
    out.meta.trace = trace;
    return out;
}

std::vector<cdouble> field_theta_matrix(const DimensionlessParams& d, const SystemState& state, double tau,
                                        int n_max, EvolutionMethod method, const IntegratorOptions& opts) {
    const auto plans = plan_branches(d, state, tau, method);
    return theta_matrices(d, state, {tau}, n_max, plans, opts).front();
}

std::vector<PhaseDistribution> phase_distributions(const DimensionlessParams& d, const SystemState& state,
                                                   const std::vector<Time>& times, const PhaseOptions& opts) {
    d.validate();
    state.validate();
    require_grid(opts.grid_size);
    const Truncation trunc = truncation_for(state.beta, opts.n_max_override);

    std::vector<double> taus;
    for (const Time& t : times) taus.push_back(t.tau(d.gamma));
    const double tau_max = taus.empty() ? 0.0 : *std::max_element(taus.begin(), taus.end());
    const auto plans = plan_branches(d, state, tau_max, opts.method);
    const auto mats = theta_matrices(d, state, taus, trunc.n_max, plans, opts.integrator);

    std::vector<PhaseDistribution> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        auto dist = assemble_phase(mats[i], trunc.n_max, opts.grid_size);
        dist.tau = taus[i];
        dist.meta.time = times[i];
        dist.meta.tail = trunc.tail;
        for (const auto& p : plans) {
            (p.branch == Branch::e ? dist.meta.method_e : dist.meta.method_g) = std::string(to_string(p.method));
        }
        out.push_back(std::move(dist));
    }
    return out;
}

PhaseDistribution phase_distribution(const DimensionlessParams& d, const SystemState& state, Time time,
                                     const PhaseOptions& opts) {
    return phase_distributions(d, state, {time}, opts).front();
}

}  // namespace oscar
