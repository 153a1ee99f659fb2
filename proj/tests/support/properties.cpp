#include "properties.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "oscar/phase.hpp"
#include "reference.hpp"

namespace props {

namespace {

using namespace oscar;

// Parameter draw kept cheap for the ODE route: omega <= ~1e3, tau <= 5.
struct Draw {
    DimensionlessParams d;
    SystemState state;
    double tau;
};

Draw draw(ref::Rng& r) {
    Draw x;
    x.d = DimensionlessParams::scaled(r.log_uniform(1e-3, 1e-1), r.uniform(-0.6, 0.6), r.uniform(0.0, 0.2),
                                      r.uniform(0.0, 50.0));
    x.state.alpha = r.complex_in_disc(5.0);
    x.state.beta = r.complex_in_disc(2.5);
    x.state.w_e = r.uniform(0.0, 1.0);
    x.state.w_g = 1.0 - x.state.w_e;
    x.tau = r.uniform(0.0, 5.0);
    return x;
}

void record(Result& res, double violation, const std::string& where) {
    ++res.cases;
    res.worst = std::max(res.worst, violation);
    if (!(violation <= res.tolerance)) {
        if (res.failures == 0) res.first_failure = where;
        ++res.failures;
    }
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

Result diagonal_conservation(int cases, std::uint64_t seed) {
    Result res{"diagonal Theta_nn conservation", 0, 0, 0.0, 1e-12, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        const auto x = draw(r);
        const int n_max = truncation_for(x.state.beta).n_max;
        const auto now = field_theta_matrix(x.d, x.state, x.tau, n_max);
        const auto start = field_theta_matrix(x.d, x.state, 0.0, n_max);
        double v = 0.0;
        for (int n = 0; n <= n_max; ++n) {
            const std::size_t idx = std::size_t(n) * (n_max + 1) + n;
            v = std::max(v, std::abs(now[idx] - start[idx]));
        }
        record(res, v, fmt::format("case {} tau={}", i, x.tau));
    }
    return res;
}

Result kappa_zero_stasis(int cases, std::uint64_t seed) {
    Result res{"kappa = 0 distribution stasis", 0, 0, 0.0, 1e-12, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        auto x = draw(r);
        x.d.kappa = 0.0;
        PhaseOptions o;
        o.grid_size = 128;
        const auto p = phase_distributions(x.d, x.state, {Time::scaled(0.0), Time::scaled(x.tau)}, o);
        record(res, linf(p[0].raw, p[1].raw), fmt::format("case {}", i));
    }
    return res;
}

Result beta_zero_uniformity(int cases, std::uint64_t seed) {
    Result res{"beta = 0 uniformity", 0, 0, 0.0, 1e-14, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        auto x = draw(r);
        x.state.beta = 0.0;
        PhaseOptions o;
        o.grid_size = 64 + 8 * r.integer(0, 8);
        const auto p = phase_distribution(x.d, x.state, Time::scaled(x.tau), o);
        const std::vector<double> uniform(p.raw.size(), 1.0 / (2.0 * M_PI));
        const double v = std::max(linf(p.raw, uniform), double(find_peaks(p).size()));
        record(res, v, fmt::format("case {}", i));
    }
    return res;
}

Result chi_branch_mirror(int cases, std::uint64_t seed) {
    Result res{"branch chi -> -chi mirror", 0, 0, 0.0, 1e-10, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        const auto x = draw(r);
        auto flipped = x.d;
        flipped.chi = -x.d.chi;
        const int n = r.integer(0, 6), m = r.integer(0, 6);
        const auto se = SystemState::eigenstate_e(x.state.alpha, x.state.beta);
        const auto sg = SystemState::eigenstate_g(x.state.alpha, x.state.beta);
        const cdouble te = theta_at_origin(x.d, se, {n, m, Branch::e}, x.tau);
        const cdouble tg = theta_at_origin(flipped, sg, {n, m, Branch::g}, x.tau);
        record(res, std::abs(te - tg) / std::max(1e-300, std::abs(te)), fmt::format("case {} n={} m={}", i, n, m));
    }
    return res;
}

Result global_phase_covariance(int cases, std::uint64_t seed) {
    Result res{"global-phase covariance", 0, 0, 0.0, 1e-12, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        const auto x = draw(r);
        PhaseOptions o;
        o.grid_size = 128;
        // A shift by whole grid steps maps grid points onto grid points.
        const int shift = r.integer(1, o.grid_size - 1);
        const double phi = 2.0 * M_PI * shift / o.grid_size;
        auto rotated = x.state;
        rotated.beta = x.state.beta * std::polar(1.0, phi);
        const auto p = phase_distribution(x.d, x.state, Time::scaled(x.tau), o);
        const auto q = phase_distribution(x.d, rotated, Time::scaled(x.tau), o);
        double v = 0.0;
        for (int j = 0; j < o.grid_size; ++j) {
            const int src = ((j - shift) % o.grid_size + o.grid_size) % o.grid_size;
            v = std::max(v, std::abs(q.raw[std::size_t(j)] - p.raw[std::size_t(src)]));
        }
        record(res, v, fmt::format("case {} phi={}", i, phi));
    }
    return res;
}

Result affine_structure(int cases, std::uint64_t seed) {
    Result res{"affine (n, m) structure of A, B", 0, 0, 0.0, 1e-8, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        const auto x = draw(r);
        const Branch b = r.integer(0, 1) ? Branch::e : Branch::g;
        const int n = r.integer(0, 6), m = r.integer(0, 6);
        GaussianCoeffs start{std::conj(x.state.alpha), -x.state.alpha, cdouble(-(x.d.N_th + 0.5)), 0.0, 0.0, 0.0};
        auto at = [&](int nn, int mm) { return evolve_ode(x.d, {nn, mm, b}, start, x.tau); };
        const auto c00 = at(0, 0), c10 = at(1, 0), c01 = at(0, 1), cnm = at(n, m);
        const cdouble A_aff = c00.A + double(n) * (c10.A - c00.A) + double(m) * (c01.A - c00.A);
        const cdouble B_aff = c00.B + double(n) * (c10.B - c00.B) + double(m) * (c01.B - c00.B);
        const double scale = 1.0 + std::abs(cnm.A) + std::abs(cnm.B);
        const double v = (std::abs(cnm.A - A_aff) + std::abs(cnm.B - B_aff)) / scale;
        record(res, v, fmt::format("case {} n={} m={}", i, n, m));
    }
    return res;
}

Result conjugation_symmetry(int cases, std::uint64_t seed) {
    Result res{"Theta_mn = conj(Theta_nm)", 0, 0, 0.0, 1e-12, {}};
    ref::Rng r(seed);
    for (int i = 0; i < cases; ++i) {
        const auto x = draw(r);
        const int n_max = truncation_for(x.state.beta).n_max;
        const auto th = field_theta_matrix(x.d, x.state, x.tau, n_max);
        const std::size_t dim = std::size_t(n_max) + 1;
        double v = 0.0;
        for (std::size_t n = 0; n < dim; ++n) {
            for (std::size_t m = 0; m < dim; ++m) v = std::max(v, std::abs(th[m * dim + n] - std::conj(th[n * dim + m])));
        }
        record(res, v, fmt::format("case {}", i));
    }
    return res;
}

std::vector<Result> all(int cases, std::uint64_t seed) {
    return {diagonal_conservation(cases, seed + 1), kappa_zero_stasis(cases, seed + 2),
            beta_zero_uniformity(cases, seed + 3),  chi_branch_mirror(cases, seed + 4),
            global_phase_covariance(cases, seed + 5), affine_structure(cases, seed + 6),
            conjugation_symmetry(cases, seed + 7)};
}

}  // namespace props
