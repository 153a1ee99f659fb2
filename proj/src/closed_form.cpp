#include "oscar/closed_form.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "oscar/errors.hpp"

namespace oscar {

namespace {

constexpr double pole_tol = 1e-8;
constexpr cdouble I{0.0, 1.0};

}  // namespace

std::string_view to_string(ClosedFormVariant v) noexcept {
    return v == ClosedFormVariant::corrected ? "corrected" : "as_published";
}

ClosedFormTerms closed_form_terms(const DimensionlessParams& d, cdouble alpha, CoeffKey key,
                                  ClosedFormVariant variant) {
    key.validate();
    const auto bf = branch_frequency(d, key.branch);
    const double w = bf.omega;
    const cdouble W = bf.Omega;
    if (std::abs(w) < pole_tol || std::abs(std::abs(w) - 0.5) < pole_tol) {
        throw PoleError("gaussian_dynamics", fmt::format("closed form singular at omega = {}", w));
    }
    if (std::abs(1.0 + W) < pole_tol || std::abs(1.0 - W) < pole_tol) {
        throw PoleError("gaussian_dynamics", fmt::format("1 +- Omega vanishes at omega = {}", w));
    }

    const double k = d.kappa_over_gamma();
    const double N = d.N_th;
    const double dl = key.n - key.m;
    const double sg = key.n + key.m;
    const double ar = alpha.real(), ai = alpha.imag();
    const double w2 = w * w, w3 = w2 * w, w4 = w2 * w2, w5 = w4 * w;
    const bool fixed = variant == ClosedFormVariant::corrected;

    // s = +1 for F1, -1 for F2.
    auto f12 = [&](double s) {
        cdouble t = k * dl *
                    (-4.0 * I * N + 16.0 * I * N * w2 - s * 8.0 * I * w2 / W * (1.0 + 3.0 * N) +
                     s * 32.0 * I * w4 / W * (1.0 + N) + s * 4.0 * I * N / W);
        t += k * sg * (-2.0 * w + 8.0 * w3 + s * 2.0 * w / W - s * 8.0 * w3 / W);
        if (fixed) {
            t += ar * (4.0 * w2 - 16.0 * w4 - s * 4.0 * w2 / W + s * 16.0 * w4 / W);
            t += ai * (-s * 8.0 * w3 / W + s * 32.0 * w5 / W);
        } else {
            t += ar * (4.0 * w2 + s * 16.0 * w4 + 4.0 * w2 / W + s * 16.0 * w4 / W);
            t += ai * (8.0 * w3 / W + s * 32.0 * w5 / W);
        }
        return t;
    };

    ClosedFormTerms c;
    c.omega = w;
    c.Omega = W;
    c.F1 = f12(+1.0);
    c.F2 = f12(-1.0);
    c.F3 = k * dl * (-2.0 * I + 4.0 * I * w2 + 2.0 * I / W - 8.0 * I * w2 / W);
    c.F4 = k * dl * (-2.0 * I + 4.0 * I * w2 - 2.0 * I / W + 8.0 * I * w2 / W);
    c.F5 = (fixed ? -8.0 : 8.0) * I * w2 * k * dl;
    c.F6 = k * dl * (4.0 * I + 8.0 * I * N - 16.0 * I * w2 - 32.0 * I * w2 * N) + k * sg * (4.0 * w - 16.0 * w3);
    return c;
}

cdouble closed_form_increment(const ClosedFormTerms& c, double kappa_over_gamma, CoeffKey key, double tau) {
    const int dl = key.n - key.m;
    if (dl == 0 || kappa_over_gamma == 0.0) return 0.0;
    const cdouble W = c.Omega;
    const double w2 = c.omega * c.omega;
    // e^{x} - 1 without cancellation near tau = 0.
    auto em1 = [](cdouble x) {
        return std::abs(x) < 1e-5 ? x * (1.0 + x * (0.5 + x / 6.0)) : std::exp(x) - 1.0;
    };
    const cdouble brace = -2.0 * c.F1 / (1.0 + W) * em1(-(1.0 + W) * tau / 2.0) -
                          2.0 * c.F2 / (1.0 - W) * em1(-(1.0 - W) * tau / 2.0) -
                          c.F3 / (1.0 + W) * em1(-(1.0 + W) * tau) - c.F4 / (1.0 - W) * em1(-(1.0 - W) * tau) +
                          c.F5 * em1(cdouble(-tau)) + c.F6 * tau;
    return I * kappa_over_gamma * double(dl) / (4.0 * w2 - 16.0 * w2 * w2) * brace;
}

std::optional<GaussianCoeffs> evolve_closed_form(const DimensionlessParams& d, const SystemState& state, CoeffKey key,
                                                 double tau, ClosedFormVariant variant) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw ValidationError("gaussian_dynamics", fmt::format("tau must be finite and >= 0 (got {})", tau));
    }
    const auto F0 = initial_log_weight(state, key);
    if (!F0) return std::nullopt;
    const auto terms = closed_form_terms(d, state.alpha, key, variant);
    GaussianCoeffs out{};
    out.F = *F0 + closed_form_increment(terms, d.kappa_over_gamma(), key, tau);
    return out;
}

}  // namespace oscar
