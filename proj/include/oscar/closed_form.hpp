#pragma once

#include <optional>
#include <string_view>

#include "oscar/gaussian_dynamics.hpp"

namespace oscar {

// Analytic F(tau):
//   F = F(0) + i k (n-m)/(4w^2 - 16w^4) * { -2 F1/(1+W) [e^{-(1+W)tau/2} - 1]
//         - 2 F2/(1-W) [e^{-(1-W)tau/2} - 1] - F3/(1+W) [e^{-(1+W)tau} - 1]
//         - F4/(1-W) [e^{-(1-W)tau} - 1] + F5 [e^{-tau} - 1] + F6 tau }
// with k = kappa/gamma, W = Omega.
//
// `as_published` keeps the coefficient set in its commonly quoted form.
// `corrected` fixes three sign slips found by matching the coefficient ODEs
// (see docs/closed_form.md): the Re(alpha) and Im(alpha) brackets of F1 and
// the sign of F5.
enum class ClosedFormVariant { as_published, corrected };

std::string_view to_string(ClosedFormVariant v) noexcept;

struct ClosedFormTerms {
    cdouble F1, F2, F3, F4, F5, F6;
    cdouble Omega;
    double omega = 0.0;
};

// Throws PoleError when omega is within 1e-8 of 0 or +-1/2, or when
// |1 +- Omega| < 1e-8.
ClosedFormTerms closed_form_terms(const DimensionlessParams& d, cdouble alpha, CoeffKey key,
                                  ClosedFormVariant variant = ClosedFormVariant::as_published);

// F(tau) - F(0).
cdouble closed_form_increment(const ClosedFormTerms& terms, double kappa_over_gamma, CoeffKey key, double tau);

// Coefficients with only F populated (A..E are left at zero; only F enters
// Theta at lambda = 0). nullopt for absent terms.
std::optional<GaussianCoeffs> evolve_closed_form(const DimensionlessParams& d, const SystemState& state, CoeffKey key,
                                                 double tau,
                                                 ClosedFormVariant variant = ClosedFormVariant::as_published);

}  // namespace oscar
