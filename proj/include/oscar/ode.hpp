#pragma once

// Embedded explicit Runge-Kutta integrators for complex Eigen states.
// Step control follows Hairer, Norsett & Wanner (Solving ODEs I, II.4/II.10).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "oscar/errors.hpp"

namespace oscar::ode {

struct Tolerance {
    double rtol = 1e-9;
    double atol = 1e-12;
};

struct StepLimits {
    double h_max = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 200'000'000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

namespace detail {

// sum_i (e_i / (atol + rtol max(|y0_i|, |y1_i|)))^2
template <class S>
double scaled_sq(const S& e, const S& y0, const S& y1, const Tolerance& tol) {
    // abs2 + sqrt vectorises; complex abs goes through hypot.
    const auto scale = tol.atol + tol.rtol * y0.array().abs2().max(y1.array().abs2()).sqrt();
    return (e.array().abs2() / scale.square()).sum();
}

template <class S>
double scaled_rms(const S& v, const Tolerance& tol, const S& y) {
    return std::sqrt((v.array().abs() / (tol.atol + tol.rtol * y.array().abs())).square().sum() /
                     static_cast<double>(v.size()));
}

// Starting step after Hairer's HINIT.
template <class S, class Rhs>
double initial_step(Rhs& rhs, double t, const S& y, const S& f0, double span, int order, const Tolerance& tol,
                    double h_max, Stats& stats) {
    const double d0 = scaled_rms(y, tol, y);
    const double d1 = scaled_rms(f0, tol, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, h_max, span});
    S y1 = y + h0 * f0;
    S f1 = f0;
    rhs(t + h0, y1, f1);
    ++stats.rhs_evals;
    const double d2 = scaled_rms(S(f1 - f0), tol, y) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / (order + 1));
    return std::min({100.0 * h0, h1, h_max, span});
}

}  // namespace detail

// Dormand-Prince 5(4) with FSAL. `rhs(t, y, dydt)` writes the derivative.
template <class State>
class DormandPrince5 {
public:
    explicit DormandPrince5(Tolerance tol = {}, StepLimits limits = {}) : tol_(tol), limits_(limits) {}

    template <class Rhs>
    void advance(Rhs&& rhs, State& y, double& t, double t_end) {
        if (t_end <= t) return;
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;

        State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, tmp = y, y_new = y;
        rhs(t, y, k1);
        ++stats_.rhs_evals;
        if (h_ <= 0.0) h_ = detail::initial_step(rhs, t, y, k1, t_end - t, 5, tol_, limits_.h_max, stats_);

        bool last_rejected = false;
        while (t < t_end) {
            check_budget(t);
            double h = std::min(h_, limits_.h_max);
            const bool final_step = t + h >= t_end;
            if (final_step) h = t_end - t;

            tmp = y + h * a21 * k1;
            rhs(t + c2 * h, tmp, k2);
            tmp = y + h * (a31 * k1 + a32 * k2);
            rhs(t + c3 * h, tmp, k3);
            tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs(t + c4 * h, tmp, k4);
            tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs(t + c5 * h, tmp, k5);
            tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs(t + h, tmp, k6);
            y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs(t + h, y_new, k7);
            stats_.rhs_evals += 6;

            tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double err = std::sqrt(detail::scaled_sq(tmp, y, y_new, tol_) / static_cast<double>(y.size()));

            if (err <= 1.0) {
                ++stats_.accepted;
                t = final_step ? t_end : t + h;
                y = y_new;
                k1 = k7;
                double fac = err == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 10.0);
                if (last_rejected) fac = std::min(fac, 1.0);
                // Keep the controller's step when the last step was shortened to land on t_end.
                if (!final_step) h_ = h * fac;
                last_rejected = false;
            } else {
                ++stats_.rejected;
                h_ = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
                last_rejected = true;
            }
        }
    }

    const Stats& stats() const noexcept { return stats_; }

private:
    void check_budget(double t) const {
        if (stats_.accepted + stats_.rejected > limits_.max_steps) {
            throw IntegrationError("ode", fmt::format("step budget of {} exhausted at t = {}", limits_.max_steps, t));
        }
        if (h_ < 1e-14 * std::max(1.0, std::abs(t))) {
            throw IntegrationError("ode", fmt::format("step size underflow (h = {}) at t = {}", h_, t));
        }
    }

    Tolerance tol_;
    StepLimits limits_;
    Stats stats_;
    double h_ = 0.0;
};

// Dormand-Prince 8(5,3): eighth-order solution, error from the combined
// fifth- and third-order estimators.
template <class State>
class DormandPrince853 {
public:
    explicit DormandPrince853(Tolerance tol = {}, StepLimits limits = {}) : tol_(tol), limits_(limits) {}

    template <class Rhs>
    void advance(Rhs&& rhs, State& y, double& t, double t_end) {
        if (t_end <= t) return;
        constexpr double c2 = 0.526001519587677318785587544488e-01;
        constexpr double c3 = 0.789002279381515978178381316732e-01;
        constexpr double c4 = 0.118350341907227396726757197510e+00;
        constexpr double c5 = 0.281649658092772603273242802490e+00;
        constexpr double c6 = 0.333333333333333333333333333333e+00;
        constexpr double c7 = 0.25e+00;
        constexpr double c8 = 0.307692307692307692307692307692e+00;
        constexpr double c9 = 0.651282051282051282051282051282e+00;
        constexpr double c10 = 0.6e+00;
        constexpr double c11 = 0.857142857142857142857142857142e+00;

        constexpr double a21 = 5.26001519587677318785587544488e-2;
        constexpr double a31 = 1.97250569845378994544595329183e-2;
        constexpr double a32 = 5.91751709536136983633785987549e-2;
        constexpr double a41 = 2.95875854768068491816892993775e-2;
        constexpr double a43 = 8.87627564304205475450678981324e-2;
        constexpr double a51 = 2.41365134159266685502369798665e-1;
        constexpr double a53 = -8.84549479328286085344864962717e-1;
        constexpr double a54 = 9.24834003261792003115737966543e-1;
        constexpr double a61 = 3.7037037037037037037037037037e-2;
        constexpr double a64 = 1.70828608729473871279604482173e-1;
        constexpr double a65 = 1.25467687566822425016691814123e-1;
        constexpr double a71 = 3.7109375e-2;
        constexpr double a74 = 1.70252211019544039314978060272e-1;
        constexpr double a75 = 6.02165389804559606850219397283e-2;
        constexpr double a76 = -1.7578125e-2;
        constexpr double a81 = 3.70920001185047927108779319836e-2;
        constexpr double a84 = 1.70383925712239993810214054705e-1;
        constexpr double a85 = 1.07262030446373284651809199168e-1;
        constexpr double a86 = -1.53194377486244017527936158236e-2;
        constexpr double a87 = 8.27378916381402288758473766002e-3;
        constexpr double a91 = 6.24110958716075717114429577812e-1;
        constexpr double a94 = -3.36089262944694129406857109825e0;
        constexpr double a95 = -8.68219346841726006818189891453e-1;
        constexpr double a96 = 2.75920996994467083049415600797e1;
        constexpr double a97 = 2.01540675504778934086186788979e1;
        constexpr double a98 = -4.34898841810699588477366255144e1;
        constexpr double a101 = 4.77662536438264365890433908527e-1;
        constexpr double a104 = -2.48811461997166764192642586468e0;
        constexpr double a105 = -5.90290826836842996371446475743e-1;
        constexpr double a106 = 2.12300514481811942347288949897e1;
        constexpr double a107 = 1.52792336328824235832596922938e1;
        constexpr double a108 = -3.32882109689848629194453265587e1;
        constexpr double a109 = -2.03312017085086261358222928593e-2;
        constexpr double a111 = -9.3714243008598732571704021658e-1;
        constexpr double a114 = 5.18637242884406370830023853209e0;
        constexpr double a115 = 1.09143734899672957818500254654e0;
        constexpr double a116 = -8.14978701074692612513997267357e0;
        constexpr double a117 = -1.85200656599969598641566180701e1;
        constexpr double a118 = 2.27394870993505042818970056734e1;
        constexpr double a119 = 2.49360555267965238987089396762e0;
        constexpr double a1110 = -3.0467644718982195003823669022e0;
        constexpr double a121 = 2.27331014751653820792359768449e0;
        constexpr double a124 = -1.05344954667372501984066689879e1;
        constexpr double a125 = -2.00087205822486249909675718444e0;
        constexpr double a126 = -1.79589318631187989172765950534e1;
        constexpr double a127 = 2.79488845294199600508499808837e1;
        constexpr double a128 = -2.85899827713502369474065508674e0;
        constexpr double a129 = -8.87285693353062954433549289258e0;
        constexpr double a1210 = 1.23605671757943030647266201528e1;
        constexpr double a1211 = 6.43392746015763530355970484046e-1;

        constexpr double b1 = 5.42937341165687622380535766363e-2;
        constexpr double b6 = 4.45031289275240888144113950566e0;
        constexpr double b7 = 1.89151789931450038304281599044e0;
        constexpr double b8 = -5.8012039600105847814672114227e0;
        constexpr double b9 = 3.1116436695781989440891606237e-1;
        constexpr double b10 = -1.52160949662516078556178806805e-1;
        constexpr double b11 = 2.01365400804030348374776537501e-1;
        constexpr double b12 = 4.47106157277725905176885569043e-2;

        constexpr double bhh1 = 0.244094488188976377952755905512e+00;
        constexpr double bhh2 = 0.733846688281611857341361741547e+00;
        constexpr double bhh3 = 0.220588235294117647058823529412e-01;

        constexpr double er1 = 0.1312004499419488073250102996e-01;
        constexpr double er6 = -0.1225156446376204440720569753e+01;
        constexpr double er7 = -0.4957589496572501915214079952e+00;
        constexpr double er8 = 0.1664377182454986536961530415e+01;
        constexpr double er9 = -0.3503288487499736816886487290e+00;
        constexpr double er10 = 0.3341791187130174790297318841e+00;
        constexpr double er11 = 0.8192320648511571246570742613e-01;
        constexpr double er12 = -0.2235530786388629525884427845e-01;

        State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, k8 = y, k9 = y, k10 = y, k11 = y, k12 = y;
        State tmp = y, y_new = y;
        rhs(t, y, k1);
        ++stats_.rhs_evals;
        if (h_ <= 0.0) h_ = detail::initial_step(rhs, t, y, k1, t_end - t, 8, tol_, limits_.h_max, stats_);

        const double n = static_cast<double>(y.size());
        bool last_rejected = false;
        while (t < t_end) {
            check_budget(t);
            double h = std::min(h_, limits_.h_max);
            const bool final_step = t + h >= t_end;
            if (final_step) h = t_end - t;

            tmp = y + h * a21 * k1;
            rhs(t + c2 * h, tmp, k2);
            tmp = y + h * (a31 * k1 + a32 * k2);
            rhs(t + c3 * h, tmp, k3);
            tmp = y + h * (a41 * k1 + a43 * k3);
            rhs(t + c4 * h, tmp, k4);
            tmp = y + h * (a51 * k1 + a53 * k3 + a54 * k4);
            rhs(t + c5 * h, tmp, k5);
            tmp = y + h * (a61 * k1 + a64 * k4 + a65 * k5);
            rhs(t + c6 * h, tmp, k6);
            tmp = y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
            rhs(t + c7 * h, tmp, k7);
            tmp = y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
            rhs(t + c8 * h, tmp, k8);
            tmp = y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
            rhs(t + c9 * h, tmp, k9);
            tmp = y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 + a109 * k9);
            rhs(t + c10 * h, tmp, k10);
            tmp = y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 + a119 * k9 +
                           a1110 * k10);
            rhs(t + c11 * h, tmp, k11);
            tmp = y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 + a129 * k9 +
                           a1210 * k10 + a1211 * k11);
            rhs(t + h, tmp, k12);
            stats_.rhs_evals += 11;

            // k4 is free from here on; reuse it for the weighted slope.
            k4 = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
            y_new = y + h * k4;

            tmp = k4 - bhh1 * k1 - bhh2 * k9 - bhh3 * k12;
            const double err3 = detail::scaled_sq(tmp, y, y_new, tol_);
            tmp = er1 * k1 + er6 * k6 + er7 * k7 + er8 * k8 + er9 * k9 + er10 * k10 + er11 * k11 + er12 * k12;
            const double err5 = detail::scaled_sq(tmp, y, y_new, tol_);
            double deno = err5 + 0.01 * err3;
            if (deno <= 0.0) deno = 1.0;
            const double err = std::abs(h) * err5 / std::sqrt(n * deno);

            if (err <= 1.0) {
                ++stats_.accepted;
                t = final_step ? t_end : t + h;
                y = y_new;
                rhs(t, y, k1);
                ++stats_.rhs_evals;
                double fac = err == 0.0 ? 6.0 : std::clamp(0.9 * std::pow(err, -0.125), 1.0 / 3.0, 6.0);
                if (last_rejected) fac = std::min(fac, 1.0);
                if (!final_step) h_ = h * fac;
                last_rejected = false;
            } else {
                ++stats_.rejected;
                h_ = h * std::max(1.0 / 3.0, 0.9 * std::pow(err, -0.125));
                last_rejected = true;
            }
        }
    }

    const Stats& stats() const noexcept { return stats_; }

private:
    void check_budget(double t) const {
        if (stats_.accepted + stats_.rejected > limits_.max_steps) {
            throw IntegrationError("ode", fmt::format("step budget of {} exhausted at t = {}", limits_.max_steps, t));
        }
        if (h_ < 1e-14 * std::max(1.0, std::abs(t))) {
            throw IntegrationError("ode", fmt::format("step size underflow (h = {}) at t = {}", h_, t));
        }
    }

    Tolerance tol_;
    StepLimits limits_;
    Stats stats_;
    double h_ = 0.0;
};

}  // namespace oscar::ode
