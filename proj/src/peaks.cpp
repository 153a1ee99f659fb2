#include <algorithm>
#include <cmath>

#include "oscar/phase.hpp"

namespace oscar {

namespace {

constexpr double two_pi = 2.0 * M_PI;

double circular_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), two_pi);
    return std::min(d, two_pi - d);
}

}  // namespace

std::vector<Peak> find_peaks(const std::vector<double>& thetas, const std::vector<double>& v) {
    std::vector<Peak> peaks;
    const int n = int(v.size());
    if (n < 3 || thetas.size() != v.size()) return peaks;
    const double h = two_pi / n;
    const double threshold = peak_threshold_factor / two_pi;
    auto at = [&](int i) { return v[std::size_t(((i % n) + n) % n)]; };

    for (int i = 0; i < n; ++i) {
        // Strict on the left, non-strict on the right: one index per plateau.
        if (!(v[std::size_t(i)] > at(i - 1) && v[std::size_t(i)] >= at(i + 1))) continue;
        if (v[std::size_t(i)] <= threshold) continue;
        const double top = v[std::size_t(i)];

        // Lowest point on each side before reaching higher ground; a global
        // maximum sees the whole circle on both sides.
        double left_min = top, right_min = top;
        for (int s = 1; s < n; ++s) {
            const double x = at(i - s);
            if (x > top) break;
            left_min = std::min(left_min, x);
        }
        for (int s = 1; s < n; ++s) {
            const double x = at(i + s);
            if (x > top) break;
            right_min = std::min(right_min, x);
        }
        const double prominence = top - std::max(left_min, right_min);
        const double level = top - 0.5 * prominence;

        // Half-prominence crossings, linearly interpolated, in grid units.
        double left = 0.0, right = 0.0;
        for (int s = 1; s < n; ++s) {
            const double x = at(i - s);
            if (x < level) {
                const double prev = at(i - s + 1);
                left = (s - 1) + (prev - level) / (prev - x);
                break;
            }
            left = s;
        }
        for (int s = 1; s < n; ++s) {
            const double x = at(i + s);
            if (x < level) {
                const double prev = at(i + s - 1);
                right = (s - 1) + (prev - level) / (prev - x);
                break;
            }
            right = s;
        }
        Peak p;
        p.index = i;
        p.theta = thetas[std::size_t(i)];
        p.height = top;
        p.prominence = prominence;
        p.width = std::min(two_pi, (left + right) * h);
        peaks.push_back(p);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
    return peaks;
}

std::vector<Peak> find_peaks(const PhaseDistribution& dist) { return find_peaks(dist.thetas, dist.values); }

double distinguishability(const std::vector<Peak>& peaks) {
    if (peaks.size() < 2) return 0.0;
    const double mean_width = 0.5 * (peaks[0].width + peaks[1].width);
    if (mean_width <= 0.0) return 0.0;
    return circular_distance(peaks[0].theta, peaks[1].theta) / mean_width;
}

double distinguishability(const PhaseDistribution& dist) { return distinguishability(find_peaks(dist)); }

}  // namespace oscar
