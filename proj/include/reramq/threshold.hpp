// Single-threshold detection of the averaged read: the induced binary
// asymmetric channel, its mutual information and derivative in the
// threshold, a derivative-sign bisection search for the information-optimal
// threshold, and the raw-error-minimizing single-read baseline.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "reramq/channel.hpp"
#include "reramq/math_util.hpp"

namespace reramq {

/// Binary asymmetric channel induced by thresholding: p0 = Pr(decide 1 |
/// stored 0), p1 = Pr(decide 0 | stored 1).
struct BacChannel {
    double p0 = 0.0;
    double p1 = 0.0;
};

/// Decide the stored bit from the average of the reads: at or above the
/// threshold the high-resistance state 0, below it 1.
inline int threshold_detect(double avg, double t1) { return avg >= t1 ? 0 : 1; }

/// Crossover probabilities of the threshold detector on the average of
/// n_reads reads, from the mixture channel.
inline BacChannel bac_from_threshold(const ChannelModel& model, double t1, int n_reads) {
    if (n_reads < 1) throw std::invalid_argument("bac_from_threshold: need at least one read");
    const double scale = std::sqrt(static_cast<double>(n_reads)) / model.params().noise_sigma;
    BacChannel bac;
    for (const auto& comp : model.components()) {
        bac.p0 += comp.prob * q_function((model.component_mean(0, comp) - t1) * scale);
        bac.p1 += comp.prob * q_function((t1 - model.component_mean(1, comp)) * scale);
    }
    return bac;
}

/// Mutual information in bits across a binary asymmetric channel with a
/// uniform input.
inline double bac_mi(const BacChannel& bac) {
    const double out0 = 0.5 * (1.0 - bac.p0 + bac.p1);
    return binary_entropy(out0) - 0.5 * binary_entropy(bac.p0) - 0.5 * binary_entropy(bac.p1);
}

/// Derivative of the threshold-channel mutual information in the threshold.
/// Both crossover probabilities move with the threshold; the noise deviation
/// of the average shrinks with the read count, which scales both slopes.
inline double mi_derivative(const ChannelModel& model, double t1, int n_reads) {
    if (n_reads < 1) throw std::invalid_argument("mi_derivative: need at least one read");
    const double scale = std::sqrt(static_cast<double>(n_reads)) / model.params().noise_sigma;
    const BacChannel bac = bac_from_threshold(model, t1, n_reads);

    double d_p0 = 0.0, d_p1 = 0.0;
    for (const auto& comp : model.components()) {
        const double x0 = (model.component_mean(0, comp) - t1) * scale;
        const double x1 = (t1 - model.component_mean(1, comp)) * scale;
        d_p0 += comp.prob * scale * std::exp(-0.5 * x0 * x0) / std::sqrt(2.0 * std::numbers::pi);
        d_p1 -= comp.prob * scale * std::exp(-0.5 * x1 * x1) / std::sqrt(2.0 * std::numbers::pi);
    }

    const double p0 = bac.p0, p1 = bac.p1;
    double slope = 0.0;
    if (d_p0 != 0.0 && p0 > 0.0 && p0 < 1.0)
        slope += 0.5 * d_p0 * std::log2(p0 * (1.0 - p0 + p1) / ((1.0 - p0) * (1.0 + p0 - p1)));
    if (d_p1 != 0.0 && p1 > 0.0 && p1 < 1.0)
        slope += 0.5 * d_p1 * std::log2(p1 * (1.0 + p0 - p1) / ((1.0 - p1) * (1.0 - p0 + p1)));
    return slope;
}

/// Result of the threshold search. derivative_bracketed reports whether the
/// scan found a sign change of the information derivative; without one the
/// result falls back to the best scanned grid point.
struct ThresholdSearch {
    double t1 = 0.0;
    double mi_bits = 0.0;
    BacChannel bac;
    bool derivative_bracketed = false;
};

/// Information-optimal threshold for n_reads averaged reads: scan the
/// derivative sign on a uniform grid between the two state resistances,
/// bisect every sign change down to nanometer-scale brackets, and return the
/// candidate with the highest mutual information.
inline ThresholdSearch optimize_threshold(const ChannelModel& model, int n_reads, int scan_steps = 128) {
    if (scan_steps < 2) throw std::invalid_argument("optimize_threshold: need at least two scan steps");
    const double lo = model.params().r_low, hi = model.params().r_high;

    std::vector<double> grid(static_cast<std::size_t>(scan_steps) + 1);
    std::vector<double> slope(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_steps);
        slope[i] = mi_derivative(model, grid[i], n_reads);
    }

    std::vector<double> candidates;
    bool bracketed = false;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(slope[i] > 0.0 && slope[i + 1] <= 0.0)) continue;
        bracketed = true;
        double a = grid[i], b = grid[i + 1];
        for (int iter = 0; iter < 100 && b - a > 1e-9; ++iter) {
            const double m = 0.5 * (a + b);
            (mi_derivative(model, m, n_reads) > 0.0 ? a : b) = m;
        }
        candidates.push_back(0.5 * (a + b));
    }
    for (double t : grid) candidates.push_back(t);

    ThresholdSearch result;
    result.derivative_bracketed = bracketed;
    result.mi_bits = -1.0;
    for (double t : candidates) {
        const BacChannel bac = bac_from_threshold(model, t, n_reads);
        const double mi = bac_mi(bac);
        if (mi > result.mi_bits) {
            result.mi_bits = mi;
            result.t1 = t;
            result.bac = bac;
        }
    }
    return result;
}

/// Fixed reference threshold: minimizer of the raw crossover average
/// (p0 + p1) / 2 for a single read over a uniform grid between the state
/// resistances. Multi-read baselines keep this threshold and only average
/// more reads.
struct BaselineThreshold {
    double t1 = 0.0;
    double error_rate = 0.0;
};

inline BaselineThreshold baseline_single_read_threshold(const ChannelModel& model, int grid_points = 1025) {
    if (grid_points < 2) throw std::invalid_argument("baseline_single_read_threshold: need at least two points");
    const double lo = model.params().r_low, hi = model.params().r_high;
    BaselineThreshold best{0.0, kInf};
    for (int i = 0; i < grid_points; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const BacChannel bac = bac_from_threshold(model, t, 1);
        const double err = 0.5 * (bac.p0 + bac.p1);
        if (err < best.error_rate) best = {t, err};
    }
    return best;
}

} // namespace reramq
