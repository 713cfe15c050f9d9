// Quantizer design for the averaged multi-read channel: a fine uniform grid
// of candidate boundaries, prefix CDFs of the conditional read distribution,
// a merged-interval conditional-entropy cost, and two designers (dynamic
// program and exhaustive search) that maximize mutual information between
// the stored bit and the quantized readout.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "reramq/channel.hpp"
#include "reramq/math_util.hpp"

namespace reramq {

/// A scalar quantizer on the resistance axis: strictly increasing interior
/// boundaries t_1 < ... < t_{q-1} defining q right-open intervals
/// (-inf, t_1), [t_1, t_2), ..., [t_{q-1}, +inf).
struct Quantizer {
    std::vector<double> boundaries;

    int levels() const { return static_cast<int>(boundaries.size()) + 1; }

    void validate() const {
        for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
            if (!(boundaries[i] < boundaries[i + 1]))
                throw std::invalid_argument("Quantizer: boundaries must be strictly increasing");
    }

    int index(double r) const {
        return static_cast<int>(std::upper_bound(boundaries.begin(), boundaries.end(), r) - boundaries.begin());
    }
};

/// Discrete memoryless channel from the stored bit to the quantized average
/// of the reads.
struct QuantizedChannel {
    std::vector<double> prob0, prob1;

    int levels() const { return static_cast<int>(prob0.size()); }

    const std::vector<double>& row(int bit) const { return bit ? prob1 : prob0; }
};

/// Pr(interval | bit) for the average of n_reads noisy reads, with noise
/// deviation sigma / sqrt(n_reads) around each mixture component mean.
inline QuantizedChannel quantized_transition(const ChannelModel& model, const Quantizer& quantizer, int n_reads) {
    if (n_reads < 1) throw std::invalid_argument("quantized_transition: need at least one read");
    quantizer.validate();
    const double sigma = model.params().noise_sigma / std::sqrt(static_cast<double>(n_reads));
    const int q = quantizer.levels();

    QuantizedChannel qc;
    for (int bit : {0, 1}) {
        std::vector<double> cdf(q - 1, 0.0);
        for (const auto& comp : model.components()) {
            const double mean = model.component_mean(bit, comp);
            for (int j = 0; j + 1 < q; ++j) cdf[j] += comp.prob * q_function((mean - quantizer.boundaries[j]) / sigma);
        }
        std::vector<double>& p = bit ? qc.prob1 : qc.prob0;
        p.resize(q);
        double prev = 0.0;
        for (int j = 0; j + 1 < q; ++j) {
            p[j] = std::max(0.0, cdf[j] - prev);
            prev = cdf[j];
        }
        p[q - 1] = std::max(0.0, 1.0 - prev);
    }
    return qc;
}

/// Mutual information in bits between a uniform stored bit and the quantized
/// readout.
inline double mutual_information(const QuantizedChannel& qc) {
    double h_out = 0.0, h_cond = 0.0;
    for (int j = 0; j < qc.levels(); ++j) {
        h_out -= xlog2x(0.5 * (qc.prob0[j] + qc.prob1[j]));
        h_cond -= 0.5 * (xlog2x(qc.prob0[j]) + xlog2x(qc.prob1[j]));
    }
    return h_out - h_cond;
}

/// Contribution of one output interval to the conditional entropy H(bit |
/// readout) under a uniform stored bit: half the interval masses under each
/// bit, weighted by the log ratio to their sum. Summing this over the
/// intervals of any quantizer gives 1 - MI.
inline double partial_cond_entropy(double p0, double p1) {
    const double s = p0 + p1;
    if (!(s > 0.0)) return 0.0;
    double phi = 0.0;
    if (p0 > 0.0) phi += 0.5 * p0 * std::log2(s / p0);
    if (p1 > 0.0) phi += 0.5 * p1 * std::log2(s / p1);
    return phi;
}

/// Uniform candidate-boundary grid of grid_size + 1 points spanning every
/// mixture component mean of either bit with a 6 sigma margin on each side.
inline std::vector<double> fine_grid(const ChannelModel& model, int grid_size) {
    if (grid_size < 2) throw std::invalid_argument("fine_grid: need at least two intervals");
    const double lo = model.min_mean(1) - 6.0 * model.params().noise_sigma;
    const double hi = model.max_mean(0) + 6.0 * model.params().noise_sigma;
    std::vector<double> grid(static_cast<std::size_t>(grid_size) + 1);
    for (int i = 0; i <= grid_size; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_size);
    return grid;
}

/// Prefix CDFs of the averaged-read distribution at every grid point, for
/// O(1) evaluation of merged-interval masses and costs. The outermost grid
/// points are treated as -inf and +inf, so the fine partition covers the
/// whole axis.
class FineChannelTable {
  public:
    FineChannelTable(const ChannelModel& model, int n_reads, std::vector<double> grid) : grid_(std::move(grid)) {
        if (n_reads < 1) throw std::invalid_argument("FineChannelTable: need at least one read");
        if (grid_.size() < 3) throw std::invalid_argument("FineChannelTable: need at least two fine intervals");
        for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
            if (!(grid_[i] < grid_[i + 1])) throw std::invalid_argument("FineChannelTable: grid must increase");

        const double sigma = model.params().noise_sigma / std::sqrt(static_cast<double>(n_reads));
        const int h = size();
        cdf0_.assign(h + 1, 0.0);
        cdf1_.assign(h + 1, 0.0);
        for (const auto& comp : model.components()) {
            const double mean0 = model.component_mean(0, comp);
            const double mean1 = model.component_mean(1, comp);
            for (int i = 1; i < h; ++i) {
                cdf0_[i] += comp.prob * q_function((mean0 - grid_[i]) / sigma);
                cdf1_[i] += comp.prob * q_function((mean1 - grid_[i]) / sigma);
            }
        }
        cdf0_[h] = 1.0;
        cdf1_[h] = 1.0;
    }

    /// Number of fine intervals.
    int size() const { return static_cast<int>(grid_.size()) - 1; }

    const std::vector<double>& grid() const { return grid_; }

    double cdf(int bit, int i) const { return bit ? cdf1_[i] : cdf0_[i]; }

    /// Conditional-entropy cost of merging fine intervals [g, o).
    double merged_cost(int g, int o) const {
        return partial_cond_entropy(std::max(0.0, cdf0_[o] - cdf0_[g]), std::max(0.0, cdf1_[o] - cdf1_[g]));
    }

    /// Mutual information of the unmerged fine partition itself.
    double fine_mi() const {
        double h_cond = 0.0;
        for (int i = 0; i < size(); ++i) h_cond += merged_cost(i, i + 1);
        return 1.0 - h_cond;
    }

    /// Quantizer whose boundaries sit at the given interior grid indices.
    Quantizer quantizer_at(std::span<const int> cut_indices) const {
        Quantizer quant;
        for (int c : cut_indices) {
            if (c < 1 || c >= size()) throw std::invalid_argument("quantizer_at: cut index outside interior");
            quant.boundaries.push_back(grid_[c]);
        }
        quant.validate();
        return quant;
    }

  private:
    std::vector<double> grid_;
    std::vector<double> cdf0_, cdf1_;
};

/// A designed quantizer together with the mutual information it achieves.
struct DesignResult {
    Quantizer quantizer;
    double mi_bits = 0.0;
};

namespace detail {

inline DesignResult finish_design(const ChannelModel& model, const FineChannelTable& table, int n_reads,
                                  std::span<const int> cuts) {
    DesignResult result;
    result.quantizer = table.quantizer_at(cuts);
    result.mi_bits = mutual_information(quantized_transition(model, result.quantizer, n_reads));
    return result;
}

} // namespace detail

/// Maximum-MI quantizer by dynamic programming over the fine grid: the cost
/// of a candidate interval depends only on its endpoints, so the optimal
/// partition into `levels` intervals decomposes over prefixes. Ties within
/// 1e-12 prefer the smaller predecessor index.
inline DesignResult design_dp(const ChannelModel& model, int n_reads, int levels, int grid_size = 1000) {
    if (levels < 1) throw std::invalid_argument("design_dp: need at least one level");
    if (grid_size < levels) throw std::invalid_argument("design_dp: grid too coarse for level count");
    const FineChannelTable table(model, n_reads, fine_grid(model, grid_size));
    const int h = table.size(), q = levels;

    std::vector<std::vector<double>> cost(q + 1, std::vector<double>(h + 1, kInf));
    std::vector<std::vector<int>> from(q + 1, std::vector<int>(h + 1, -1));
    for (int o = 1; o <= h; ++o) cost[1][o] = table.merged_cost(0, o);
    for (int k = 2; k <= q; ++k) {
        for (int o = k; o <= h; ++o) {
            double best = kInf;
            int arg = -1;
            for (int g = k - 1; g < o; ++g) {
                const double cand = cost[k - 1][g] + table.merged_cost(g, o);
                if (cand < best - 1e-12) {
                    best = cand;
                    arg = g;
                }
            }
            cost[k][o] = best;
            from[k][o] = arg;
        }
    }

    std::vector<int> cuts;
    for (int k = q, o = h; k >= 2; --k) {
        o = from[k][o];
        cuts.push_back(o);
    }
    std::reverse(cuts.begin(), cuts.end());
    return detail::finish_design(model, table, n_reads, cuts);
}

/// Maximum-MI quantizer by enumerating every interior boundary subset, in
/// lexicographic order with ties within 1e-12 keeping the earlier subset.
/// Only viable for small grids; reference for the dynamic program.
inline DesignResult design_exhaustive(const ChannelModel& model, int n_reads, int levels, int grid_size) {
    if (levels < 1) throw std::invalid_argument("design_exhaustive: need at least one level");
    if (grid_size < levels) throw std::invalid_argument("design_exhaustive: grid too coarse for level count");
    std::uint64_t combos = 0;
    try {
        combos = binomial(static_cast<std::uint64_t>(grid_size) - 1, static_cast<std::uint64_t>(levels) - 1);
    } catch (const std::overflow_error&) {
        combos = std::numeric_limits<std::uint64_t>::max();
    }
    if (combos > 1000000) throw std::invalid_argument("design_exhaustive: search space exceeds one million subsets");

    const FineChannelTable table(model, n_reads, fine_grid(model, grid_size));
    const int h = table.size(), n_cuts = levels - 1;

    std::vector<int> pick(n_cuts);
    for (int i = 0; i < n_cuts; ++i) pick[i] = i + 1;
    std::vector<int> best_pick;
    double best_cost = kInf;

    const auto advance = [&]() {
        int i = n_cuts - 1;
        while (i >= 0 && pick[i] == h - n_cuts + i) --i;
        if (i < 0) return false;
        ++pick[i];
        for (int j = i + 1; j < n_cuts; ++j) pick[j] = pick[j - 1] + 1;
        return true;
    };

    if (n_cuts == 0) return detail::finish_design(model, table, n_reads, {});
    do {
        double total = table.merged_cost(0, pick[0]);
        for (int i = 1; i < n_cuts; ++i) total += table.merged_cost(pick[i - 1], pick[i]);
        total += table.merged_cost(pick[n_cuts - 1], h);
        if (total < best_cost - 1e-12) {
            best_cost = total;
            best_pick = pick;
        }
    } while (advance());
    return detail::finish_design(model, table, n_reads, best_pick);
}

/// Monte Carlo estimate of the mutual information between a uniform stored
/// bit and the average of n_reads reads, simulated at array level with exact
/// sneak-path configurations. With a quantizer the information is measured
/// through its output; without one the continuous average is scored against
/// the analytic mixture density.
struct MiEstimate {
    double mi_bits = 0.0;
    double ci95 = 0.0;
    std::uint64_t trials = 0;
};

inline MiEstimate mc_mutual_information(const ChannelParams& params, int n_reads, std::uint64_t trials,
                                        std::uint64_t seed, const Quantizer* quantizer = nullptr) {
    if (n_reads < 1) throw std::invalid_argument("mc_mutual_information: need at least one read");
    if (trials < 2) throw std::invalid_argument("mc_mutual_information: need at least two trials");
    const ChannelModel model(params);
    const double sigma = params.noise_sigma / std::sqrt(static_cast<double>(n_reads));

    QuantizedChannel qc;
    if (quantizer) qc = quantized_transition(model, *quantizer, n_reads);

    std::mt19937_64 rng(substream_seed(seed, 0));
    std::normal_distribution<double> noise(0.0, sigma);
    double sum = 0.0, sumsq = 0.0;
    constexpr double kFloor = 1e-300;

    for (std::uint64_t t = 0; t < trials; ++t) {
        const CrossbarSample array = sample_array(params, rng);
        const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(params.rows));
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(params.cols));
        const int bit = uniform01(rng) < 0.5 ? 1 : 0;
        const PathConfig config = cell_path_config(array, i, j);
        const double mean = config.empty() ? params.resistance(bit) : rho(bit, solve_alpha(config), params);
        const double avg = mean + noise(rng);

        double x;
        if (quantizer) {
            const int idx = quantizer->index(avg);
            const double pb = std::max(kFloor, bit ? qc.prob1[idx] : qc.prob0[idx]);
            const double mix = std::max(kFloor, 0.5 * (qc.prob0[idx] + qc.prob1[idx]));
            x = std::log2(pb / mix);
        } else {
            double f0 = 0.0, f1 = 0.0;
            for (const auto& comp : model.components()) {
                f0 += comp.prob * gauss_pdf(avg - model.component_mean(0, comp), sigma);
                f1 += comp.prob * gauss_pdf(avg - model.component_mean(1, comp), sigma);
            }
            const double fb = std::max(kFloor, bit ? f1 : f0);
            const double mix = std::max(kFloor, 0.5 * (f0 + f1));
            x = std::log2(fb / mix);
        }
        sum += x;
        sumsq += x * x;
    }

    MiEstimate est;
    est.trials = trials;
    est.mi_bits = sum / static_cast<double>(trials);
    const double var = std::max(0.0, sumsq / static_cast<double>(trials) - est.mi_bits * est.mi_bits);
    est.ci95 = 1.959963984540054 * std::sqrt(var / static_cast<double>(trials));
    return est;
}

} // namespace reramq
