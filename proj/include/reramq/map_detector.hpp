// Maximum a posteriori detection over the mixture channel. The per-read
// noise is Gaussian with a component-dependent mean, so the likelihood of a
// read vector depends on it only through sum and sum of squares, and the
// decision depends only on the average. That collapses the detector to sign
// intervals of a one-dimensional log-likelihood difference, which also gives
// the exact bit error probability by Gaussian tail sums.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "reramq/channel.hpp"
#include "reramq/math_util.hpp"

namespace reramq {

/// Log density of a read vector given the stored bit, marginalized over the
/// sneak-path mixture.
inline double log_likelihood(std::span<const double> reads, int bit, const ChannelModel& model) {
    if (reads.empty()) throw std::invalid_argument("log_likelihood: empty read vector");
    const double sigma = model.params().noise_sigma;
    const double n = static_cast<double>(reads.size());
    double s1 = 0.0, s2 = 0.0;
    for (double r : reads) {
        s1 += r;
        s2 += r * r;
    }
    std::vector<double> exponents;
    exponents.reserve(model.components().size());
    for (const auto& comp : model.components()) {
        const double mean = model.component_mean(bit, comp);
        exponents.push_back(std::log(comp.prob) - (s2 - 2.0 * mean * s1 + n * mean * mean) / (2.0 * sigma * sigma));
    }
    return log_sum_exp(exponents) - n * (std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi));
}

inline double likelihood(std::span<const double> reads, int bit, const ChannelModel& model) {
    return std::exp(log_likelihood(reads, bit, model));
}

/// MAP bit decision for a uniform prior; exact likelihood ties go to 0.
inline int map_detect(std::span<const double> reads, const ChannelModel& model) {
    return log_likelihood(reads, 0, model) - log_likelihood(reads, 1, model) >= 0.0 ? 0 : 1;
}

/// The MAP decision as a function of the read average: sign intervals of the
/// log-likelihood difference, separated by its roots in ascending order.
struct MapDecisionRule {
    std::vector<double> roots;
    std::vector<int> decisions;

    int decide(double avg) const {
        const auto idx = std::upper_bound(roots.begin(), roots.end(), avg) - roots.begin();
        return decisions[static_cast<std::size_t>(idx)];
    }
};

/// Locate the decision boundaries of the MAP detector for n_reads reads by a
/// dense sign scan of the log-likelihood difference plus bisection. Channels
/// here produce a handful of boundaries; more than max_roots aborts.
inline MapDecisionRule map_decision_rule(const ChannelModel& model, int n_reads, int grid_points = 4001,
                                         int max_roots = 8) {
    if (n_reads < 1) throw std::invalid_argument("map_decision_rule: need at least one read");
    if (grid_points < 16) throw std::invalid_argument("map_decision_rule: grid too coarse");
    const double sigma2 = model.params().noise_sigma * model.params().noise_sigma;
    const double n = static_cast<double>(n_reads);

    struct Term {
        double a, b;
    };
    std::vector<Term> t0, t1;
    for (const auto& comp : model.components()) {
        for (int bit : {0, 1}) {
            const double mean = model.component_mean(bit, comp);
            (bit ? t1 : t0).push_back(
                {std::log(comp.prob) - n * mean * mean / (2.0 * sigma2), n * mean / sigma2});
        }
    }
    const auto lse = [](const std::vector<Term>& terms, double r) {
        double m = -kInf;
        for (const auto& t : terms) m = std::max(m, t.a + t.b * r);
        double s = 0.0;
        for (const auto& t : terms) s += std::exp(t.a + t.b * r - m);
        return m + std::log(s);
    };
    const auto delta = [&](double r) { return lse(t0, r) - lse(t1, r); };

    const double sigma_avg = model.params().noise_sigma / std::sqrt(n);
    const double lo = model.min_mean(1) - 8.0 * sigma_avg;
    const double hi = model.max_mean(0) + 8.0 * sigma_avg;

    MapDecisionRule rule;
    double prev_x = lo, prev_d = delta(lo);
    for (int i = 1; i < grid_points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double d = delta(x);
        if ((prev_d >= 0.0) != (d >= 0.0)) {
            double a = prev_x, b = x;
            const bool left_nonneg = prev_d >= 0.0;
            for (int iter = 0; iter < 200 && b - a > 1e-12 * (hi - lo); ++iter) {
                const double m = 0.5 * (a + b);
                ((delta(m) >= 0.0) == left_nonneg ? a : b) = m;
            }
            rule.roots.push_back(0.5 * (a + b));
            if (static_cast<int>(rule.roots.size()) > max_roots)
                throw std::runtime_error("map_decision_rule: unexpected number of decision boundaries");
        }
        prev_x = x;
        prev_d = d;
    }

    const auto representative = [&](std::size_t j) {
        if (rule.roots.empty()) return 0.5 * (lo + hi);
        if (j == 0) return rule.roots.front() - 1.0;
        if (j == rule.roots.size()) return rule.roots.back() + 1.0;
        return 0.5 * (rule.roots[j - 1] + rule.roots[j]);
    };
    for (std::size_t j = 0; j <= rule.roots.size(); ++j)
        rule.decisions.push_back(delta(representative(j)) >= 0.0 ? 0 : 1);
    return rule;
}

/// Exact MAP bit error probability for the average of n_reads reads, by
/// accumulating Gaussian tail mass of every mixture component over the
/// decision intervals assigned to the opposite bit.
inline double bep_map_quadrature_1d(const ChannelModel& model, int n_reads, int grid_points = 4001) {
    const MapDecisionRule rule = map_decision_rule(model, n_reads, grid_points);
    const double sigma_avg = model.params().noise_sigma / std::sqrt(static_cast<double>(n_reads));

    double err = 0.0;
    for (int bit : {0, 1}) {
        for (const auto& comp : model.components()) {
            const double mean = model.component_mean(bit, comp);
            for (std::size_t j = 0; j < rule.decisions.size(); ++j) {
                if (rule.decisions[j] == bit) continue;
                const double a = j == 0 ? -kInf : rule.roots[j - 1];
                const double b = j == rule.roots.size() ? kInf : rule.roots[j];
                err += 0.5 * comp.prob * gauss_interval_mass(a, b, mean, sigma_avg);
            }
        }
    }
    return err;
}

/// Monte Carlo bit error estimate with a 95% confidence half-width.
struct BepEstimate {
    double bep = 0.0;
    double ci95 = 0.0;
    std::uint64_t trials = 0;
};

namespace detail {

/// Run `blocks` deterministic simulation blocks across `jobs` threads. Each
/// block pulls an isolated RNG substream, so the totals do not depend on the
/// thread count.
template <typename BlockFn>
inline void run_blocks(std::uint64_t blocks, int jobs, const BlockFn& fn) {
    if (jobs <= 1 || blocks <= 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    const int threads = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(jobs), blocks));
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) fn(b);
        });
    }
    for (auto& th : pool) th.join();
}

constexpr std::uint64_t kMcBlockSize = 8192;

} // namespace detail

/// Estimate the MAP bit error probability by sampling the mixture channel:
/// draw the bit and the sneak-path component, draw the averaged read, and
/// score it against the MAP decision rule. Trials are partitioned into
/// fixed-size blocks with per-block RNG substreams, so results are
/// reproducible for any thread count. Stratified mode splits the trials
/// between the no-path and with-path component groups and reweights, which
/// tightens the estimate when path events are rare but error-dominant.
inline BepEstimate bep_map_mc(const ChannelParams& params, int n_reads, std::uint64_t trials, std::uint64_t seed,
                              int jobs = 1, bool stratified = false) {
    if (n_reads < 1) throw std::invalid_argument("bep_map_mc: need at least one read");
    if (trials < 1) throw std::invalid_argument("bep_map_mc: need at least one trial");
    if (jobs < 1) throw std::invalid_argument("bep_map_mc: need at least one job");
    const ChannelModel model(params);
    const MapDecisionRule rule = map_decision_rule(model, n_reads);
    const double sigma_avg = params.noise_sigma / std::sqrt(static_cast<double>(n_reads));

    struct Stratum {
        std::vector<double> cum, mean0, mean1;
        double weight = 0.0;
    };
    std::vector<Stratum> strata(stratified ? 2 : 1);
    for (const auto& comp : model.components()) {
        Stratum& s = strata[stratified && comp.type.paths > 0 ? 1 : 0];
        s.weight += comp.prob;
        s.cum.push_back(s.weight);
        s.mean0.push_back(model.component_mean(0, comp));
        s.mean1.push_back(model.component_mean(1, comp));
    }
    for (auto& s : strata)
        for (auto& c : s.cum) c /= s.weight;

    BepEstimate est;
    est.trials = trials;
    double bep = 0.0, var = 0.0;
    for (std::size_t si = 0; si < strata.size(); ++si) {
        const Stratum& s = strata[si];
        const std::uint64_t n_s = strata.size() == 1 ? trials : (si == 0 ? trials / 2 : trials - trials / 2);
        if (n_s == 0 || s.cum.empty()) continue;
        const std::uint64_t blocks = (n_s + detail::kMcBlockSize - 1) / detail::kMcBlockSize;
        std::vector<std::uint64_t> block_errors(blocks, 0);

        detail::run_blocks(blocks, jobs, [&](std::uint64_t b) {
            std::mt19937_64 rng(substream_seed(seed, 2 * b + si));
            std::normal_distribution<double> noise(0.0, sigma_avg);
            const std::uint64_t begin = b * detail::kMcBlockSize;
            const std::uint64_t end = std::min(n_s, begin + detail::kMcBlockSize);
            std::uint64_t errors = 0;
            for (std::uint64_t t = begin; t < end; ++t) {
                const int bit = uniform01(rng) < 0.5 ? 1 : 0;
                const double u = uniform01(rng);
                const std::size_t c = static_cast<std::size_t>(
                    std::lower_bound(s.cum.begin(), s.cum.end(), u) - s.cum.begin());
                const std::size_t idx = std::min(c, s.cum.size() - 1);
                const double mean = bit ? s.mean1[idx] : s.mean0[idx];
                if (rule.decide(mean + noise(rng)) != bit) ++errors;
            }
            block_errors[b] = errors;
        });

        std::uint64_t errors = 0;
        for (std::uint64_t e : block_errors) errors += e;
        const double p_hat = static_cast<double>(errors) / static_cast<double>(n_s);
        const double hw = wilson_half_width(errors, n_s);
        bep += s.weight * p_hat;
        var += (s.weight * hw) * (s.weight * hw);
    }
    est.bep = bep;
    est.ci95 = std::sqrt(var);
    return est;
}

} // namespace reramq
