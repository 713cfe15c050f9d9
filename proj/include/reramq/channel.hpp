// Crossbar readback channel model: sneak-path type combinatorics, equivalent
// parallel resistance of the sneak-path network via nodal analysis, the
// resulting Gaussian-mixture transition density, and exact array-level
// sampling for Monte Carlo ground truth.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "reramq/math_util.hpp"

namespace reramq {

/// Geometry, resistance states and defect statistics of one crossbar array.
struct ChannelParams {
    int rows = 16;                      ///< m
    int cols = 16;                      ///< n
    double r_high = 1000.0;             ///< resistance of a stored 0, ohms
    double r_low = 100.0;               ///< resistance of a stored 1, ohms
    double selector_fail_prob = 0.001;  ///< i.i.d. selector failure probability
    double ones_prob = 0.5;             ///< i.i.d. probability a cell stores 1
    double noise_sigma = 80.0;          ///< read noise standard deviation, ohms
    int max_paths = 4;                  ///< sneak-path count cutoff of the model

    double resistance(int bit) const { return bit ? r_low : r_high; }

    void validate() const {
        if (rows < 2 || cols < 2) throw std::invalid_argument("ChannelParams: need rows, cols >= 2");
        if (!(0.0 < r_low && r_low < r_high)) throw std::invalid_argument("ChannelParams: need 0 < r_low < r_high");
        if (!(noise_sigma > 0.0)) throw std::invalid_argument("ChannelParams: need noise_sigma > 0");
        if (selector_fail_prob < 0.0 || selector_fail_prob > 1.0)
            throw std::invalid_argument("ChannelParams: selector_fail_prob outside [0,1]");
        if (ones_prob < 0.0 || ones_prob > 1.0) throw std::invalid_argument("ChannelParams: ones_prob outside [0,1]");
        if (max_paths < 0) throw std::invalid_argument("ChannelParams: max_paths < 0");
    }
};

/// Summary (L; k_l, k_c) of a sneak-path combination: L parallel paths
/// spanning row_span distinct rows and col_span distinct columns.
struct SneakPathType {
    int paths = 0;
    int row_span = 0;
    int col_span = 0;

    friend auto operator<=>(const SneakPathType&, const SneakPathType&) = default;
};

/// Exact placement of the active intersection cells that gate sneak paths to
/// one target cell. Each entry is the (row, column) of one reverse-biased
/// cell whose selector has failed; rows never include the target row and
/// columns never include the target column.
struct PathConfig {
    std::vector<std::pair<int, int>> cells;

    bool empty() const { return cells.empty(); }

    SneakPathType type() const {
        std::vector<int> rs, cs;
        for (auto [r, c] : cells) {
            rs.push_back(r);
            cs.push_back(c);
        }
        std::sort(rs.begin(), rs.end());
        rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
        std::sort(cs.begin(), cs.end());
        cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
        return {static_cast<int>(cells.size()), static_cast<int>(rs.size()), static_cast<int>(cs.size())};
    }
};

/// Number of L-subsets of a row_span x col_span grid that touch every row and
/// every column, by inclusion-exclusion over omitted rows/columns.
inline std::uint64_t covering_subset_count(int paths, int row_span, int col_span) {
    if (paths < 0 || row_span < 0 || col_span < 0) throw std::invalid_argument("covering_subset_count: negative argument");
    __int128 total = 0;
    for (int a = 0; a <= row_span; ++a) {
        for (int b = 0; b <= col_span; ++b) {
            const std::uint64_t free_cells = static_cast<std::uint64_t>(row_span - a) * static_cast<std::uint64_t>(col_span - b);
            const __int128 term = static_cast<__int128>(binomial(row_span, a)) * binomial(col_span, b) *
                                  binomial(free_cells, paths);
            total += ((a + b) % 2 == 0) ? term : -term;
        }
    }
    if (total < 0) throw std::logic_error("covering_subset_count: negative inclusion-exclusion total");
    return static_cast<std::uint64_t>(total);
}

/// Number of L-cell arrangements within a u x v candidate grid whose type is
/// (L; row_span, col_span): choose the spanned rows and columns, then place
/// the cells so that every chosen row and column is used.
inline std::uint64_t count_arrangements(int u, int v, int paths, int row_span, int col_span) {
    if (u < 0 || v < 0) throw std::invalid_argument("count_arrangements: negative grid");
    if (row_span < 0 || row_span > u || col_span < 0 || col_span > v)
        throw std::invalid_argument("count_arrangements: span outside candidate grid");
    if (paths < row_span || paths < col_span ||
        static_cast<std::uint64_t>(paths) > static_cast<std::uint64_t>(row_span) * static_cast<std::uint64_t>(col_span))
        throw std::invalid_argument("count_arrangements: path count incompatible with span");
    return binomial(u, row_span) * binomial(v, col_span) * covering_subset_count(paths, row_span, col_span);
}

/// Equivalent resistance of the sneak-path network, in units of the
/// low-state resistance. The network has a source node feeding one unit
/// resistor per distinct column, one unit resistor per active cell from its
/// column node to its row node, and one unit resistor per distinct row into
/// the sink. Solved by nodal analysis with unit current injection.
inline double solve_alpha(const PathConfig& config) {
    if (config.empty()) throw std::invalid_argument("solve_alpha: empty configuration");

    std::vector<int> rows, cols;
    for (auto [r, c] : config.cells) {
        rows.push_back(r);
        cols.push_back(c);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

    // node 0 = source; columns next; rows last; sink is the ground reference
    const int n_nodes = 1 + static_cast<int>(cols.size()) + static_cast<int>(rows.size());
    const auto col_node = [&](int c) {
        return 1 + static_cast<int>(std::lower_bound(cols.begin(), cols.end(), c) - cols.begin());
    };
    const auto row_node = [&](int r) {
        return 1 + static_cast<int>(cols.size()) +
               static_cast<int>(std::lower_bound(rows.begin(), rows.end(), r) - rows.begin());
    };

    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    const auto stamp = [&](int a, int b) {
        laplacian(a, a) += 1.0;
        if (b >= 0) {
            laplacian(b, b) += 1.0;
            laplacian(a, b) -= 1.0;
            laplacian(b, a) -= 1.0;
        }
    };
    for (int c : cols) stamp(0, col_node(c));
    for (auto [r, c] : config.cells) stamp(col_node(c), row_node(r));
    for (int r : rows) stamp(row_node(r), -1);

    Eigen::VectorXd injected = Eigen::VectorXd::Zero(n_nodes);
    injected(0) = 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(laplacian);
    if (llt.info() != Eigen::Success) throw std::runtime_error("solve_alpha: singular nodal system");
    const double alpha = llt.solve(injected)(0);
    if (!(alpha > 0.0)) throw std::runtime_error("solve_alpha: non-positive equivalent resistance");
    return alpha;
}

/// Measured mean resistance of a cell: the stored-state resistance in
/// parallel with the sneak-path network (alpha in units of r_low), or the
/// plain state resistance when no sneak path is present.
inline double rho(int bit, std::optional<double> alpha, const ChannelParams& params) {
    if (!alpha) return params.resistance(bit);
    if (!(*alpha > 0.0)) throw std::invalid_argument("rho: alpha must be positive");
    if (std::isinf(*alpha)) return params.resistance(bit);
    return 1.0 / (1.0 / params.resistance(bit) + 1.0 / (*alpha * params.r_low));
}

/// One Gaussian-mixture component of the readback channel: a sneak-path
/// network class with its resistance ratio and probability mass. The no-path
/// component carries alpha = +infinity.
struct MixtureComponent {
    SneakPathType type;
    double alpha = kInf;
    double prob = 0.0;
};

/// Probability mass of one sneak-path type.
struct TypeMass {
    SneakPathType type;
    double prob = 0.0;
};

namespace detail {

/// One equivalence class of covering placements under row/column relabeling.
struct ConfigClass {
    PathConfig representative;
    std::uint64_t count = 0;
};

/// Enumerate covering L-subsets of a row_span x col_span grid grouped by
/// row/column permutation equivalence. Canonical key: minimum over row
/// permutations of the bit matrix with columns sorted descending.
inline std::vector<ConfigClass> covering_classes(int paths, int row_span, int col_span) {
    const int n_cells = row_span * col_span;
    if (n_cells > 36) throw std::invalid_argument("covering_classes: grid too large");

    std::map<std::uint64_t, ConfigClass> classes;

    std::vector<int> pick(paths);
    for (int i = 0; i < paths; ++i) pick[i] = i;
    std::vector<int> row_order(row_span);
    std::vector<std::uint64_t> col_vals(col_span);

    const auto advance = [&]() {
        int i = paths - 1;
        while (i >= 0 && pick[i] == n_cells - paths + i) --i;
        if (i < 0) return false;
        ++pick[i];
        for (int j = i + 1; j < paths; ++j) pick[j] = pick[j - 1] + 1;
        return true;
    };

    do {
        std::uint64_t row_mask_all = 0, col_mask_all = 0;
        std::vector<std::uint64_t> row_bits(row_span, 0);
        for (int idx : pick) {
            const int r = idx / col_span, c = idx % col_span;
            row_bits[r] |= std::uint64_t{1} << c;
            row_mask_all |= std::uint64_t{1} << r;
            col_mask_all |= std::uint64_t{1} << c;
        }
        if (row_mask_all != (std::uint64_t{1} << row_span) - 1) continue;
        if (col_mask_all != (std::uint64_t{1} << col_span) - 1) continue;

        std::uint64_t best = ~std::uint64_t{0};
        for (int i = 0; i < row_span; ++i) row_order[i] = i;
        do {
            for (int c = 0; c < col_span; ++c) {
                std::uint64_t v = 0;
                for (int r = 0; r < row_span; ++r)
                    v = (v << 1) | ((row_bits[row_order[r]] >> c) & 1u);
                col_vals[c] = v;
            }
            std::sort(col_vals.begin(), col_vals.end(), std::greater<>());
            std::uint64_t key = 0;
            for (std::uint64_t v : col_vals) key = (key << row_span) | v;
            best = std::min(best, key);
        } while (std::next_permutation(row_order.begin(), row_order.end()));

        auto& cls = classes[best];
        if (cls.count == 0) {
            for (int idx : pick) cls.representative.cells.emplace_back(idx / col_span, idx % col_span);
        }
        ++cls.count;
    } while (advance());

    std::vector<ConfigClass> out;
    out.reserve(classes.size());
    for (auto& [key, cls] : classes) out.push_back(std::move(cls));
    return out;
}

} // namespace detail

/// Analytical distribution over sneak-path types (L; k_l, k_c) up to the
/// max_paths cutoff, renormalized over the dropped tail. The no-path type is
/// (0; 0, 0).
inline std::vector<TypeMass> path_type_distribution(const ChannelParams& params) {
    params.validate();
    const int mu = params.rows - 1, nv = params.cols - 1;
    const double activation = params.selector_fail_prob * params.ones_prob;

    std::vector<std::vector<double>> p_uv(mu + 1, std::vector<double>(nv + 1));
    for (int u = 0; u <= mu; ++u)
        for (int v = 0; v <= nv; ++v)
            p_uv[u][v] = static_cast<double>(binomial(mu, u)) * static_cast<double>(binomial(nv, v)) *
                         std::pow(params.ones_prob, u + v) *
                         std::pow(1.0 - params.ones_prob, (mu - u) + (nv - v));

    std::vector<TypeMass> out;
    double no_path = 0.0;
    for (int u = 0; u <= mu; ++u)
        for (int v = 0; v <= nv; ++v) no_path += p_uv[u][v] * std::pow(1.0 - activation, u * v);
    out.push_back({SneakPathType{0, 0, 0}, no_path});

    for (int paths = 1; paths <= params.max_paths; ++paths) {
        for (int row_span = 1; row_span <= std::min(paths, mu); ++row_span) {
            for (int col_span = 1; col_span <= std::min(paths, nv); ++col_span) {
                if (static_cast<std::int64_t>(paths) > static_cast<std::int64_t>(row_span) * col_span) continue;
                double mass = 0.0;
                for (int u = row_span; u <= mu; ++u) {
                    for (int v = col_span; v <= nv; ++v) {
                        mass += static_cast<double>(count_arrangements(u, v, paths, row_span, col_span)) * p_uv[u][v] *
                                std::pow(activation, paths) * std::pow(1.0 - activation, u * v - paths);
                    }
                }
                if (mass > 0.0) out.push_back({SneakPathType{paths, row_span, col_span}, mass});
            }
        }
    }

    double total = 0.0;
    for (const auto& t : out) total += t.prob;
    for (auto& t : out) t.prob /= total;
    return out;
}

/// Renormalized probability that a cell sees sneak-path type `t`.
inline double p_lambda(const ChannelParams& params, const SneakPathType& t) {
    if (t.paths > params.max_paths) throw std::invalid_argument("p_lambda: type beyond max_paths cutoff");
    for (const auto& mass : path_type_distribution(params))
        if (mass.type == t) return mass.prob;
    return 0.0;
}

/// The readback channel of one cell: enumerated mixture components with their
/// network resistance ratios and probabilities. Components are grouped by
/// sneak-path network class, so types whose placement classes differ in
/// equivalent resistance are carried as separate components.
class ChannelModel {
  public:
    explicit ChannelModel(const ChannelParams& params) : params_(params) {
        params_.validate();
        if (params_.max_paths > 6)
            throw std::invalid_argument("ChannelModel: max_paths > 6 not supported by class enumeration");

        const int mu = params_.rows - 1, nv = params_.cols - 1;
        const double activation = params_.selector_fail_prob * params_.ones_prob;

        std::vector<std::vector<double>> p_uv(mu + 1, std::vector<double>(nv + 1));
        for (int u = 0; u <= mu; ++u)
            for (int v = 0; v <= nv; ++v)
                p_uv[u][v] = static_cast<double>(binomial(mu, u)) * static_cast<double>(binomial(nv, v)) *
                             std::pow(params_.ones_prob, u + v) *
                             std::pow(1.0 - params_.ones_prob, (mu - u) + (nv - v));

        double no_path = 0.0;
        for (int u = 0; u <= mu; ++u)
            for (int v = 0; v <= nv; ++v) no_path += p_uv[u][v] * std::pow(1.0 - activation, u * v);
        components_.push_back({SneakPathType{0, 0, 0}, kInf, no_path});

        for (int paths = 1; paths <= params_.max_paths; ++paths) {
            for (int row_span = 1; row_span <= std::min(paths, mu); ++row_span) {
                for (int col_span = 1; col_span <= std::min(paths, nv); ++col_span) {
                    if (static_cast<std::int64_t>(paths) > static_cast<std::int64_t>(row_span) * col_span) continue;
                    double per_subset = 0.0;
                    for (int u = row_span; u <= mu; ++u) {
                        for (int v = col_span; v <= nv; ++v) {
                            per_subset += static_cast<double>(binomial(u, row_span)) *
                                          static_cast<double>(binomial(v, col_span)) * p_uv[u][v] *
                                          std::pow(activation, paths) * std::pow(1.0 - activation, u * v - paths);
                        }
                    }
                    if (per_subset <= 0.0) continue;

                    const auto classes = detail::covering_classes(paths, row_span, col_span);
                    std::uint64_t enumerated = 0;
                    for (const auto& cls : classes) enumerated += cls.count;
                    if (enumerated != covering_subset_count(paths, row_span, col_span))
                        throw std::logic_error("ChannelModel: class enumeration disagrees with covering count");

                    for (const auto& cls : classes) {
                        components_.push_back({SneakPathType{paths, row_span, col_span},
                                               solve_alpha(cls.representative),
                                               per_subset * static_cast<double>(cls.count)});
                    }
                }
            }
        }

        double total = 0.0;
        for (const auto& c : components_) total += c.prob;
        deficit_ = std::max(0.0, 1.0 - total);
        for (auto& c : components_) c.prob /= total;
    }

    const ChannelParams& params() const { return params_; }
    const std::vector<MixtureComponent>& components() const { return components_; }

    /// Probability mass not represented because of the max_paths cutoff,
    /// before renormalization.
    double truncation_deficit() const { return deficit_; }

    /// Mean measured resistance for a stored bit under one component.
    double component_mean(int bit, const MixtureComponent& c) const {
        if (std::isinf(c.alpha)) return params_.resistance(bit);
        return 1.0 / (1.0 / params_.resistance(bit) + 1.0 / (c.alpha * params_.r_low));
    }

    /// Unquantized transition density of a single read given the stored bit.
    double transition_pdf(double r, int bit) const {
        double density = 0.0;
        for (const auto& c : components_) density += c.prob * gauss_pdf(r - component_mean(bit, c), params_.noise_sigma);
        return density;
    }

    /// Renormalized mass of one type, aggregated over its placement classes.
    double type_mass(const SneakPathType& t) const {
        double mass = 0.0;
        for (const auto& c : components_)
            if (c.type == t) mass += c.prob;
        return mass;
    }

    double min_mean(int bit) const {
        double lo = kInf;
        for (const auto& c : components_) lo = std::min(lo, component_mean(bit, c));
        return lo;
    }

    double max_mean(int bit) const {
        double hi = -kInf;
        for (const auto& c : components_) hi = std::max(hi, component_mean(bit, c));
        return hi;
    }

  private:
    ChannelParams params_;
    std::vector<MixtureComponent> components_;
    double deficit_ = 0.0;
};

/// One sampled crossbar instance: stored bits and selector failures.
struct CrossbarSample {
    int rows = 0, cols = 0;
    std::vector<std::uint8_t> bits;
    std::vector<std::uint8_t> selector_failed;

    bool bit(int i, int j) const { return bits[static_cast<std::size_t>(i) * cols + j] != 0; }
    bool failed(int i, int j) const { return selector_failed[static_cast<std::size_t>(i) * cols + j] != 0; }
};

/// Draw one array: cells i.i.d. Bernoulli(ones_prob), selectors i.i.d.
/// Bernoulli(selector_fail_prob).
inline CrossbarSample sample_array(const ChannelParams& params, std::mt19937_64& rng) {
    CrossbarSample a;
    a.rows = params.rows;
    a.cols = params.cols;
    const std::size_t n = static_cast<std::size_t>(params.rows) * params.cols;
    a.bits.resize(n);
    a.selector_failed.resize(n);
    for (std::size_t k = 0; k < n; ++k) a.bits[k] = uniform01(rng) < params.ones_prob ? 1 : 0;
    for (std::size_t k = 0; k < n; ++k) a.selector_failed[k] = uniform01(rng) < params.selector_fail_prob ? 1 : 0;
    return a;
}

/// Exact sneak-path configuration of the target cell: every intersection
/// cell (l, c) with l != row, c != col such that the three path cells store
/// ones and the intersection cell's selector has failed.
inline PathConfig cell_path_config(const CrossbarSample& a, int row, int col) {
    PathConfig config;
    std::vector<int> one_cols, one_rows;
    for (int c = 0; c < a.cols; ++c)
        if (c != col && a.bit(row, c)) one_cols.push_back(c);
    for (int r = 0; r < a.rows; ++r)
        if (r != row && a.bit(r, col)) one_rows.push_back(r);
    for (int r : one_rows)
        for (int c : one_cols)
            if (a.bit(r, c) && a.failed(r, c)) config.cells.emplace_back(r, c);
    return config;
}

/// N noisy reads of one cell. The sneak-path state is frozen across the
/// reads; only the Gaussian noise is redrawn.
inline std::vector<double> sample_reads(int bit, const PathConfig& config, int n_reads, const ChannelParams& params,
                                        std::mt19937_64& rng) {
    if (n_reads < 1) throw std::invalid_argument("sample_reads: need at least one read");
    const double mean =
        config.empty() ? params.resistance(bit) : rho(bit, solve_alpha(config), params);
    std::normal_distribution<double> noise(0.0, params.noise_sigma);
    std::vector<double> reads(static_cast<std::size_t>(n_reads));
    for (auto& r : reads) r = mean + noise(rng);
    return reads;
}

/// Empirical sneak-path type distribution from exact array simulation with a
/// uniformly random target cell per trial. Monte Carlo oracle for
/// path_type_distribution.
inline std::vector<TypeMass> mc_type_histogram(const ChannelParams& params, std::uint64_t trials,
                                               std::mt19937_64& rng) {
    if (trials < 1) throw std::invalid_argument("mc_type_histogram: need at least one trial");
    std::map<SneakPathType, std::uint64_t> counts;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const CrossbarSample a = sample_array(params, rng);
        const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(params.rows));
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(params.cols));
        ++counts[cell_path_config(a, i, j).type()];
    }
    std::vector<TypeMass> out;
    out.reserve(counts.size());
    for (const auto& [type, count] : counts)
        out.push_back({type, static_cast<double>(count) / static_cast<double>(trials)});
    return out;
}

} // namespace reramq
