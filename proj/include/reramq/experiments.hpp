#pragma once

// Monte Carlo experiment runners: MI sweeps, uncoded BER, coded FER, and MAP
// BEP tables, all emitting CSV text, plus a gnuplot script generator for the
// resulting files. Trials are partitioned into fixed-size blocks with
// per-block RNG substreams derived from (seed, combo, block), so every
// runner produces identical bytes for any worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "reramq/bch.hpp"
#include "reramq/channel.hpp"
#include "reramq/io.hpp"
#include "reramq/map_detector.hpp"
#include "reramq/math_util.hpp"
#include "reramq/quantizer.hpp"
#include "reramq/threshold.hpp"

namespace reramq {

inline constexpr const char* kResultHeader = "sigma_eta,N,q,detector,code,metric,value,ci95,trials";
inline constexpr const char* kMiHeader = "sigma_eta,N,q,mi_bits,method";
inline constexpr const char* kBepHeader = "sigma_eta,N,bep,ci95,trials,method";

namespace detail {

/// One prepared detector: a threshold or a MAP decision rule.
struct PreparedDetector {
    std::string name;
    std::string q_label;
    double threshold = 0.0;
    std::optional<MapDecisionRule> rule;

    int decide(double avg) const { return rule ? rule->decide(avg) : threshold_detect(avg, threshold); }
};

/// Instantiate the configured detectors against one (sigma, reads) channel.
/// The baseline threshold is designed for a single read and reused verbatim
/// for multiple reads; the optimized threshold and the MAP rule are designed
/// for the actual read count.
inline std::vector<PreparedDetector> prepare_detectors(const ChannelModel& model, int n_reads,
                                                       const std::vector<std::string>& names) {
    std::vector<PreparedDetector> out;
    out.reserve(names.size());
    for (const auto& name : names) {
        PreparedDetector d;
        d.name = name;
        if (name == "threshold-optimized") {
            d.q_label = "1";
            d.threshold = optimize_threshold(model, n_reads).t1;
        } else if (name == "threshold-baseline") {
            d.q_label = "1";
            d.threshold = baseline_single_read_threshold(model).t1;
        } else if (name == "map") {
            d.q_label = "inf";
            d.rule = map_decision_rule(model, n_reads);
        } else {
            throw std::invalid_argument("prepare_detectors: unknown detector '" + name + "'");
        }
        out.push_back(std::move(d));
    }
    return out;
}

constexpr std::uint64_t kBerBlockSize = 8192;
constexpr std::uint64_t kFerBlockSize = 256;

struct CountRow {
    std::uint64_t errors = 0;
};

} // namespace detail

/// A finished measurement destined for one CSV row.
struct ResultRow {
    double sigma_eta = 0.0;
    int n_reads = 1;
    std::string q_label;
    std::string detector;
    std::string code;
    std::string metric;
    double value = 0.0;
    double ci95 = 0.0;
    std::uint64_t trials = 0;
};

inline std::string result_csv(const std::vector<ResultRow>& rows) {
    std::string out = kResultHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += csv_number(r.sigma_eta);
        out += ',';
        out += std::to_string(r.n_reads);
        out += ',';
        out += r.q_label;
        out += ',';
        out += r.detector;
        out += ',';
        out += r.code;
        out += ',';
        out += r.metric;
        out += ',';
        out += csv_number(r.value);
        out += ',';
        out += csv_number(r.ci95);
        out += ',';
        out += std::to_string(r.trials);
        out += '\n';
    }
    return out;
}

/// Uncoded bit error rates per (sigma, reads, detector). Every trial draws a
/// fresh array and a uniformly random target cell, builds that cell's exact
/// sneak-path network, and scores all configured detectors on the same
/// averaged readback, so detector comparisons share their randomness.
inline std::vector<ResultRow> run_uncoded_ber(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ResultRow> rows;
    std::size_t combo = 0;
    for (double sigma : cfg.sweep) {
        ChannelParams params = cfg.params;
        params.noise_sigma = sigma;
        const ChannelModel model(params);
        for (int n_reads : cfg.reads) {
            const auto detectors = detail::prepare_detectors(model, n_reads, cfg.detectors);
            const double sigma_avg = sigma / std::sqrt(static_cast<double>(n_reads));
            const std::uint64_t blocks = (cfg.trials + detail::kBerBlockSize - 1) / detail::kBerBlockSize;
            const std::uint64_t combo_seed = substream_seed(cfg.seed, static_cast<std::uint64_t>(combo));

            std::vector<std::atomic<std::uint64_t>> errors(detectors.size());
            for (auto& e : errors) e.store(0);

            detail::run_blocks(blocks, cfg.jobs, [&](std::uint64_t block) {
                std::mt19937_64 rng(substream_seed(combo_seed, block));
                std::normal_distribution<double> noise(0.0, sigma_avg);
                const std::uint64_t begin = block * detail::kBerBlockSize;
                const std::uint64_t end = std::min(cfg.trials, begin + detail::kBerBlockSize);
                std::vector<std::uint64_t> local(detectors.size(), 0);
                for (std::uint64_t t = begin; t < end; ++t) {
                    const CrossbarSample array = sample_array(params, rng);
                    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(params.rows));
                    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(params.cols));
                    const int bit = array.bit(i, j) ? 1 : 0;
                    const PathConfig config = cell_path_config(array, i, j);
                    const double mean = config.empty() ? params.resistance(bit) : rho(bit, solve_alpha(config), params);
                    const double avg = mean + noise(rng);
                    for (std::size_t d = 0; d < detectors.size(); ++d)
                        if (detectors[d].decide(avg) != bit) ++local[d];
                }
                for (std::size_t d = 0; d < detectors.size(); ++d)
                    errors[d].fetch_add(local[d], std::memory_order_relaxed);
            });

            for (std::size_t d = 0; d < detectors.size(); ++d) {
                const std::uint64_t k = errors[d].load();
                rows.push_back({sigma, n_reads, detectors[d].q_label, detectors[d].name, "none", "ber",
                                static_cast<double>(k) / static_cast<double>(cfg.trials),
                                wilson_half_width(k, cfg.trials), cfg.trials});
            }
            ++combo;
        }
    }
    return rows;
}

/// Coded frame error rates. A frame is one array whose first n cells (row
/// major) store a fresh systematic codeword over random message bits; the
/// remaining cells keep their random fill. Hard decisions from each detector
/// feed bounded-distance decoding, and a frame fails on decoder failure or a
/// wrong message.
inline std::vector<ResultRow> run_coded_fer(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.codes.empty()) throw std::invalid_argument("run_coded_fer: no code selected");
    std::vector<ResultRow> rows;
    std::size_t combo = 0;
    for (const auto& code_name : cfg.codes) {
        const BchCode code = code_name == "bch127-113" ? BchCode::bch_127_113() : BchCode::bch_127_92();
        if (cfg.params.rows * cfg.params.cols < code.n())
            throw std::invalid_argument("run_coded_fer: array too small for one codeword");
        for (double sigma : cfg.sweep) {
            ChannelParams params = cfg.params;
            params.noise_sigma = sigma;
            const ChannelModel model(params);
            for (int n_reads : cfg.reads) {
                const auto detectors = detail::prepare_detectors(model, n_reads, cfg.detectors);
                const double sigma_avg = sigma / std::sqrt(static_cast<double>(n_reads));
                const std::uint64_t blocks = (cfg.frames + detail::kFerBlockSize - 1) / detail::kFerBlockSize;
                const std::uint64_t combo_seed = substream_seed(cfg.seed, static_cast<std::uint64_t>(combo));

                std::vector<std::atomic<std::uint64_t>> failures(detectors.size());
                for (auto& f : failures) f.store(0);

                detail::run_blocks(blocks, cfg.jobs, [&](std::uint64_t block) {
                    std::mt19937_64 rng(substream_seed(combo_seed, block));
                    std::normal_distribution<double> noise(0.0, sigma_avg);
                    const std::uint64_t begin = block * detail::kFerBlockSize;
                    const std::uint64_t end = std::min(cfg.frames, begin + detail::kFerBlockSize);
                    std::vector<std::uint64_t> local(detectors.size(), 0);
                    std::vector<std::uint8_t> message(static_cast<std::size_t>(code.k()));
                    std::vector<double> avgs(static_cast<std::size_t>(code.n()));
                    std::vector<std::uint8_t> word(static_cast<std::size_t>(code.n()));
                    for (std::uint64_t f = begin; f < end; ++f) {
                        for (auto& b : message) b = uniform01(rng) < 0.5 ? 1 : 0;
                        const std::vector<std::uint8_t> codeword = code.encode(message);
                        CrossbarSample array = sample_array(params, rng);
                        for (int c = 0; c < code.n(); ++c)
                            array.bits[static_cast<std::size_t>(c)] = codeword[static_cast<std::size_t>(c)];
                        for (int c = 0; c < code.n(); ++c) {
                            const int i = c / params.cols, j = c % params.cols;
                            const int bit = codeword[static_cast<std::size_t>(c)] ? 1 : 0;
                            const PathConfig config = cell_path_config(array, i, j);
                            const double mean =
                                config.empty() ? params.resistance(bit) : rho(bit, solve_alpha(config), params);
                            avgs[static_cast<std::size_t>(c)] = mean + noise(rng);
                        }
                        for (std::size_t d = 0; d < detectors.size(); ++d) {
                            for (int c = 0; c < code.n(); ++c)
                                word[static_cast<std::size_t>(c)] =
                                    static_cast<std::uint8_t>(detectors[d].decide(avgs[static_cast<std::size_t>(c)]));
                            const auto decoded = code.decode(word);
                            if (!decoded || *decoded != codeword) ++local[d];
                        }
                    }
                    for (std::size_t d = 0; d < detectors.size(); ++d)
                        failures[d].fetch_add(local[d], std::memory_order_relaxed);
                });

                for (std::size_t d = 0; d < detectors.size(); ++d) {
                    const std::uint64_t k = failures[d].load();
                    rows.push_back({sigma, n_reads, detectors[d].q_label, detectors[d].name, code_name, "fer",
                                    static_cast<double>(k) / static_cast<double>(cfg.frames),
                                    wilson_half_width(k, cfg.frames), cfg.frames});
                }
                ++combo;
            }
        }
    }
    return rows;
}

/// One MI sweep measurement.
struct MiRow {
    double sigma_eta = 0.0;
    int n_reads = 1;
    std::string q_label;
    double mi_bits = 0.0;
    std::string method;
};

inline std::string mi_csv(const std::vector<MiRow>& rows) {
    std::string out = kMiHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += csv_number(r.sigma_eta);
        out += ',';
        out += std::to_string(r.n_reads);
        out += ',';
        out += r.q_label;
        out += ',';
        out += csv_number(r.mi_bits);
        out += ',';
        out += r.method;
        out += '\n';
    }
    return out;
}

/// Mutual information sweep: for every (sigma, reads) pair, the MI of each
/// designed 2^q-level quantizer on the averaged readback, the unquantized
/// averaged-readback MI, and optionally a Monte Carlo estimate of the exact
/// N-read vector MI.
inline std::vector<MiRow> run_mi_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<MiRow> rows;
    std::size_t combo = 0;
    for (double sigma : cfg.sweep) {
        ChannelParams params = cfg.params;
        params.noise_sigma = sigma;
        const ChannelModel model(params);
        for (int n_reads : cfg.reads) {
            for (int bits : cfg.quant_bits) {
                const DesignResult design = design_dp(model, n_reads, 1 << bits, cfg.mi_grid);
                rows.push_back({sigma, n_reads, std::to_string(bits), design.mi_bits, "dp-avg"});
            }
            const FineChannelTable table(model, n_reads, fine_grid(model, cfg.mi_grid));
            rows.push_back({sigma, n_reads, "inf", table.fine_mi(), "fine-avg"});
            if (cfg.exact_mc_samples > 0) {
                const MiEstimate est =
                    mc_mutual_information(params, n_reads, cfg.exact_mc_samples,
                                          substream_seed(cfg.seed, static_cast<std::uint64_t>(combo)));
                rows.push_back({sigma, n_reads, "inf", est.mi_bits, "exact-mc"});
            }
            ++combo;
        }
    }
    return rows;
}

/// MAP bit error probability rows: the 1D quadrature value and a Monte Carlo
/// cross-check per (sigma, reads).
inline std::string run_bep_map(const ExperimentConfig& cfg) {
    cfg.validate();
    std::string out = kBepHeader;
    out += '\n';
    std::size_t combo = 0;
    for (double sigma : cfg.sweep) {
        ChannelParams params = cfg.params;
        params.noise_sigma = sigma;
        const ChannelModel model(params);
        for (int n_reads : cfg.reads) {
            const double quad = bep_map_quadrature_1d(model, n_reads);
            out += csv_number(sigma);
            out += ',';
            out += std::to_string(n_reads);
            out += ',';
            out += csv_number(quad);
            out += ",0,0,quadrature\n";
            const BepEstimate mc = bep_map_mc(params, n_reads, cfg.trials,
                                              substream_seed(cfg.seed, static_cast<std::uint64_t>(combo)), cfg.jobs);
            out += csv_number(sigma);
            out += ',';
            out += std::to_string(n_reads);
            out += ',';
            out += csv_number(mc.bep);
            out += ',';
            out += csv_number(mc.ci95);
            out += ',';
            out += std::to_string(mc.trials);
            out += ",mc\n";
            ++combo;
        }
    }
    return out;
}

/// Sneak-path mixture table: one row per resistance component (the path-free
/// row carries an infinite alpha).
inline std::string alpha_table_csv(const ChannelParams& params) {
    const ChannelModel model(params);
    std::string out = "paths,row_span,col_span,alpha,prob\n";
    for (const auto& comp : model.components()) {
        out += std::to_string(comp.type.paths);
        out += ',';
        out += std::to_string(comp.type.row_span);
        out += ',';
        out += std::to_string(comp.type.col_span);
        out += ',';
        out += csv_number(comp.alpha);
        out += ',';
        out += csv_number(comp.prob);
        out += '\n';
    }
    return out;
}

namespace detail {

struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline ParsedCsv parse_csv(const std::string& text) {
    ParsedCsv out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (out.header.empty())
            out.header = std::move(fields);
        else
            out.rows.push_back(std::move(fields));
    }
    return out;
}

inline std::size_t column_index(const ParsedCsv& csv, const std::string& name) {
    const auto it = std::find(csv.header.begin(), csv.header.end(), name);
    if (it == csv.header.end()) throw std::invalid_argument("emit_plot_script: missing CSV column '" + name + "'");
    return static_cast<std::size_t>(it - csv.header.begin());
}

} // namespace detail

/// Turn a results CSV into a gnuplot script. MI sweeps plot on a linear y
/// axis; BER, FER, and BEP tables on a log axis. Each series becomes an
/// inline data block, so the script is self-contained. A CSV without data
/// rows yields a script with settings only.
inline std::string emit_plot_script_from_text(const std::string& csv_text) {
    const detail::ParsedCsv csv = detail::parse_csv(csv_text);
    std::string out = "# generated plot script\nset datafile separator ','\nset xlabel 'sigma_eta (ohm)'\nset key outside\n";

    std::size_t x_col = 0, y_col = 0;
    std::vector<std::size_t> label_cols;
    bool log_y = false;
    std::string y_label;
    if (csv.header.empty()) {
        out += "# empty CSV: nothing to plot\n";
        return out;
    }
    const auto has = [&](const char* name) {
        return std::find(csv.header.begin(), csv.header.end(), name) != csv.header.end();
    };
    if (has("mi_bits")) {
        y_col = detail::column_index(csv, "mi_bits");
        for (const char* c : {"N", "q", "method"}) label_cols.push_back(detail::column_index(csv, c));
        y_label = "mutual information (bits)";
    } else if (has("bep")) {
        y_col = detail::column_index(csv, "bep");
        for (const char* c : {"N", "method"}) label_cols.push_back(detail::column_index(csv, c));
        log_y = true;
        y_label = "bit error probability";
    } else if (has("value")) {
        y_col = detail::column_index(csv, "value");
        for (const char* c : {"N", "detector", "code", "metric"}) label_cols.push_back(detail::column_index(csv, c));
        log_y = true;
        y_label = "error rate";
    } else {
        throw std::invalid_argument("emit_plot_script: unrecognized CSV header");
    }
    x_col = detail::column_index(csv, "sigma_eta");
    out += "set ylabel '" + y_label + "'\n";
    if (log_y) out += "set logscale y\n";

    std::map<std::string, std::vector<std::pair<std::string, std::string>>> series;
    for (const auto& row : csv.rows) {
        if (row.size() != csv.header.size()) throw std::invalid_argument("emit_plot_script: ragged CSV row");
        std::string key;
        for (std::size_t c : label_cols) {
            if (!key.empty()) key += " ";
            key += csv.header[c] + "=" + row[c];
        }
        series[key].emplace_back(row[x_col], row[y_col]);
    }
    if (series.empty()) {
        out += "# no data rows\n";
        return out;
    }

    std::vector<std::string> titles;
    int idx = 0;
    for (const auto& [key, points] : series) {
        out += "$series" + std::to_string(idx) + " << EOD\n";
        for (const auto& [x, y] : points) out += x + " " + y + "\n";
        out += "EOD\n";
        titles.push_back(key);
        ++idx;
    }
    out += "plot ";
    for (std::size_t s = 0; s < titles.size(); ++s) {
        if (s) out += ", ";
        out += "$series" + std::to_string(s) + " using 1:2 with linespoints title '" + titles[s] + "'";
    }
    out += "\n";
    return out;
}

inline std::string emit_plot_script(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("emit_plot_script: cannot open " + csv_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return emit_plot_script_from_text(buf.str());
}

} // namespace reramq
