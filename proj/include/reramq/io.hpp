#pragma once

// JSON (de)serialization for channel parameters, quantizers, and experiment
// configurations, plus the CSV formatting helpers shared by the experiment
// runners. Parsing accepts partial objects and fills the documented
// defaults; unknown keys are ignored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "reramq/channel.hpp"
#include "reramq/quantizer.hpp"

namespace reramq {

inline ChannelParams channel_params_from_json(const nlohmann::json& j) {
    ChannelParams p;
    if (j.contains("m")) p.rows = j.at("m").get<int>();
    if (j.contains("n")) p.cols = j.at("n").get<int>();
    if (j.contains("r0_ohm")) p.r_high = j.at("r0_ohm").get<double>();
    if (j.contains("r1_ohm")) p.r_low = j.at("r1_ohm").get<double>();
    if (j.contains("p_f")) p.selector_fail_prob = j.at("p_f").get<double>();
    if (j.contains("q1")) p.ones_prob = j.at("q1").get<double>();
    if (j.contains("sigma_eta_ohm")) p.noise_sigma = j.at("sigma_eta_ohm").get<double>();
    if (j.contains("l_max")) p.max_paths = j.at("l_max").get<int>();
    p.validate();
    return p;
}

inline nlohmann::json channel_params_to_json(const ChannelParams& p) {
    return nlohmann::json{{"m", p.rows},
                          {"n", p.cols},
                          {"r0_ohm", p.r_high},
                          {"r1_ohm", p.r_low},
                          {"p_f", p.selector_fail_prob},
                          {"q1", p.ones_prob},
                          {"sigma_eta_ohm", p.noise_sigma},
                          {"l_max", p.max_paths}};
}

inline Quantizer quantizer_from_json(const nlohmann::json& j) {
    const int bits = j.at("q").get<int>();
    if (bits < 1 || bits > 20) throw std::invalid_argument("quantizer_from_json: q outside [1, 20]");
    Quantizer quant;
    quant.boundaries = j.at("boundaries_ohm").get<std::vector<double>>();
    if (quant.levels() != (1 << bits))
        throw std::invalid_argument("quantizer_from_json: boundary count does not match 2^q levels");
    quant.validate();
    return quant;
}

inline nlohmann::json quantizer_to_json(const Quantizer& quant) {
    const int levels = quant.levels();
    if (levels < 2 || (levels & (levels - 1)) != 0)
        throw std::invalid_argument("quantizer_to_json: level count is not a power of two");
    int bits = 0;
    while ((1 << bits) < levels) ++bits;
    return nlohmann::json{{"q", bits}, {"boundaries_ohm", quant.boundaries}};
}

/// Detector identifiers accepted in configs and echoed in CSV rows.
inline const std::vector<std::string>& detector_names() {
    static const std::vector<std::string> names{"threshold-optimized", "threshold-baseline", "map"};
    return names;
}

/// Code identifiers accepted by the coded-FER runner.
inline const std::vector<std::string>& code_names() {
    static const std::vector<std::string> names{"bch127-113", "bch127-92"};
    return names;
}

/// Everything an experiment run needs: the channel, the sweep axes, the
/// detector and code selections, and the Monte Carlo budget.
struct ExperimentConfig {
    ChannelParams params;
    std::vector<double> sweep = {20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
    std::vector<int> reads = {1, 2, 4};
    std::vector<int> quant_bits = {1, 3};
    std::vector<std::string> detectors = {"threshold-optimized", "threshold-baseline", "map"};
    std::vector<std::string> codes = {"bch127-113"};
    std::uint64_t trials = 1000000;
    std::uint64_t frames = 10000;
    std::uint64_t exact_mc_samples = 0;
    int mi_grid = 1000;
    std::uint64_t seed = 1;
    int jobs = 1;

    void validate() const {
        params.validate();
        if (sweep.empty()) throw std::invalid_argument("ExperimentConfig: empty sigma sweep");
        for (double s : sweep)
            if (!(s > 0.0)) throw std::invalid_argument("ExperimentConfig: sweep sigma must be positive");
        if (reads.empty()) throw std::invalid_argument("ExperimentConfig: empty read list");
        for (int n : reads)
            if (n < 1) throw std::invalid_argument("ExperimentConfig: reads must be >= 1");
        if (quant_bits.empty()) throw std::invalid_argument("ExperimentConfig: empty quantizer bit list");
        for (int q : quant_bits)
            if (q < 1 || q > 8) throw std::invalid_argument("ExperimentConfig: quant_bits outside [1, 8]");
        if (detectors.empty()) throw std::invalid_argument("ExperimentConfig: empty detector list");
        for (const auto& d : detectors) {
            const auto& known = detector_names();
            if (std::find(known.begin(), known.end(), d) == known.end())
                throw std::invalid_argument("ExperimentConfig: unknown detector '" + d + "'");
        }
        for (const auto& c : codes) {
            const auto& known = code_names();
            if (std::find(known.begin(), known.end(), c) == known.end())
                throw std::invalid_argument("ExperimentConfig: unknown code '" + c + "'");
        }
        if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
        if (frames < 1) throw std::invalid_argument("ExperimentConfig: frames must be >= 1");
        if (mi_grid < 2) throw std::invalid_argument("ExperimentConfig: mi_grid must be >= 2");
        if (jobs < 1) throw std::invalid_argument("ExperimentConfig: jobs must be >= 1");
    }
};

namespace detail {

/// Accept either a single string or an array of strings.
inline std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    return v.get<std::vector<std::string>>();
}

} // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.params = channel_params_from_json(j);
    if (j.contains("sweep")) cfg.sweep = j.at("sweep").get<std::vector<double>>();
    if (j.contains("reads")) {
        const auto& v = j.at("reads");
        cfg.reads = v.is_number() ? std::vector<int>{v.get<int>()} : v.get<std::vector<int>>();
    }
    if (j.contains("quant_bits")) {
        const auto& v = j.at("quant_bits");
        cfg.quant_bits = v.is_number() ? std::vector<int>{v.get<int>()} : v.get<std::vector<int>>();
    }
    if (j.contains("detector")) cfg.detectors = detail::string_list(j, "detector");
    if (j.contains("code")) {
        if (j.at("code").is_null())
            cfg.codes.clear();
        else
            cfg.codes = detail::string_list(j, "code");
    }
    if (j.contains("trials")) cfg.trials = j.at("trials").get<std::uint64_t>();
    if (j.contains("frames")) cfg.frames = j.at("frames").get<std::uint64_t>();
    if (j.contains("exact_mc_samples")) cfg.exact_mc_samples = j.at("exact_mc_samples").get<std::uint64_t>();
    if (j.contains("mi_grid")) cfg.mi_grid = j.at("mi_grid").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    cfg.validate();
    return cfg;
}

/// Fixed-format number rendering so identical runs emit identical bytes.
inline std::string csv_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

} // namespace reramq
