// Command-line driver for the sneak-path channel experiments: quantizer and
// threshold design, MI sweeps, uncoded/coded error-rate simulation, MAP BEP
// tables, and the sneak-path resistance table. CSV outputs written via
// --out also get a sibling <out>.gp gnuplot script.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "reramq/reramq.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (channel + experiment fields)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "RNG seed override");
    cmd->add_option("--jobs", args.jobs, "worker thread count");
    cmd->add_option("--out", args.out_path, "output file (default stdout)");
}

reramq::ExperimentConfig load_config(const CommonArgs& args) {
    reramq::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        nlohmann::json j;
        in >> j;
        cfg = reramq::experiment_config_from_json(j);
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.jobs) cfg.jobs = *args.jobs;
    cfg.validate();
    return cfg;
}

void write_output(const CommonArgs& args, const std::string& text, bool with_plot_script) {
    if (args.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + args.out_path);
    out << text;
    out.close();
    if (with_plot_script) {
        std::ofstream plot(args.out_path + ".gp", std::ios::binary);
        plot << reramq::emit_plot_script_from_text(text);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sneak-path channel quantization and detection experiments"};
    app.require_subcommand(1);

    CommonArgs design_quant_args;
    double dq_sigma = 80.0;
    int dq_reads = 1, dq_bits = 3, dq_grid = 1000;
    auto* design_quant = app.add_subcommand("design-quantizer", "design a maximum-MI quantizer");
    add_common(design_quant, design_quant_args);
    design_quant->add_option("--sigma", dq_sigma, "read noise sigma (ohm)");
    design_quant->add_option("--reads", dq_reads, "number of reads N")->check(CLI::PositiveNumber);
    design_quant->add_option("--bits", dq_bits, "quantizer bits q")->check(CLI::Range(1, 8));
    design_quant->add_option("--grid", dq_grid, "fine grid size h");

    CommonArgs design_thresh_args;
    double dt_sigma = 80.0;
    int dt_reads = 1, dt_scan = 128;
    auto* design_thresh = app.add_subcommand("design-threshold", "optimize the single-bit detector threshold");
    add_common(design_thresh, design_thresh_args);
    design_thresh->add_option("--sigma", dt_sigma, "read noise sigma (ohm)");
    design_thresh->add_option("--reads", dt_reads, "number of reads N")->check(CLI::PositiveNumber);
    design_thresh->add_option("--ns", dt_scan, "derivative scan steps")->check(CLI::Range(2, 1 << 20));

    CommonArgs mi_args;
    std::uint64_t mi_exact_mc = 0;
    auto* mi_sweep = app.add_subcommand("mi-sweep", "mutual information sweep CSV");
    add_common(mi_sweep, mi_args);
    mi_sweep->add_option("--exact-mc", mi_exact_mc, "Monte Carlo samples for exact-MI rows (0 disables)");

    CommonArgs ber_args;
    std::optional<std::uint64_t> ber_trials;
    auto* ber = app.add_subcommand("ber", "uncoded bit error rate CSV");
    add_common(ber, ber_args);
    ber->add_option("--trials", ber_trials, "Monte Carlo trials per point");

    CommonArgs fer_args;
    std::optional<std::uint64_t> fer_frames;
    std::string fer_code;
    auto* fer = app.add_subcommand("fer", "coded frame error rate CSV");
    add_common(fer, fer_args);
    fer->add_option("--frames", fer_frames, "frames per point");
    fer->add_option("--code", fer_code, "code selection")->check(CLI::IsMember(reramq::code_names()));

    CommonArgs bep_args;
    std::vector<double> bep_sigma;
    std::optional<int> bep_reads;
    std::optional<std::uint64_t> bep_trials;
    auto* bep = app.add_subcommand("bep-map", "MAP bit error probability CSV");
    add_common(bep, bep_args);
    bep->add_option("--sigma", bep_sigma, "noise sigma values (ohm)");
    bep->add_option("--reads", bep_reads, "number of reads N");
    bep->add_option("--trials", bep_trials, "Monte Carlo trials per point");

    CommonArgs alpha_args;
    auto* alpha = app.add_subcommand("alpha-table", "sneak-path resistance mixture CSV");
    add_common(alpha, alpha_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (design_quant->parsed()) {
            reramq::ExperimentConfig cfg = load_config(design_quant_args);
            cfg.params.noise_sigma = dq_sigma;
            const reramq::ChannelModel model(cfg.params);
            const reramq::DesignResult result = reramq::design_dp(model, dq_reads, 1 << dq_bits, dq_grid);
            nlohmann::json j = reramq::quantizer_to_json(result.quantizer);
            j["mi_bits"] = result.mi_bits;
            write_output(design_quant_args, j.dump(2) + "\n", false);
        } else if (design_thresh->parsed()) {
            reramq::ExperimentConfig cfg = load_config(design_thresh_args);
            cfg.params.noise_sigma = dt_sigma;
            const reramq::ChannelModel model(cfg.params);
            const reramq::ThresholdSearch search = reramq::optimize_threshold(model, dt_reads, dt_scan);
            const nlohmann::json j{{"t1_star_ohm", search.t1},
                                   {"mi_bits", search.mi_bits},
                                   {"p0", search.bac.p0},
                                   {"p1", search.bac.p1}};
            write_output(design_thresh_args, j.dump(2) + "\n", false);
        } else if (mi_sweep->parsed()) {
            reramq::ExperimentConfig cfg = load_config(mi_args);
            if (mi_exact_mc > 0) cfg.exact_mc_samples = mi_exact_mc;
            write_output(mi_args, reramq::mi_csv(reramq::run_mi_sweep(cfg)), true);
        } else if (ber->parsed()) {
            reramq::ExperimentConfig cfg = load_config(ber_args);
            if (ber_trials) cfg.trials = *ber_trials;
            write_output(ber_args, reramq::result_csv(reramq::run_uncoded_ber(cfg)), true);
        } else if (fer->parsed()) {
            reramq::ExperimentConfig cfg = load_config(fer_args);
            if (fer_frames) cfg.frames = *fer_frames;
            if (!fer_code.empty()) cfg.codes = {fer_code};
            write_output(fer_args, reramq::result_csv(reramq::run_coded_fer(cfg)), true);
        } else if (bep->parsed()) {
            reramq::ExperimentConfig cfg = load_config(bep_args);
            if (!bep_sigma.empty()) cfg.sweep = bep_sigma;
            if (bep_reads) cfg.reads = {*bep_reads};
            if (bep_trials) cfg.trials = *bep_trials;
            cfg.validate();
            write_output(bep_args, reramq::run_bep_map(cfg), true);
        } else if (alpha->parsed()) {
            reramq::ExperimentConfig cfg = load_config(alpha_args);
            write_output(alpha_args, reramq::alpha_table_csv(cfg.params), false);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
