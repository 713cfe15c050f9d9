#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "reramq/experiments.hpp"
#include "reramq/io.hpp"

using namespace reramq;

namespace {

struct Cells {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Cells parse(const std::string& csv) {
    Cells out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (out.header.empty())
            out.header = fields;
        else
            out.rows.push_back(fields);
    }
    return out;
}

double field_num(const Cells& c, std::size_t row, const std::string& name) {
    for (std::size_t i = 0; i < c.header.size(); ++i)
        if (c.header[i] == name) return std::stod(c.rows[row][i]);
    FAIL("missing column " << name);
    return 0.0;
}

std::string field_str(const Cells& c, std::size_t row, const std::string& name) {
    for (std::size_t i = 0; i < c.header.size(); ++i)
        if (c.header[i] == name) return c.rows[row][i];
    FAIL("missing column " << name);
    return {};
}

} // namespace

TEST_CASE("channel params JSON round trip and defaults") {
    const ChannelParams defaults;
    const ChannelParams parsed = channel_params_from_json(nlohmann::json::object());
    CHECK(parsed.rows == defaults.rows);
    CHECK(parsed.r_high == defaults.r_high);
    CHECK(parsed.noise_sigma == defaults.noise_sigma);

    ChannelParams custom;
    custom.rows = 8;
    custom.cols = 12;
    custom.r_high = 2000.0;
    custom.r_low = 50.0;
    custom.selector_fail_prob = 0.01;
    custom.ones_prob = 0.4;
    custom.noise_sigma = 33.0;
    custom.max_paths = 3;
    const ChannelParams back = channel_params_from_json(channel_params_to_json(custom));
    CHECK(back.rows == custom.rows);
    CHECK(back.cols == custom.cols);
    CHECK(back.r_high == custom.r_high);
    CHECK(back.r_low == custom.r_low);
    CHECK(back.selector_fail_prob == custom.selector_fail_prob);
    CHECK(back.ones_prob == custom.ones_prob);
    CHECK(back.noise_sigma == custom.noise_sigma);
    CHECK(back.max_paths == custom.max_paths);

    CHECK_THROWS_AS(channel_params_from_json(nlohmann::json{{"r1_ohm", 5000.0}}), std::invalid_argument);
}

TEST_CASE("quantizer JSON round trip") {
    const Quantizer quant{{200.0, 550.0, 800.0}};
    const nlohmann::json j = quantizer_to_json(quant);
    CHECK(j.at("q").get<int>() == 2);
    const Quantizer back = quantizer_from_json(j);
    CHECK(back.boundaries == quant.boundaries);

    CHECK_THROWS_AS(quantizer_from_json(nlohmann::json{{"q", 2}, {"boundaries_ohm", {550.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(quantizer_to_json((Quantizer{{100.0, 200.0}})), std::invalid_argument);

    const nlohmann::json extra{{"q", 1}, {"boundaries_ohm", {550.0}}, {"mi_bits", 0.9}};
    CHECK(quantizer_from_json(extra).boundaries == std::vector<double>{550.0});
}

TEST_CASE("experiment config parsing") {
    SECTION("defaults from empty object") {
        const ExperimentConfig cfg = experiment_config_from_json(nlohmann::json::object());
        CHECK(cfg.sweep.size() == 11);
        CHECK(cfg.sweep.front() == 20.0);
        CHECK(cfg.sweep.back() == 120.0);
        CHECK(cfg.reads == std::vector<int>{1, 2, 4});
        CHECK(cfg.trials == 1000000);
        CHECK(cfg.frames == 10000);
        CHECK(cfg.mi_grid == 1000);
    }
    SECTION("detector accepts string or array, code accepts null") {
        const auto one = experiment_config_from_json(nlohmann::json{{"detector", "map"}});
        CHECK(one.detectors == std::vector<std::string>{"map"});
        const auto two = experiment_config_from_json(
            nlohmann::json{{"detector", {"map", "threshold-optimized"}}, {"code", nullptr}});
        CHECK(two.detectors.size() == 2);
        CHECK(two.codes.empty());
    }
    SECTION("scalar reads and channel overrides") {
        const auto cfg = experiment_config_from_json(
            nlohmann::json{{"reads", 3}, {"sigma_eta_ohm", 55.0}, {"p_f", 0.0}, {"seed", 99}});
        CHECK(cfg.reads == std::vector<int>{3});
        CHECK(cfg.params.noise_sigma == 55.0);
        CHECK(cfg.params.selector_fail_prob == 0.0);
        CHECK(cfg.seed == 99);
    }
    SECTION("rejects bad values") {
        CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"sweep", nlohmann::json::array()}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"detector", "viterbi"}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"code", "bch255-239"}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"reads", 0}}), std::invalid_argument);
    }
}

TEST_CASE("mi sweep rows and orderings") {
    ExperimentConfig cfg;
    cfg.sweep = {80.0};
    cfg.reads = {1, 3};
    cfg.quant_bits = {1, 3};
    cfg.mi_grid = 400;
    const std::vector<MiRow> rows = run_mi_sweep(cfg);
    REQUIRE(rows.size() == 6);

    std::map<std::pair<int, std::string>, double> mi;
    for (const auto& r : rows) {
        CHECK(r.sigma_eta == 80.0);
        CHECK(r.mi_bits > 0.0);
        CHECK(r.mi_bits < 1.0);
        mi[{r.n_reads, r.q_label}] = r.mi_bits;
    }
    CHECK(mi.at({1, "3"}) >= mi.at({1, "1"}));
    CHECK(mi.at({3, "3"}) >= mi.at({3, "1"}));
    CHECK(mi.at({1, "inf"}) >= mi.at({1, "3"}) - 1e-12);
    CHECK(mi.at({3, "inf"}) >= mi.at({3, "3"}) - 1e-12);
    CHECK(mi.at({3, "1"}) > mi.at({1, "1"}));

    const std::string csv = mi_csv(rows);
    CHECK(csv.substr(0, csv.find('\n')) == "sigma_eta,N,q,mi_bits,method");
    CHECK(csv == mi_csv(run_mi_sweep(cfg)));

    cfg.exact_mc_samples = 400;
    const std::vector<MiRow> with_mc = run_mi_sweep(cfg);
    REQUIRE(with_mc.size() == 8);
    CHECK(with_mc.back().method == "exact-mc");
}

TEST_CASE("uncoded ber matches the clean-channel closed form") {
    ExperimentConfig cfg;
    cfg.params.selector_fail_prob = 0.0;
    cfg.sweep = {225.0};
    cfg.reads = {1};
    cfg.trials = 60000;
    cfg.seed = 7;
    const std::vector<ResultRow> rows = run_uncoded_ber(cfg);
    REQUIRE(rows.size() == 3);

    const double expect = q_function(2.0);
    for (const auto& r : rows) {
        CHECK(r.metric == "ber");
        CHECK(r.code == "none");
        CHECK(r.trials == 60000);
        INFO(r.detector);
        CHECK(std::abs(r.value - expect) < 3.0 * r.ci95);
    }
    CHECK(rows[0].q_label == "1");
    CHECK(rows[2].q_label == "inf");
}

TEST_CASE("uncoded ber is reproducible and thread-count invariant") {
    ExperimentConfig cfg;
    cfg.sweep = {80.0};
    cfg.reads = {2};
    cfg.trials = 30000;
    cfg.seed = 11;
    const std::string serial = result_csv(run_uncoded_ber(cfg));
    cfg.jobs = 4;
    const std::string threaded = result_csv(run_uncoded_ber(cfg));
    CHECK(serial == threaded);

    cfg.jobs = 1;
    cfg.seed = 12;
    CHECK(result_csv(run_uncoded_ber(cfg)) != serial);

    const Cells cells = parse(serial);
    REQUIRE(cells.header == std::vector<std::string>{"sigma_eta", "N", "q", "detector", "code", "metric", "value",
                                                     "ci95", "trials"});
    for (std::size_t i = 0; i < cells.rows.size(); ++i) {
        const double value = field_num(cells, i, "value");
        const double trials = field_num(cells, i, "trials");
        const auto count = static_cast<std::uint64_t>(std::llround(value * trials));
        CHECK(field_num(cells, i, "ci95") ==
              Catch::Approx(wilson_half_width(count, static_cast<std::uint64_t>(trials))).epsilon(1e-9));
    }
}

TEST_CASE("map tracks the mixture-model error estimate on the ber path") {
    ExperimentConfig cfg;
    cfg.sweep = {80.0};
    cfg.reads = {1};
    cfg.detectors = {"map"};
    cfg.trials = 200000;
    cfg.seed = 5;
    const std::vector<ResultRow> rows = run_uncoded_ber(cfg);
    REQUIRE(rows.size() == 1);
    const ChannelParams params = cfg.params;
    ChannelParams at_sigma = params;
    at_sigma.noise_sigma = 80.0;
    const double exact = bep_map_quadrature_1d(ChannelModel(at_sigma), 1);
    CHECK(std::abs(rows[0].value - exact) < 3.0 * rows[0].ci95);
}

TEST_CASE("coded fer trends") {
    ExperimentConfig cfg;
    cfg.detectors = {"threshold-optimized"};
    cfg.codes = {"bch127-113", "bch127-92"};
    cfg.frames = 600;
    cfg.seed = 3;

    SECTION("vanishing noise gives zero failures") {
        cfg.sweep = {2.0};
        cfg.reads = {1};
        for (const auto& r : run_coded_fer(cfg)) CHECK(r.value == 0.0);
    }
    SECTION("noisy channel fails, and the stronger code fails less") {
        cfg.sweep = {45.0};
        cfg.reads = {1};
        cfg.frames = 1500;
        const std::vector<ResultRow> rows = run_coded_fer(cfg);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].code == "bch127-113");
        CHECK(rows[1].code == "bch127-92");
        CHECK(rows[0].value > 0.0);
        CHECK(rows[1].value < rows[0].value);
        CHECK(rows[0].metric == "fer");
        CHECK(rows[0].trials == 1500);
    }
    SECTION("thread-count invariance") {
        cfg.sweep = {40.0};
        cfg.reads = {2};
        cfg.frames = 700;
        const std::string serial = result_csv(run_coded_fer(cfg));
        cfg.jobs = 3;
        CHECK(result_csv(run_coded_fer(cfg)) == serial);
    }
}

TEST_CASE("bep map table") {
    ExperimentConfig cfg;
    cfg.sweep = {80.0};
    cfg.reads = {1};
    cfg.trials = 150000;
    const std::string csv = run_bep_map(cfg);
    const Cells cells = parse(csv);
    REQUIRE(cells.header == std::vector<std::string>{"sigma_eta", "N", "bep", "ci95", "trials", "method"});
    REQUIRE(cells.rows.size() == 2);
    CHECK(field_str(cells, 0, "method") == "quadrature");
    CHECK(field_str(cells, 1, "method") == "mc");
    const double quad = field_num(cells, 0, "bep");
    const double mc = field_num(cells, 1, "bep");
    CHECK(std::abs(quad - mc) < 3.0 * field_num(cells, 1, "ci95"));
    CHECK(run_bep_map(cfg) == csv);
}

TEST_CASE("alpha table lists the mixture") {
    const ChannelParams params;
    const std::string csv = alpha_table_csv(params);
    const Cells cells = parse(csv);
    REQUIRE(cells.header == std::vector<std::string>{"paths", "row_span", "col_span", "alpha", "prob"});
    REQUIRE(!cells.rows.empty());
    CHECK(field_num(cells, 0, "paths") == 0.0);
    CHECK(field_str(cells, 0, "alpha") == "inf");

    double total = 0.0;
    bool found_single = false;
    for (std::size_t i = 0; i < cells.rows.size(); ++i) {
        total += field_num(cells, i, "prob");
        if (field_num(cells, i, "paths") == 1.0) {
            CHECK(field_num(cells, i, "alpha") == Catch::Approx(3.0));
            found_single = true;
        }
    }
    CHECK(found_single);
    CHECK(total == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("plot script generation") {
    SECTION("mi csv gets a linear axis") {
        ExperimentConfig cfg;
        cfg.sweep = {60.0, 80.0};
        cfg.reads = {1};
        cfg.quant_bits = {1};
        cfg.mi_grid = 200;
        const std::string script = emit_plot_script_from_text(mi_csv(run_mi_sweep(cfg)));
        CHECK(script.find("logscale") == std::string::npos);
        CHECK(script.find("\nplot ") != std::string::npos);
        CHECK(script.find("$series0") != std::string::npos);
        CHECK(script.find("mutual information") != std::string::npos);
    }
    SECTION("ber csv gets a log axis with one series per detector") {
        ExperimentConfig cfg;
        cfg.sweep = {100.0, 120.0};
        cfg.reads = {1};
        cfg.trials = 500;
        const std::string script = emit_plot_script_from_text(result_csv(run_uncoded_ber(cfg)));
        CHECK(script.find("set logscale y") != std::string::npos);
        CHECK(script.find("$series2") != std::string::npos);
        CHECK(script.find("detector=map") != std::string::npos);
    }
    SECTION("bep csv gets a log axis") {
        ExperimentConfig cfg;
        cfg.sweep = {80.0};
        cfg.reads = {2};
        cfg.trials = 500;
        const std::string script = emit_plot_script_from_text(run_bep_map(cfg));
        CHECK(script.find("set logscale y") != std::string::npos);
    }
    SECTION("degenerate inputs still produce a script") {
        const std::string empty = emit_plot_script_from_text("");
        CHECK(empty.find("\nplot ") == std::string::npos);
        CHECK(empty.find("nothing to plot") != std::string::npos);

        const std::string header_only = emit_plot_script_from_text(std::string(kResultHeader) + "\n");
        CHECK(header_only.find("\nplot ") == std::string::npos);
        CHECK(header_only.find("no data rows") != std::string::npos);

        const std::string commented =
            emit_plot_script_from_text("# timestamp 2024-01-01\n" + std::string(kMiHeader) + "\n");
        CHECK(commented.find("\nplot ") == std::string::npos);
    }
    SECTION("unknown header is rejected") {
        CHECK_THROWS_AS(emit_plot_script_from_text("a,b,c\n1,2,3\n"), std::invalid_argument);
    }
}
