#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "reramq/channel.hpp"

using namespace reramq;
using Catch::Approx;

TEST_CASE("binomial coefficients") {
    REQUIRE(binomial(0, 0) == 1);
    REQUIRE(binomial(5, 2) == 10);
    REQUIRE(binomial(10, 10) == 1);
    REQUIRE(binomial(10, 11) == 0);
    REQUIRE(binomial(62, 31) == 465428353255261088ULL);
    REQUIRE_THROWS_AS(binomial(130, 65), std::overflow_error);
}

TEST_CASE("covering subset counts") {
    REQUIRE(covering_subset_count(1, 1, 1) == 1);
    REQUIRE(covering_subset_count(2, 2, 2) == 2);
    REQUIRE(covering_subset_count(2, 1, 2) == 1);
    REQUIRE(covering_subset_count(3, 2, 2) == 4);
    REQUIRE(covering_subset_count(4, 2, 2) == 1);
    REQUIRE(covering_subset_count(2, 3, 2) == 0);
    REQUIRE(covering_subset_count(6, 6, 6) == 720);
    REQUIRE(covering_subset_count(0, 0, 0) == 1);
}

TEST_CASE("covering counts sum to plain binomials") {
    for (int u = 0; u <= 4; ++u) {
        for (int v = 0; v <= 4; ++v) {
            for (int paths = 0; paths <= std::min(6, u * v); ++paths) {
                std::uint64_t total = 0;
                for (int kl = 0; kl <= u; ++kl)
                    for (int kc = 0; kc <= v; ++kc)
                        total += binomial(u, kl) * binomial(v, kc) * covering_subset_count(paths, kl, kc);
                REQUIRE(total == binomial(static_cast<std::uint64_t>(u) * v, paths));
            }
        }
    }
}

TEST_CASE("arrangement counts match exhaustive enumeration") {
    REQUIRE(count_arrangements(4, 5, 1, 1, 1) == 20);
    REQUIRE(count_arrangements(2, 2, 2, 2, 2) == 2);
    REQUIRE(count_arrangements(3, 3, 2, 1, 2) == 9);

    REQUIRE(count_arrangements(4, 5, 1, 1, 1) == oracle::arrangements_by_enumeration(4, 5, 1, 1, 1));

    for (int u = 1; u <= 4; ++u) {
        for (int v = 1; v <= 4; ++v) {
            const auto hist = oracle::type_count_histogram(u, v);
            for (int paths = 1; paths <= std::min(6, u * v); ++paths) {
                for (int kl = 1; kl <= std::min(paths, u); ++kl) {
                    for (int kc = 1; kc <= std::min(paths, v); ++kc) {
                        if (paths > kl * kc) continue;
                        const auto it = hist.find({paths, kl, kc});
                        const std::uint64_t expected = it == hist.end() ? 0 : it->second;
                        REQUIRE(count_arrangements(u, v, paths, kl, kc) == expected);
                    }
                }
            }
        }
    }
}

TEST_CASE("arrangement count preconditions") {
    REQUIRE_THROWS_AS(count_arrangements(2, 2, 5, 2, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(count_arrangements(3, 3, 2, 3, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(count_arrangements(2, 3, 2, 3, 1), std::invalid_argument);
    REQUIRE(count_arrangements(3, 3, 0, 0, 0) == 1);
}

TEST_CASE("equivalent network resistance of known configurations") {
    const auto alpha = [](std::vector<std::pair<int, int>> cells) { return solve_alpha(PathConfig{std::move(cells)}); };

    REQUIRE(alpha({{0, 0}}) == Approx(3.0).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {1, 1}}) == Approx(1.5).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {1, 1}, {2, 2}}) == Approx(1.0).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {1, 1}, {2, 2}, {3, 3}}) == Approx(0.75).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {0, 1}}) == Approx(2.0).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {0, 1}, {0, 2}}) == Approx(5.0 / 3.0).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {0, 1}, {0, 2}, {0, 3}}) == Approx(1.5).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {0, 1}, {1, 2}}) == Approx(1.2).epsilon(1e-12));
    REQUIRE(alpha({{0, 0}, {0, 1}, {1, 0}, {1, 1}}) == Approx(1.25).epsilon(1e-12));
}

TEST_CASE("network resistance is invariant under relabeling and matches elimination solver") {
    for (int paths = 1; paths <= 4; ++paths) {
        for (int kl = 1; kl <= paths; ++kl) {
            for (int kc = 1; kc <= paths; ++kc) {
                if (paths > kl * kc) continue;
                for (const auto& cls : detail::covering_classes(paths, kl, kc)) {
                    const double a = solve_alpha(cls.representative);
                    REQUIRE(a == Approx(oracle::alpha_by_elimination(cls.representative)).epsilon(1e-12));
                    REQUIRE(a >= 3.0 / paths - 1e-12);
                    REQUIRE(a <= 3.0 + 1e-12);

                    PathConfig relabeled;
                    for (auto [r, c] : cls.representative.cells)
                        relabeled.cells.emplace_back(11 - 2 * r, 7 + 3 * c);
                    REQUIRE(solve_alpha(relabeled) == Approx(a).epsilon(1e-12));
                }
            }
        }
    }
    REQUIRE_THROWS_AS(solve_alpha(PathConfig{}), std::invalid_argument);
}

TEST_CASE("placement classes split types with unequal resistance") {
    const auto classes23 = detail::covering_classes(4, 2, 3);
    REQUIRE(classes23.size() == 2);
    REQUIRE(classes23[0].count + classes23[1].count == covering_subset_count(4, 2, 3));
    REQUIRE(solve_alpha(classes23[0].representative) != Approx(solve_alpha(classes23[1].representative)).epsilon(1e-6));

    const auto classes33 = detail::covering_classes(4, 3, 3);
    REQUIRE(classes33.size() == 2);

    REQUIRE(detail::covering_classes(2, 2, 2).size() == 1);
    REQUIRE(detail::covering_classes(4, 4, 4).size() == 1);
}

TEST_CASE("cell mean resistance") {
    const ChannelParams p;
    REQUIRE(rho(0, std::nullopt, p) == 1000.0);
    REQUIRE(rho(1, std::nullopt, p) == 100.0);
    REQUIRE(rho(0, 3.0, p) == Approx(3000.0 / 13.0).epsilon(1e-12));
    REQUIRE(rho(1, 3.0, p) == Approx(75.0).epsilon(1e-12));
    REQUIRE(rho(0, kInf, p) == 1000.0);
    REQUIRE_THROWS_AS(rho(0, -1.0, p), std::invalid_argument);
    REQUIRE(rho(0, 3.0, p) < 1000.0);
}

TEST_CASE("parameter validation") {
    ChannelParams p;
    p.r_low = 2000.0;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = ChannelParams{};
    p.rows = 1;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = ChannelParams{};
    p.selector_fail_prob = 1.5;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = ChannelParams{};
    p.noise_sigma = 0.0;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("type distribution matches exhaustive enumeration on a small array") {
    ChannelParams p;
    p.rows = 4;
    p.cols = 4;
    p.selector_fail_prob = 0.3;
    p.ones_prob = 0.5;

    const auto exhaustive = oracle::exhaustive_type_distribution(p);

    p.max_paths = 9;
    const auto full = path_type_distribution(p);
    double covered = 0.0;
    for (const auto& t : full) {
        const auto it = exhaustive.find(t.type);
        REQUIRE(it != exhaustive.end());
        REQUIRE(t.prob == Approx(it->second).margin(1e-12));
        covered += t.prob;
    }
    REQUIRE(covered == Approx(1.0).margin(1e-12));

    p.max_paths = 2;
    const auto truncated = path_type_distribution(p);
    double kept = 0.0;
    for (const auto& [type, mass] : exhaustive)
        if (type.paths <= 2) kept += mass;
    for (const auto& t : truncated) REQUIRE(t.prob == Approx(exhaustive.at(t.type) / kept).margin(1e-12));
}

TEST_CASE("type distribution sums to one and p_lambda agrees") {
    const ChannelParams p;
    const auto dist = path_type_distribution(p);
    double total = 0.0;
    for (const auto& t : dist) total += t.prob;
    REQUIRE(total == Approx(1.0).margin(1e-12));

    REQUIRE(p_lambda(p, {0, 0, 0}) == Approx(dist.front().prob).epsilon(1e-12));
    REQUIRE(p_lambda(p, {1, 1, 1}) > 0.0);
    REQUIRE(p_lambda(p, {3, 2, 2}) > 0.0);
    REQUIRE_THROWS_AS(p_lambda(p, {5, 2, 3}), std::invalid_argument);

    ChannelParams no_fail = p;
    no_fail.selector_fail_prob = 0.0;
    REQUIRE(p_lambda(no_fail, {0, 0, 0}) == Approx(1.0).margin(1e-15));
}

TEST_CASE("channel model components") {
    const ChannelParams p;
    const ChannelModel model(p);

    double total = 0.0;
    for (const auto& c : model.components()) total += c.prob;
    REQUIRE(total == Approx(1.0).margin(1e-12));

    REQUIRE(model.truncation_deficit() < 1e-9);
    REQUIRE(model.truncation_deficit() > 0.0);

    const auto dist = path_type_distribution(p);
    for (const auto& t : dist) REQUIRE(model.type_mass(t.type) == Approx(t.prob).margin(1e-14));

    REQUIRE(std::isinf(model.components().front().alpha));
    REQUIRE(model.component_mean(0, model.components().front()) == 1000.0);
    REQUIRE(model.component_mean(1, model.components().front()) == 100.0);

    std::map<SneakPathType, int> classes_per_type;
    for (const auto& c : model.components()) ++classes_per_type[c.type];
    REQUIRE(classes_per_type.at({4, 2, 3}) == 2);
    REQUIRE(classes_per_type.at({4, 3, 3}) == 2);
    REQUIRE(classes_per_type.at({1, 1, 1}) == 1);

    REQUIRE(model.min_mean(1) < 75.0);
    REQUIRE(model.max_mean(0) == 1000.0);

    ChannelParams bad = p;
    bad.max_paths = 7;
    REQUIRE_THROWS_AS(ChannelModel(bad), std::invalid_argument);
}

TEST_CASE("transition density integrates to one") {
    const ChannelParams p;
    const ChannelModel model(p);
    for (int bit : {0, 1}) {
        const double mass = oracle::integrate([&](double r) { return model.transition_pdf(r, bit); },
                                              model.min_mean(1) - 10.0 * p.noise_sigma,
                                              model.max_mean(0) + 10.0 * p.noise_sigma, 1e-12);
        REQUIRE(mass == Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("transition density is a single gaussian when selectors never fail") {
    ChannelParams p;
    p.selector_fail_prob = 0.0;
    const ChannelModel model(p);
    REQUIRE(model.components().size() == 1);
    for (double r : {-100.0, 300.0, 999.0, 1400.0}) {
        REQUIRE(model.transition_pdf(r, 0) == Approx(gauss_pdf(r - 1000.0, p.noise_sigma)).epsilon(1e-12));
        REQUIRE(model.transition_pdf(r, 1) == Approx(gauss_pdf(r - 100.0, p.noise_sigma)).epsilon(1e-12));
    }
}

TEST_CASE("path configuration extraction from a planted array") {
    CrossbarSample a;
    a.rows = 4;
    a.cols = 5;
    a.bits.assign(20, 0);
    a.selector_failed.assign(20, 0);
    const auto set_bit = [&](int r, int c) { a.bits[r * 5 + c] = 1; };
    const auto set_fail = [&](int r, int c) { a.selector_failed[r * 5 + c] = 1; };

    // target (1, 2); a full sneak path through intersection (3, 4)
    set_bit(1, 4);
    set_bit(3, 2);
    set_bit(3, 4);
    set_fail(3, 4);
    // broken path: intersection cell stores 0
    set_bit(0, 2);
    set_fail(0, 4);
    // complete geometry but healthy selector at the intersection
    set_bit(1, 0);
    set_bit(2, 0);
    set_bit(2, 2);

    const PathConfig config = cell_path_config(a, 1, 2);
    REQUIRE(config.cells == std::vector<std::pair<int, int>>{{3, 4}});
    REQUIRE(config.type() == SneakPathType{1, 1, 1});

    // selector failure on the target row or column alone creates no path
    const PathConfig none = cell_path_config(a, 0, 0);
    REQUIRE(none.empty());
    REQUIRE(none.type() == SneakPathType{0, 0, 0});
}

TEST_CASE("sampling is deterministic per seed") {
    const ChannelParams p;
    std::mt19937_64 rng_a(substream_seed(42, 0)), rng_b(substream_seed(42, 0));
    const CrossbarSample a = sample_array(p, rng_a);
    const CrossbarSample b = sample_array(p, rng_b);
    REQUIRE(a.bits == b.bits);
    REQUIRE(a.selector_failed == b.selector_failed);

    std::mt19937_64 rng_c(substream_seed(42, 1));
    REQUIRE(sample_array(p, rng_c).bits != a.bits);
}

TEST_CASE("sampled read mean tracks the parallel resistance") {
    ChannelParams p;
    p.noise_sigma = 80.0;
    std::mt19937_64 rng(substream_seed(7, 0));

    const PathConfig one_path{{{2, 3}}};
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += sample_reads(0, one_path, 1, p, rng)[0];
    REQUIRE(sum / n == Approx(3000.0 / 13.0).margin(4.0 * p.noise_sigma / std::sqrt(double(n))));

    sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_reads(1, PathConfig{}, 1, p, rng)[0];
    REQUIRE(sum / n == Approx(100.0).margin(4.0 * p.noise_sigma / std::sqrt(double(n))));

    REQUIRE(sample_reads(0, PathConfig{}, 5, p, rng).size() == 5);
    REQUIRE_THROWS_AS(sample_reads(0, PathConfig{}, 0, p, rng), std::invalid_argument);
}

TEST_CASE("analytic type distribution matches array-level monte carlo") {
    ChannelParams p;
    p.rows = 8;
    p.cols = 8;
    p.selector_fail_prob = 0.02;
    p.max_paths = 3;

    std::mt19937_64 rng(substream_seed(123, 0));
    const auto empirical = mc_type_histogram(p, 150000, rng);

    double kept = 0.0;
    for (const auto& t : empirical)
        if (t.type.paths <= p.max_paths) kept += t.prob;

    for (const auto& t : path_type_distribution(p)) {
        double emp = 0.0;
        for (const auto& e : empirical)
            if (e.type == t.type) emp = e.prob / kept;
        if (t.prob > 1e-4) REQUIRE(emp == Approx(t.prob).margin(0.01));
    }
}
