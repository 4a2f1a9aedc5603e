#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "restrictlab/error.hpp"
#include "restrictlab/fit.hpp"
#include "restrictlab/io.hpp"
#include "restrictlab/models.hpp"
#include "restrictlab/parallel.hpp"

using namespace restrictlab;

namespace {

Menu permuted(const Menu& menu, const std::vector<std::size_t>& order) {
    std::vector<std::string> ids;
    std::vector<FeatureItem> items;
    std::vector<double> w;
    for (std::size_t i : order) {
        ids.push_back(menu.ids()[i]);
        items.push_back(menu.item(i));
        w.push_back(menu.weights()[i]);
    }
    return Menu(std::move(ids), std::move(items), std::move(w));
}

Mapping permuted(const Mapping& f, const std::vector<std::size_t>& order) {
    std::vector<double> v;
    for (std::size_t i : order) v.push_back(f.scalar_values()[i]);
    return Mapping::scalars(std::move(v));
}

}  // namespace

TEST_CASE("simplex on a quadratic") {
    auto f = [](std::span<const double> x) { return std::pow(x[0] - 0.3, 2) + 2 * std::pow(x[1] - 0.8, 2); };
    const auto r = nelder_mead_unit_box(f, {0.9, 0.1}, 0.05, 500, 1e-9, 1e-14);
    CHECK(r.x[0] == doctest::Approx(0.3).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(0.8).epsilon(1e-4));

    // Minimizer outside the box lands on the boundary.
    auto g = [](std::span<const double> x) { return std::pow(x[0] + 1.0, 2); };
    const auto s = nelder_mead_unit_box(g, {0.5}, 0.05, 500, 1e-9, 1e-14);
    CHECK(s.x[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("optimizer settings are validated") {
    OptConfig cfg;
    cfg.n_starts = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.x_tol = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK_NOTHROW(OptConfig{}.validate());
}

TEST_CASE("realizable and naive targets") {
    const Menu gain = builtin_menu("synthetic_gain_25");
    SUBCASE("CPT reproduces its own predictions") {
        const auto m = make_model("cpt:alpha,gamma,eta");
        const std::vector<double> theta0{0.85, 0.6, 0.8};
        const Mapping target = m->predict(theta0, gain);
        const auto r = fit_model_to_mapping(*m, target, ProblemKind::ConditionalMean, gain);
        CHECK(r.value <= 1e-8);
        for (std::size_t i = 0; i < gain.size(); ++i)
            CHECK(std::abs(r.prediction.scalar_values()[i] - target.scalar_values()[i]) < 1e-4);
    }
    SUBCASE("logit level-1 reproduces its own predictions") {
        const Menu games = synthetic_game_menu(30, 4);
        const auto m = make_model("logit-level1");
        const Mapping target = m->predict(std::vector<double>{0.7}, games);
        const auto r = fit_model_to_mapping(*m, target, ProblemKind::ConditionalDistribution, games);
        CHECK(r.value <= 1e-8);
        CHECK(r.theta[0] == doctest::Approx(0.7).epsilon(1e-3));
    }
    SUBCASE("naive target") {
        for (const char* id : {"cpt:alpha", "cpt:gamma,eta", "cpt:alpha,gamma,eta"}) {
            const auto m = make_model(id);
            const auto r = fit_model_to_mapping(*m, naive_mapping(gain), ProblemKind::ConditionalMean, gain);
            CHECK(r.value == 0.0);
            CHECK(r.theta == m->naive_params());
        }
        const Menu games = synthetic_game_menu(20, 9);
        for (const char* id : {"pchm", "logit-level1", "logit-pchm"}) {
            const auto m = make_model(id);
            const auto r =
                fit_model_to_mapping(*m, naive_mapping(games), ProblemKind::ConditionalDistribution, games);
            CHECK(r.value == 0.0);
        }
    }
    SUBCASE("target outside a one-parameter family") {
        const auto m = make_model("cpt:alpha");
        Mapping target = naive_mapping(gain);
        target.scalar_values()[3] += 2.0;
        const auto r = fit_model_to_mapping(*m, target, ProblemKind::ConditionalMean, gain);
        CHECK(r.value > 1e-4);
        // Never worse than the naive start.
        CHECK(r.value <= discrepancy(ProblemKind::ConditionalMean, target, naive_mapping(gain), gain.weights()));
    }
}

TEST_CASE("CPT parameters are recovered from noisy data") {
    const Menu gain = builtin_menu("synthetic_gain_25");
    const auto m = make_model("cpt:alpha,gamma,eta");
    const std::vector<double> theta0{0.8, 0.7, 1.2};
    const Mapping truth = m->predict(theta0, gain);
    Rng rng(123);
    std::normal_distribution<double> noise(0.0, 0.5);
    Dataset data{gain.size(), {}};
    for (int n = 0; n < 5000; ++n) {
        const std::size_t i = static_cast<std::size_t>(n) % gain.size();
        data.observations.push_back({i, truth.scalar_values()[i] + noise(rng), ""});
    }
    const auto r = fit_model_to_data(*m, gain, data, ProblemKind::ConditionalMean);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(r.theta[k] - theta0[k]) < 0.05);
}

TEST_CASE("logit level-1 on uniform play") {
    const Menu games = synthetic_game_menu(50, 12);
    Dataset data{games.size(), {}};
    // Every action exactly equally often: the maximum likelihood is at lambda = 0.
    for (std::size_t g = 0; g < games.size(); ++g)
        for (int a = 0; a < 3; ++a)
            for (int rep = 0; rep < 4; ++rep) data.observations.push_back({g, static_cast<double>(a), ""});
    const auto m = make_model("logit-level1");
    const auto r = fit_model_to_data(*m, games, data, ProblemKind::ConditionalDistribution);
    CHECK(r.theta[0] <= 0.01);
}

TEST_CASE("single observation") {
    const Menu gain = builtin_menu("synthetic_gain_25");
    const auto m = make_model("cpt:alpha,gamma,eta");
    const Dataset data{gain.size(), {{4, 12.0, ""}}};
    const auto r = fit_model_to_data(*m, gain, data, ProblemKind::ConditionalMean);
    REQUIRE(r.theta.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(r.theta[k] >= m->params()[k].lo);
        CHECK(r.theta[k] <= m->params()[k].hi);
    }
    CHECK_THROWS_AS(fit_model_to_data(*m, gain, Dataset{gain.size(), {}}, ProblemKind::ConditionalMean), Error);
}

TEST_CASE("unrestricted fits") {
    SUBCASE("sample mean and pooled fallback") {
        const Dataset data{3, {{0, 4, ""}, {0, 6, ""}, {1, 11, ""}}};
        const Mapping f = fit_unrestricted(data, ProblemKind::ConditionalMean);
        CHECK(f.scalar_values()[0] == 5.0);
        CHECK(f.scalar_values()[1] == 11.0);
        CHECK(f.scalar_values()[2] == doctest::Approx(7.0));
    }
    SUBCASE("smoothed frequencies") {
        Dataset data{2, {}};
        for (int k = 0; k < 10; ++k) data.observations.push_back({0, 0.0, ""});
        const Mapping f = fit_unrestricted(data, ProblemKind::ConditionalDistribution, 0.5);
        CHECK(f.distribution_values()[0][0] == doctest::Approx(10.5 / 11.5));
        CHECK(f.distribution_values()[0][1] == doctest::Approx(0.5 / 11.5));
        CHECK(f.distribution_values()[0][2] == doctest::Approx(0.5 / 11.5));
        for (double p : f.distribution_values()[1]) CHECK(p == doctest::Approx(1.0 / 3));
    }
    SUBCASE("medians") {
        const Dataset data{2, {{0, 1, ""}, {0, 9, ""}, {0, 3, ""}, {1, 2, ""}, {1, 4, ""}}};
        const Mapping f = fit_unrestricted(data, ProblemKind::ConditionalMedian);
        CHECK(f.scalar_values()[0] == 3.0);
        CHECK(f.scalar_values()[1] == 3.0);
    }
    SUBCASE("minimizes training error under squared loss") {
        Rng rng(5);
        Dataset data{6, {}};
        for (int n = 0; n < 300; ++n)
            data.observations.push_back({static_cast<std::size_t>(n % 6), uniform(rng, -3, 12), ""});
        const Mapping best = fit_unrestricted(data, ProblemKind::ConditionalMean);
        const double e = empirical_error(best, data, ProblemKind::ConditionalMean);
        for (int t = 0; t < 100; ++t) {
            Mapping g = best;
            for (double& v : g.scalar_values()) v += uniform(rng, -0.5, 0.5);
            CHECK(empirical_error(g, data, ProblemKind::ConditionalMean) >= e);
        }
    }
}

TEST_CASE("more search never hurts") {
    const Menu gain = builtin_menu("synthetic_gain_25");
    Rng rng(77);
    const auto m = make_model("cpt:gamma,eta");
    for (int t = 0; t < 5; ++t) {
        Mapping target = naive_mapping(gain);
        for (double& v : target.scalar_values()) v *= uniform(rng, 0.6, 1.2);
        double previous = INFINITY;
        // Nested grids: 10 | 20 | 40 per axis, and the start set only grows.
        for (int g : {10, 20, 40}) {
            OptConfig cfg;
            cfg.grid_points = g;
            cfg.n_starts = 2 * g;
            const double d = fit_model_to_mapping(*m, target, ProblemKind::ConditionalMean, gain, cfg).value;
            CHECK(d <= previous * (1 + 1e-9) + 1e-12);
            previous = d;
        }
    }
}

TEST_CASE("menu order does not matter") {
    const Menu gain = builtin_menu("synthetic_gain_25");
    const auto m = make_model("cpt:alpha,gamma");
    Rng rng(31);
    Mapping target = naive_mapping(gain);
    for (double& v : target.scalar_values()) v *= uniform(rng, 0.7, 1.1);
    std::vector<std::size_t> order(gain.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    const double a = fit_model_to_mapping(*m, target, ProblemKind::ConditionalMean, gain).value;
    const double b =
        fit_model_to_mapping(*m, permuted(target, order), ProblemKind::ConditionalMean, permuted(gain, order)).value;
    CHECK(b == doctest::Approx(a).epsilon(1e-6));
}

TEST_CASE("fits are identical across thread counts") {
    const Menu bs = builtin_menu("bernheim_sprenger_18");
    const auto m = make_model("cpt3:alpha,gamma,eta");
    Mapping target = naive_mapping(bs);
    for (std::size_t i = 0; i < target.size(); ++i) target.scalar_values()[i] *= 0.9 + 0.01 * i;
    OptConfig cfg;
    cfg.grid_points = 50;
    setenv("RESTRICTLAB_THREADS", "1", 1);
    const auto a = fit_model_to_mapping(*m, target, ProblemKind::ConditionalMean, bs, cfg);
    setenv("RESTRICTLAB_THREADS", "5", 1);
    const auto b = fit_model_to_mapping(*m, target, ProblemKind::ConditionalMean, bs, cfg);
    unsetenv("RESTRICTLAB_THREADS");
    CHECK(a.theta == b.theta);
    CHECK(a.value == b.value);
}
