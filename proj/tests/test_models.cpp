#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "restrictlab/error.hpp"
#include "restrictlab/io.hpp"
#include "restrictlab/models.hpp"
#include "restrictlab/samplers.hpp"

using namespace restrictlab;

namespace {

Game3x3 random_game(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Game3x3 g;
    for (auto* m : {&g.row, &g.col})
        for (auto& r : *m)
            for (double& v : r) v = u(rng);
    return g;
}

Game3x3 dominant_first() {
    Game3x3 g;
    g.row = {{{5, 5, 5}, {1, 1, 1}, {2, 2, 2}}};
    g.col = {{{1, 2, 3}, {3, 2, 1}, {2, 2, 2}}};
    return g;
}

// Hierarchy written from the definition, with plain loops.
Triple oracle_hierarchy(const Game3x3& g, double tau, int cap, double lambda, bool logit) {
    std::vector<double> pi(cap + 1);
    for (int k = 0; k <= cap; ++k) pi[k] = std::exp(-tau) * std::pow(tau, k) / std::tgamma(k + 1.0);
    std::vector<Triple> row(cap + 1), col(cap + 1);
    row[0] = col[0] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    auto respond = [&](const Triple& u) {
        Triple out{};
        if (logit) {
            double s = 0;
            for (int a = 0; a < 3; ++a) s += out[a] = std::exp(lambda * u[a]);
            for (double& x : out) x /= s;
        } else {
            const double m = std::max({u[0], u[1], u[2]});
            int n = 0;
            for (int a = 0; a < 3; ++a) n += u[a] == m;
            for (int a = 0; a < 3; ++a) out[a] = u[a] == m ? 1.0 / n : 0.0;
        }
        return out;
    };
    for (int k = 1; k <= cap; ++k) {
        double mass = 0;
        for (int h = 0; h < k; ++h) mass += pi[h];
        Triple opp_col{}, opp_row{};
        for (int h = 0; h < k; ++h)
            for (int a = 0; a < 3; ++a) {
                opp_col[a] += pi[h] / mass * col[h][a];
                opp_row[a] += pi[h] / mass * row[h][a];
            }
        Triple ur{}, uc{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                ur[i] += g.row[i][j] * opp_col[j];
                uc[j] += g.col[i][j] * opp_row[i];
            }
        row[k] = respond(ur);
        col[k] = respond(uc);
    }
    Triple out{};
    double total = 0;
    for (int k = 0; k <= cap; ++k) total += pi[k];
    for (int k = 0; k <= cap; ++k)
        for (int a = 0; a < 3; ++a) out[a] += pi[k] / total * row[k][a];
    return out;
}

}  // namespace

TEST_CASE("probability weighting") {
    CHECK(cpt_weight(0.25, 0.5, 1.0) == doctest::Approx(0.5 / (0.5 + std::sqrt(0.75))).epsilon(1e-12));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double p = u(rng);
        CHECK(cpt_weight(p, 1.0, 1.0) == doctest::Approx(p).epsilon(1e-14));
        const double gamma = 0.05 * std::pow(40.0, u(rng)), eta = 0.05 * std::pow(100.0, u(rng));
        CHECK(cpt_weight(0.0, gamma, eta) == 0.0);
        CHECK(cpt_weight(1.0, gamma, eta) == 1.0);
        double prev = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double w = cpt_weight(k / 50.0, gamma, eta);
            CHECK(w > prev);
            prev = w;
        }
    }
}

TEST_CASE("binary CPT certainty equivalents") {
    const BinaryLottery l{10, 0, 0.5, Domain::Gain};
    CHECK(cpt_value({1, 1, 1}, l) == doctest::Approx(5.0));
    CHECK(cpt_value({1, 0.5, 1}, BinaryLottery{10, 0, 0.25, Domain::Gain}) == doctest::Approx(3.66025).epsilon(1e-5));
    // Power utility with w(p) = p: (p z^a)^(1/a).
    CHECK(cpt_value({0.5, 1, 1}, l) == doctest::Approx(std::pow(0.5 * std::sqrt(10.0), 2)).epsilon(1e-12));
    // Loss domain: v(z) = -(-z)^beta, upper prize weighted by 1 - w(1 - p).
    const BinaryLottery loss{0, -10, 0.5, Domain::Loss};
    CHECK(cpt_value({1, 1, 1}, loss) == doctest::Approx(-5.0));
    const double w = cpt_weight(0.5, 0.5, 2.0);
    CHECK(cpt_value({1, 0.5, 2.0}, BinaryLottery{-2, -10, 0.5, Domain::Loss}) ==
          doctest::Approx((1 - w) * -2 + w * -10).epsilon(1e-12));
}

TEST_CASE("three-outcome CPT") {
    // 0.1 * 34 + 0.3 * 24 + 0.6 * 18
    CHECK(cpt3_value({1, 1, 1}, ThreeOutcomeLottery{34, 24, 18, 0.1, 0.3, 0.6}) == doctest::Approx(21.4));
    const double w6 = std::sqrt(0.6) / (std::sqrt(0.6) + std::sqrt(0.4));
    const double w3 = std::sqrt(0.3) / (std::sqrt(0.3) + std::sqrt(0.7));
    const double oracle = 30 + w6 * (24 - 30) + w3 * (18 - 24);
    CHECK(oracle == doctest::Approx(24.323075).epsilon(1e-7));
    CHECK(cpt3_value({1, 0.5, 1}, ThreeOutcomeLottery{30, 24, 18, 0.4, 0.3, 0.3}) ==
          doctest::Approx(oracle).epsilon(1e-12));
    // With a zero third probability the decision weight sits on the worse
    // prize: v(z1) + w(p2) (v(z2) - v(z1)). This is not the binary gain form,
    // which weights the better prize, unless w(1 - p) = 1 - w(p).
    for (double a : {0.5, 1.0, 1.7}) {
        const double w = cpt_weight(0.6, 0.7, 1.3);
        const double v = std::pow(30.0, a) + w * (std::pow(24.0, a) - std::pow(30.0, a));
        CHECK(cpt3_value({a, 0.7, 1.3}, ThreeOutcomeLottery{30, 24, 18, 0.4, 0.6, 0.0}) ==
              doctest::Approx(std::pow(v, 1.0 / a)).epsilon(1e-12));
        CHECK(cpt3_value({a, 1.0, 1.0}, ThreeOutcomeLottery{30, 24, 18, 0.4, 0.6, 0.0}) ==
              doctest::Approx(cpt_value({a, 1.0, 1.0}, BinaryLottery{30, 24, 0.4, Domain::Gain})).epsilon(1e-12));
    }
}

TEST_CASE("naive values") {
    CHECK(expected_value_naive(BinaryLottery{10, 0, 0.5, Domain::Gain}) == 5.0);
    CHECK(expected_value_naive(ThreeOutcomeLottery{34, 24, 18, 0.1, 0.3, 0.6}) == doctest::Approx(21.4));
    CHECK(expected_value_naive(BinaryLottery{0, -10, 0.5, Domain::Loss}) == -5.0);
}

TEST_CASE("CPT respects FOSD and the prize range on every sampled parameter") {
    std::mt19937_64 rng(9);
    for (const char* name : {"bernheim_sprenger_18", "synthetic_gain_25"}) {
        const Menu menu = builtin_menu(name);
        const auto model = make_model(std::string(name) == "bernheim_sprenger_18" ? "cpt3:alpha,gamma,eta"
                                                                                   : "cpt:alpha,gamma,eta");
        const FosdOrder order = build_fosd_order(menu);
        REQUIRE(!order.pairs.empty());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 300; ++t) {
            std::vector<double> theta;
            for (const auto& s : model->params()) theta.push_back(s.from_unit(u(rng)));
            const auto f = model->predict(theta, menu).scalar_values();
            for (auto [i, j] : order.pairs) CHECK(f[i] >= f[j] - 1e-9);
            for (std::size_t i = 0; i < menu.size(); ++i) {
                const auto [lo, hi] = std::visit(
                    [](const auto& x) -> std::pair<double, double> {
                        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Game3x3>)
                            return {0, 0};
                        else
                            return prize_range(x);
                    },
                    menu.item(i));
                CHECK(f[i] >= lo);
                CHECK(f[i] <= hi);
            }
        }
    }
}

TEST_CASE("curvature on the wrong domain is rejected") {
    const Menu loss({"a"}, {BinaryLottery{0, -10, 0.5, Domain::Loss}});
    const double theta[1] = {0.5};
    CHECK_THROWS_AS(CptModel(static_cast<unsigned>(CptFree::Alpha)).predict(theta, loss), Error);
    CHECK_NOTHROW(CptModel(static_cast<unsigned>(CptFree::Alpha), "beta").predict(theta, loss));
}

TEST_CASE("PCHM") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const Game3x3 g = random_game(rng);
        const Triple u = pchm_distribution(0.0, g);
        for (double x : u) CHECK(x == 1.0 / 3);
        for (double tau : {0.2, 1.0, 2.5, 7.0}) {
            const Triple p = pchm_distribution(tau, g);
            const Triple o = oracle_hierarchy(g, tau, 10, 0, false);
            double s = 0;
            for (int a = 0; a < 3; ++a) {
                CHECK(p[a] == doctest::Approx(o[a]).epsilon(1e-12));
                CHECK(p[a] >= std::exp(-tau) / 3 / 1.0000001);
                s += p[a];
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
    const double e1 = std::exp(-1.0);
    CHECK(pchm_distribution(1.0, dominant_first())[0] == doctest::Approx(e1 / 3 + (1 - e1)).epsilon(1e-4));
}

TEST_CASE("ties split uniformly") {
    Game3x3 g;
    g.row = {{{2, 2, 2}, {2, 2, 2}, {0, 0, 0}}};
    g.col = g.row;
    const Triple p = pchm_distribution(50.0 / 10.0, g);
    CHECK(p[0] == doctest::Approx(p[1]).epsilon(1e-14));
}

TEST_CASE("logit level-1") {
    Game3x3 g;  // expected payoffs against uniform play: (1, 1, 0)
    g.row = {{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}}};
    const Triple p = logit_level1_distribution(1.0, g);
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (2 * e + 1)).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(1 / (2 * e + 1)).epsilon(1e-12));
    for (double x : logit_level1_distribution(0.0, g)) CHECK(x == 1.0 / 3);
    Game3x3 h;
    h.row = {{{1, 1, 1}, {0, 0, 0}, {0, 0, 0}}};
    CHECK(logit_level1_distribution(1e4, h)[0] >= 0.999);
}

TEST_CASE("logit PCHM") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const Game3x3 g = random_game(rng);
        for (double x : logit_pchm_distribution(3.0, 0.0, g)) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));
        for (double x : logit_pchm_distribution(0.0, 5.0, g)) CHECK(x == 1.0 / 3);
        const auto levels = logit_pchm_levels(1.5, 0.8, g, 10);
        const Triple l1 = logit_level1_distribution(0.8, g);
        for (int a = 0; a < 3; ++a) CHECK(levels[1][a] == doctest::Approx(l1[a]).epsilon(1e-14));
        const Triple p = logit_pchm_distribution(1.5, 0.8, g);
        const Triple o = oracle_hierarchy(g, 1.5, 10, 0.8, true);
        for (int a = 0; a < 3; ++a) CHECK(p[a] == doctest::Approx(o[a]).epsilon(1e-12));
    }
}

TEST_CASE("game predictions are continuous where best responses are stable") {
    std::mt19937_64 rng(8);
    const Game3x3 g = random_game(rng);
    for (double tau : {0.3, 1.0, 4.0})
        for (double lam : {0.1, 1.0, 5.0}) {
            const Triple a = logit_pchm_distribution(tau, lam, g);
            const Triple b = logit_pchm_distribution(tau + 1e-7, lam + 1e-7, g);
            for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-5);
        }
    for (double tau : {0.3, 1.0, 4.0}) {
        const Triple a = pchm_distribution(tau, dominant_first());
        const Triple b = pchm_distribution(tau + 1e-7, dominant_first());
        for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-5);
    }
}

TEST_CASE("level cap truncation is bounded by the Poisson tail") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        const Game3x3 g = random_game(rng);
        for (double tau : {0.5, 1.0, 2.0, 3.0}) {
            double tail = 0;
            const auto w = poisson_weights(tau, 10);
            for (double x : w) tail += x;
            tail = 1 - tail;
            const Triple a = pchm_distribution(tau, g, 10), b = pchm_distribution(tau, g, 20);
            const Triple c = logit_pchm_distribution(tau, 1.0, g, 10), d = logit_pchm_distribution(tau, 1.0, g, 20);
            for (int k = 0; k < 3; ++k) {
                CHECK(std::abs(a[k] - b[k]) <= 2 * tail + 1e-15);
                CHECK(std::abs(c[k] - d[k]) <= 2 * tail + 1e-15);
            }
            if (tau <= 1.0)
                for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-7);
        }
    }
}

TEST_CASE("naive parameters reproduce the naive mapping exactly") {
    const Menu bs = builtin_menu("bernheim_sprenger_18");
    const Menu gain = builtin_menu("synthetic_gain_25");
    const Menu games = synthetic_game_menu(30, 1);
    for (const char* id : {"cpt3:alpha,gamma,eta", "cpt3:gamma,eta", "cpt3:alpha"}) {
        const auto m = make_model(id);
        CHECK(m->predict(m->naive_params(), bs) == naive_mapping(bs));
    }
    for (const char* id : {"cpt:alpha,gamma,eta", "cpt:alpha,gamma", "cpt:gamma,eta", "cpt:alpha"}) {
        const auto m = make_model(id);
        CHECK(m->predict(m->naive_params(), gain) == naive_mapping(gain));
    }
    for (const char* id : {"pchm", "logit-level1", "logit-pchm"}) {
        const auto m = make_model(id);
        CHECK(m->predict(m->naive_params(), games) == naive_mapping(games));
    }
    const Mapping uniform = naive_mapping(games);
    for (const auto& p : uniform.distribution_values())
        for (double x : p) CHECK(x == 1.0 / 3);
}

TEST_CASE("payoff normalization") {
    std::vector<Game3x3> games{dominant_first(), dominant_first()};
    games[1].row[0][0] = 25;
    const double scale = normalize_payoffs(games);
    CHECK(scale == doctest::Approx(10.0 / 24.0));
    for (const auto& g : games)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                CHECK(g.row[i][j] >= 0.0);
                CHECK(g.row[i][j] <= 10.0);
            }
    CHECK(classify_dominance(games[0]) == classify_dominance(dominant_first()));
}

TEST_CASE("model ids") {
    CHECK(make_model("cpt:alpha,gamma,eta")->dimension() == 3);
    CHECK(make_model("cpt:gamma,eta")->dimension() == 2);
    CHECK(make_model("logit-pchm")->dimension() == 2);
    CHECK(make_model("naive")->dimension() == 0);
    CHECK(make_model("unrestricted")->is_unrestricted());
    CHECK_THROWS_AS(make_model("cpt:delta"), Error);
    CHECK_THROWS_AS(make_model("qre"), Error);
    for (const char* id : {"pchm", "logit-level1", "logit-pchm"}) CHECK(make_model(id)->id() == id);
}

TEST_CASE("parameter scales map the box onto the unit interval") {
    for (const char* id : {"cpt:alpha,gamma,eta", "logit-pchm"}) {
        for (const auto& s : make_model(id)->params()) {
            CHECK(s.from_unit(0.0) == doctest::Approx(s.lo));
            CHECK(s.from_unit(1.0) == doctest::Approx(s.hi));
            for (double u : {0.1, 0.5, 0.9}) CHECK(s.to_unit(s.from_unit(u)) == doctest::Approx(u).epsilon(1e-12));
        }
    }
}
