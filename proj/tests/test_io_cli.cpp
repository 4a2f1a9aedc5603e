#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "restrictlab/cli.hpp"
#include "restrictlab/error.hpp"
#include "restrictlab/io.hpp"
#include "restrictlab/samplers.hpp"

using namespace restrictlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("restrictlab_test_" + name);
    fs::remove_all(p);
    return p;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "restrictlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string game_row(const std::string& id, int shift, const std::string& tail) {
    std::ostringstream s;
    s << id;
    for (int k = 0; k < 9; ++k) s << ',' << (k * 7 + shift) % 11;
    for (int k = 0; k < 9; ++k) s << ',' << (k * 5 + shift) % 13;
    s << ',' << tail << '\n';
    return s.str();
}

const char* kGameHeader =
    "game_id,r11,r12,r13,r21,r22,r23,r31,r32,r33,c11,c12,c13,c21,c22,c23,c31,c32,c33";

}  // namespace

TEST_CASE("certainty-equivalent loader") {
    SUBCASE("two subjects, one lottery") {
        std::istringstream in("subject_id,z_high,z_low,p,ce\n1,10,0,0.5,4\n2,10,0,0.5,6\n");
        const LoadedData d = parse_ce_dataset(in);
        CHECK(d.menu.size() == 1);
        CHECK(d.data.size() == 2);
        CHECK(d.kind == ProblemKind::ConditionalMean);
        const auto& l = std::get<BinaryLottery>(d.menu.item(0));
        CHECK(l.z_high == 10);
        CHECK(l.domain == Domain::Gain);
    }
    SUBCASE("probability out of range names the line") {
        std::istringstream in("subject_id,z_high,z_low,p,ce\n1,10,0,0.5,4\n2,10,0,1.2,6\n");
        try {
            parse_ce_dataset(in, "ce.csv");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("ce.csv:3") != std::string::npos);
        }
    }
    SUBCASE("mixed-sign prizes are rejected") {
        std::istringstream in("subject_id,z_high,z_low,p,ce\n1,10,-5,0.5,4\n");
        CHECK_THROWS_AS(parse_ce_dataset(in), Error);
    }
    SUBCASE("loss lotteries and clusters") {
        std::istringstream in("subject_id,z_high,z_low,p,ce,cluster\n1,0,-10,0.5,-6,a\n2,-2,-8,0.3,-5,b\n");
        const LoadedData d = parse_ce_dataset(in);
        CHECK(d.menu.size() == 2);
        for (const auto& it : d.menu.items()) CHECK(std::get<BinaryLottery>(it).domain == Domain::Loss);
        CHECK(d.data.observations[0].group == "a");
        CHECK(d.data.observations[1].group == "b");
    }
    SUBCASE("three-outcome rows") {
        std::istringstream in("subject_id,z1,z2,z3,p1,p2,p3,ce\n1,34,24,18,0.1,0.3,0.6,20\n");
        const LoadedData d = parse_ce_dataset(in);
        CHECK(std::holds_alternative<ThreeOutcomeLottery>(d.menu.item(0)));
    }
    SUBCASE("missing column") {
        std::istringstream in("subject_id,z_high,p,ce\n1,10,0.5,4\n");
        CHECK_THROWS_AS(parse_ce_dataset(in), Error);
    }
}

TEST_CASE("game loader") {
    const std::string header = std::string(kGameHeader) + ",n1,n2,n3\n";
    SUBCASE("aggregated counts expand") {
        std::istringstream in(header + game_row("g1", 1, "10,5,5"));
        const LoadedData d = parse_game_dataset(in);
        CHECK(d.menu.size() == 1);
        CHECK(d.data.size() == 20);
        CHECK(d.kind == ProblemKind::ConditionalDistribution);
        int counts[3] = {0, 0, 0};
        for (const auto& o : d.data.observations) ++counts[static_cast<int>(o.outcome)];
        CHECK(counts[0] == 10);
        CHECK(counts[1] == 5);
        CHECK(counts[2] == 5);
    }
    SUBCASE("ids are authoritative") {
        std::istringstream in(header + game_row("g1", 1, "1,1,1") + game_row("g2", 1, "1,1,1"));
        CHECK(parse_game_dataset(in).menu.size() == 2);
    }
    SUBCASE("conflicting payoffs under one id") {
        std::istringstream in(header + game_row("g1", 1, "1,1,1") + game_row("g1", 2, "1,1,1"));
        CHECK_THROWS_AS(parse_game_dataset(in), Error);
    }
    SUBCASE("per-choice rows") {
        std::istringstream in(std::string(kGameHeader) + ",action\n" + game_row("g1", 1, "1") +
                              game_row("g1", 1, "3"));
        const LoadedData d = parse_game_dataset(in);
        CHECK(d.data.size() == 2);
        CHECK(d.data.observations[1].outcome == 2.0);
        std::istringstream bad(std::string(kGameHeader) + ",action\n" + game_row("g1", 1, "4"));
        CHECK_THROWS_AS(parse_game_dataset(bad), Error);
    }
}

TEST_CASE("built-in menus") {
    const Menu bs = builtin_menu("bernheim_sprenger_18");
    REQUIRE(bs.size() == 18);
    CHECK(std::get<ThreeOutcomeLottery>(bs.item(0)) == ThreeOutcomeLottery{34, 24, 18, 0.1, 0.3, 0.6});
    CHECK(std::get<ThreeOutcomeLottery>(bs.item(17)) == ThreeOutcomeLottery{24, 19, 18, 0.3, 0.6, 0.1});
    for (const auto& it : bs.items()) {
        const auto& l = std::get<ThreeOutcomeLottery>(it);
        CHECK(l.z1 > l.z2);
        CHECK(l.z2 > l.z3);
        CHECK(l.z3 >= 0);
        CHECK(l.p1 + l.p2 + l.p3 == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (double w : bs.weights()) CHECK(w == doctest::Approx(1.0 / 18));

    // Pinned: any edit to a built-in menu changes these.
    CHECK(menu_fingerprint(bs) == 16016497834021690258ULL);
    CHECK(menu_fingerprint(builtin_menu("synthetic_gain_25")) == 14533341199216892278ULL);
    CHECK(menu_fingerprint(builtin_menu("synthetic_games_100")) == 16056149984588792490ULL);

    CHECK(builtin_menu("synthetic_games_100").size() == 100);
    CHECK_THROWS_AS(builtin_menu("no_such_menu"), Error);
}

TEST_CASE("numbers and mappings round-trip exactly") {
    for (double x : {0.1, 1.0 / 3, 1e-300, 123456.789, -2.5})
        CHECK(parse_double(format_double(x)) == x);

    const Menu bs = builtin_menu("bernheim_sprenger_18");
    const auto draws = sample_mappings(bs, MuSpec{}, 5, 1);
    std::stringstream buf;
    write_mappings_csv(buf, bs, draws);
    CHECK(read_mappings_csv(buf) == draws);

    const Menu games = synthetic_game_menu(7, 2);
    const auto plays = sample_mappings(games, MuSpec::parse("dominance"), 4, 1);
    std::stringstream gbuf;
    write_mappings_csv(gbuf, games, plays);
    CHECK(read_mappings_csv(gbuf) == plays);
}

TEST_CASE("command line: configuration errors write nothing") {
    const fs::path dir = scratch("bad_flag");
    std::string err;
    CHECK(run({"restrict", "--model", "cpt:alpha", "--menu", "builtin:synthetic_gain_25", "--bogus", "1", "--out",
               dir.string()},
              nullptr, &err) == 2);
    CHECK_FALSE(fs::exists(dir));
    CHECK(nlohmann::json::parse(err).contains("error"));

    CHECK(run({"restrict", "--model", "cpt:alpha", "--menu", "builtin:synthetic_gain_25", "--M", "1", "--out",
               dir.string()}) == 2);
    CHECK(run({"restrict", "--model", "nonsense", "--menu", "builtin:synthetic_gain_25", "--out", dir.string()}) ==
          2);
    CHECK(run({"frobnicate"}) == 2);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("command line: restrict and sample") {
    const fs::path dir = scratch("restrict");
    REQUIRE(run({"restrict", "--model", "cpt:gamma,eta", "--menu", "builtin:synthetic_gain_25", "--M", "6", "--seed",
                 "9", "--grid", "30", "--starts", "4", "--out", dir.string()}) == 0);
    const auto j = read_json(dir / "restrict.json");
    CHECK(j["config"]["seed"] == 9);
    CHECK(j["config"]["M"] == 6);
    CHECK(j["result"]["deltas"].size() == 6);
    CHECK(fs::exists(dir / "deltas_hist.csv"));

    const fs::path sdir = scratch("sample");
    REQUIRE(run({"sample", "--menu", "builtin:bernheim_sprenger_18", "--M", "3", "--seed", "4", "--out",
                 sdir.string()}) == 0);
    std::ifstream in(sdir / "samples.csv");
    const auto reloaded = read_mappings_csv(in);
    CHECK(reloaded == sample_mappings(builtin_menu("bernheim_sprenger_18"), MuSpec{}, 3, 4));
    CHECK(read_json(sdir / "samples.json")["config"]["seed"] == 4);
}

TEST_CASE("command line: compare on games") {
    const fs::path dir = scratch("compare");
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "games.csv");
        csv << kGameHeader << ",n1,n2,n3\n";
        for (int g = 0; g < 6; ++g) csv << game_row("g" + std::to_string(g), g, "30,12,6");
    }
    const fs::path out = dir / "out";
    std::string err;
    const int rc = run({"compare", "--models", "pchm,logit-level1,logit-pchm", "--games", (dir / "games.csv").string(),
                        "--M", "4", "--K", "5", "--grid", "20", "--starts", "3", "--seed", "2", "--out", out.string()},
                       nullptr, &err);
    INFO(err);
    REQUIRE(rc == 0);
    std::ifstream in(out / "compare.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    for (const auto& l : lines) CHECK(std::count(l.begin(), l.end(), ',') == 6);
    CHECK(lines[0] == "model,kappa,kappa_se,N,r,r_se,M");
    const auto j = read_json(out / "compare.json");
    CHECK(j["config"]["seed"] == 2);

    std::string md;
    REQUIRE(run({"report", "--in", (out / "compare.json").string(), "--out", (dir / "report").string()}, &md) == 0);
    CHECK(md.find("pchm") != std::string::npos);
}

TEST_CASE("command line: complete on certainty equivalents") {
    const fs::path dir = scratch("complete");
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "ce.csv");
        csv << "subject_id,z_high,z_low,p,ce\n";
        const double z[4][3] = {{10, 0, 0.5}, {20, 5, 0.25}, {30, 10, 0.75}, {15, 0, 0.9}};
        for (int s = 0; s < 30; ++s)
            for (const auto& l : z)
                csv << s << ',' << l[0] << ',' << l[1] << ',' << l[2] << ','
                    << l[1] + (l[0] - l[1]) * l[2] * 0.8 + ((s * 7) % 5 - 2) * 0.5 << '\n';
    }
    const fs::path out = dir / "out";
    std::string err;
    const int rc = run({"complete", "--model", "cpt:gamma,eta", "--data", (dir / "ce.csv").string(), "--grid", "30",
                        "--starts", "4", "--seed", "5", "--out", out.string()},
                       nullptr, &err);
    INFO(err);
    REQUIRE(rc == 0);
    const auto j = read_json(out / "complete.json");
    CHECK(j["config"]["seed"] == 5);
    CHECK(j["result"]["N"] == 120);
    CHECK(fs::exists(out / "folds.csv"));
}
