#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace restrictlab {

struct RunConfig {
    std::string command;
    std::vector<std::string> models;
    std::string menu;    // "builtin:<name>"; empty when a dataset supplies it
    std::string data;    // certainty-equivalent CSV
    std::string games;   // game CSV
    std::string input;   // report: JSON file to render
    std::string kind;    // empty: mean for lotteries, distribution for games
    std::string mu;      // empty: uniform-fosd for lotteries, dominance for games
    std::size_t M = 100;
    std::size_t K = 10;
    std::size_t B = 200;
    std::uint64_t seed = 0;
    double level = 0.05;
    std::string out = ".";
    std::string weights = "uniform";
    double smoothing = 0.5;
    int grid_points = 200;
    int n_starts = 20;
    int level_cap = 10;
    bool groups = false;
    bool alt = false;
    std::size_t bins = 20;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Exit status: 0 success, 2 bad configuration (nothing written), 3 failed
/// computation (error JSON on `err` and in the output directory).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace restrictlab
