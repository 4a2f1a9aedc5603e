#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "restrictlab/complete.hpp"
#include "restrictlab/core.hpp"
#include "restrictlab/restrict.hpp"

namespace restrictlab {

struct LoadedData {
    Menu menu;
    Dataset data;
    ProblemKind kind = ProblemKind::ConditionalMean;
    double payoff_scale = 1.0;  // games only: factor applied by normalize_payoffs
};

/// Certainty-equivalent observations. Header must contain subject_id, ce and
/// either z_high, z_low, p (binary) or z1, z2, z3, p1, p2, p3; a cluster
/// column, if present, fills Observation::group. Menu items are the distinct
/// lotteries in lexicographic order of their fields.
LoadedData load_ce_dataset(const std::filesystem::path& path);
LoadedData parse_ce_dataset(std::istream& in, const std::string& source = "<stream>");

/// Initial-play observations: game_id, r11..r33, c11..c33 and either action
/// (1..3) or counts n1, n2, n3. Game ids are authoritative; menu order is
/// first appearance. Payoffs are normalized onto [0, 10].
LoadedData load_game_dataset(const std::filesystem::path& path);
LoadedData parse_game_dataset(std::istream& in, const std::string& source = "<stream>");

/// "bernheim_sprenger_18", "synthetic_gain_25", "synthetic_games_100".
Menu builtin_menu(std::string_view name);
std::vector<std::string> builtin_menu_names();

/// Games with row and column payoffs drawn i.i.d. uniform on the integers
/// 0..100, normalized onto [0, 10].
Menu synthetic_game_menu(std::size_t count, std::uint64_t seed);

/// FNV-1a over a canonical text rendering of ids, items and weights.
std::uint64_t menu_fingerprint(const Menu& menu);

/// Shortest round-trip decimal; reading it back gives the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

/// Long format: draw,item,value for scalars or draw,item,p1,p2,p3.
void write_mappings_csv(std::ostream& out, const Menu& menu, const std::vector<Mapping>& mappings);
std::vector<Mapping> read_mappings_csv(std::istream& in);

nlohmann::json to_json(const RestrictReport& r);
nlohmann::json to_json(const CompleteReport& r);
nlohmann::json to_json(const AltFstarReport& r);
nlohmann::json to_json(const GroupCompleteness& g);

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);
void write_folds_csv(std::ostream& out, const CompleteReport& r);

}  // namespace restrictlab
