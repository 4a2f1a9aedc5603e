#include "restrictlab/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>

#include "restrictlab/error.hpp"
#include "restrictlab/models.hpp"
#include "restrictlab/parallel.hpp"

namespace restrictlab {

using nlohmann::json;

// ---------------------------------------------------------------- numbers

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double x = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error(ErrorCode::InvalidInput, "not a number: '" + std::string(text) + "'");
    return x;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line;  // 1-based source line of each row

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
    std::size_t require(std::string_view name) const {
        if (auto c = column(name)) return *c;
        throw Error(ErrorCode::InvalidInput, source + ": missing column '" + std::string(name) + "'");
    }
    [[noreturn]] void fail(std::size_t r, const std::string& what) const {
        throw Error(ErrorCode::InvalidInput, source + ":" + std::to_string(line[r]) + ": " + what);
    }
    double number(std::size_t r, std::size_t c) const {
        try {
            return parse_double(rows[r][c]);
        } catch (const Error& e) {
            fail(r, "column '" + header[c] + "': " + e.what());
        }
    }
};

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable t;
    t.source = source;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw Error(ErrorCode::InvalidInput, source + ":" + std::to_string(lineno) + ": expected " +
                                                     std::to_string(t.header.size()) + " fields, found " +
                                                     std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line.push_back(lineno);
    }
    if (t.header.empty()) throw Error(ErrorCode::InvalidInput, source + ": missing header");
    if (t.rows.empty()) throw Error(ErrorCode::InvalidInput, source + ": no data rows");
    return t;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
    return in;
}

std::string item_label(const FeatureItem& item) {
    std::string s = "(";
    if (const auto* b = std::get_if<BinaryLottery>(&item)) {
        s += format_double(b->z_high) + "," + format_double(b->z_low) + ";" + format_double(b->p);
    } else if (const auto* t = std::get_if<ThreeOutcomeLottery>(&item)) {
        s += format_double(t->z1) + "," + format_double(t->z2) + "," + format_double(t->z3) + ";" +
             format_double(t->p1) + "," + format_double(t->p2) + "," + format_double(t->p3);
    } else {
        const auto& g = std::get<Game3x3>(item);
        for (const auto* m : {&g.row, &g.col})
            for (const auto& r : *m)
                for (double v : r) s += format_double(v) + ",";
        s.pop_back();
    }
    return s + ")";
}

}  // namespace

// ---------------------------------------------------------------- CE data

LoadedData parse_ce_dataset(std::istream& in, const std::string& source) {
    const CsvTable t = read_csv(in, source);
    t.require("subject_id");
    const std::size_t ce = t.require("ce");
    const auto cluster = t.column("cluster");
    const bool binary = t.column("z_high").has_value();
    const bool three = t.column("z1").has_value();
    if (binary == three)
        throw Error(ErrorCode::InvalidInput, source + ": need exactly one of the binary (z_high, z_low, p) or "
                                                      "three-outcome (z1..z3, p1..p3) column sets");

    using Key = std::vector<double>;
    std::vector<Key> keys(t.rows.size());
    std::map<Key, FeatureItem> distinct;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        FeatureItem item;
        if (binary) {
            BinaryLottery l;
            l.z_high = t.number(r, t.require("z_high"));
            l.z_low = t.number(r, t.require("z_low"));
            l.p = t.number(r, t.require("p"));
            if (!(l.p >= 0.0 && l.p <= 1.0)) t.fail(r, "p outside [0, 1]");
            if (l.z_high >= 0.0 && l.z_low >= 0.0)
                l.domain = Domain::Gain;
            else if (l.z_high <= 0.0 && l.z_low <= 0.0)
                l.domain = Domain::Loss;
            else
                t.fail(r, "prizes of mixed sign");
            keys[r] = {l.z_high, l.z_low, l.p};
            item = l;
        } else {
            ThreeOutcomeLottery l;
            l.z1 = t.number(r, t.require("z1"));
            l.z2 = t.number(r, t.require("z2"));
            l.z3 = t.number(r, t.require("z3"));
            l.p1 = t.number(r, t.require("p1"));
            l.p2 = t.number(r, t.require("p2"));
            l.p3 = t.number(r, t.require("p3"));
            for (double p : {l.p1, l.p2, l.p3})
                if (!(p >= 0.0 && p <= 1.0)) t.fail(r, "probability outside [0, 1]");
            keys[r] = {l.z1, l.z2, l.z3, l.p1, l.p2, l.p3};
            item = l;
        }
        try {
            std::visit([](const auto& x) { validate(x); }, item);
        } catch (const Error& e) {
            t.fail(r, e.what());
        }
        distinct.emplace(keys[r], item);
    }

    std::vector<std::string> ids;
    std::vector<FeatureItem> items;
    std::map<Key, std::size_t> index;
    for (const auto& [key, item] : distinct) {
        index[key] = items.size();
        ids.push_back(item_label(item));
        items.push_back(item);
    }
    LoadedData out;
    out.menu = Menu(std::move(ids), std::move(items));
    out.kind = ProblemKind::ConditionalMean;
    out.data.menu_size = out.menu.size();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Observation o;
        o.item = index.at(keys[r]);
        o.outcome = t.number(r, ce);
        if (!std::isfinite(o.outcome)) t.fail(r, "non-finite certainty equivalent");
        if (cluster) o.group = t.rows[r][*cluster];
        out.data.observations.push_back(std::move(o));
    }
    return out;
}

LoadedData load_ce_dataset(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_ce_dataset(in, path.string());
}

// ---------------------------------------------------------------- game data

LoadedData parse_game_dataset(std::istream& in, const std::string& source) {
    const CsvTable t = read_csv(in, source);
    const std::size_t gid = t.require("game_id");
    std::array<std::array<std::size_t, 3>, 3> rc{}, cc{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const std::string suffix = std::to_string(i + 1) + std::to_string(j + 1);
            rc[i][j] = t.require("r" + suffix);
            cc[i][j] = t.require("c" + suffix);
        }
    const auto action = t.column("action");
    const auto n1 = t.column("n1");
    if (action.has_value() == n1.has_value())
        throw Error(ErrorCode::InvalidInput, source + ": need either an action column or n1, n2, n3 counts");
    std::array<std::size_t, 3> ncol{};
    if (n1) ncol = {*n1, t.require("n2"), t.require("n3")};
    const auto group = t.column("group");

    std::vector<std::string> ids;
    std::vector<Game3x3> games;
    std::map<std::string, std::size_t> index;
    LoadedData out;
    out.kind = ProblemKind::ConditionalDistribution;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Game3x3 g;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                g.row[i][j] = t.number(r, rc[i][j]);
                g.col[i][j] = t.number(r, cc[i][j]);
                if (!std::isfinite(g.row[i][j]) || !std::isfinite(g.col[i][j])) t.fail(r, "non-finite payoff");
            }
        const std::string& id = t.rows[r][gid];
        auto [it, fresh] = index.emplace(id, games.size());
        if (fresh) {
            ids.push_back(id);
            games.push_back(g);
        } else if (games[it->second].row != g.row || games[it->second].col != g.col) {
            t.fail(r, "game '" + id + "' repeated with different payoffs");
        }
        auto add = [&](int a) {
            Observation o;
            o.item = it->second;
            o.outcome = a;
            if (group) o.group = t.rows[r][*group];
            out.data.observations.push_back(std::move(o));
        };
        if (action) {
            const double a = t.number(r, *action);
            if (!(a == 1.0 || a == 2.0 || a == 3.0)) t.fail(r, "action must be 1, 2 or 3");
            add(static_cast<int>(a) - 1);
        } else {
            for (int a = 0; a < 3; ++a) {
                const double n = t.number(r, ncol[a]);
                if (!(n >= 0.0) || n != std::floor(n)) t.fail(r, "counts must be nonnegative integers");
                for (double k = 0; k < n; ++k) add(a);
            }
        }
    }
    out.payoff_scale = normalize_payoffs(games);
    out.menu = Menu(std::move(ids), std::vector<FeatureItem>(games.begin(), games.end()));
    out.data.menu_size = out.menu.size();
    if (out.data.observations.empty()) throw Error(ErrorCode::InvalidInput, source + ": no observations");
    return out;
}

LoadedData load_game_dataset(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_game_dataset(in, path.string());
}

// ---------------------------------------------------------------- built-in menus

namespace {

Menu bernheim_sprenger_18() {
    // z1 z2 z3 p1 p2 p3
    static constexpr double rows[18][6] = {
        {34, 24, 18, 0.1, 0.3, 0.6}, {34, 24, 18, 0.4, 0.3, 0.3}, {34, 24, 18, 0.6, 0.3, 0.1},
        {32, 24, 18, 0.1, 0.3, 0.6}, {32, 24, 18, 0.4, 0.3, 0.3}, {32, 24, 18, 0.6, 0.3, 0.1},
        {30, 24, 18, 0.1, 0.3, 0.6}, {30, 24, 18, 0.4, 0.3, 0.3}, {30, 24, 18, 0.6, 0.3, 0.1},
        {24, 23, 18, 0.3, 0.1, 0.6}, {24, 23, 18, 0.3, 0.4, 0.3}, {24, 23, 18, 0.3, 0.6, 0.1},
        {24, 21, 18, 0.3, 0.1, 0.6}, {24, 21, 18, 0.3, 0.4, 0.3}, {24, 21, 18, 0.3, 0.6, 0.1},
        {24, 19, 18, 0.3, 0.1, 0.6}, {24, 19, 18, 0.3, 0.4, 0.3}, {24, 19, 18, 0.3, 0.6, 0.1},
    };
    std::vector<std::string> ids;
    std::vector<FeatureItem> items;
    for (std::size_t i = 0; i < 18; ++i) {
        const auto& r = rows[i];
        ids.push_back("bs" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1));
        items.push_back(ThreeOutcomeLottery{r[0], r[1], r[2], r[3], r[4], r[5]});
    }
    return Menu(std::move(ids), std::move(items));
}

// Five prize pairs crossed with five probabilities of the high prize. The
// pairs share prizes so that many lotteries are FOSD-comparable.
Menu synthetic_gain_25() {
    static constexpr double prizes[5][2] = {{20, 0}, {50, 0}, {150, 0}, {50, 20}, {150, 50}};
    static constexpr double probs[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
    std::vector<std::string> ids;
    std::vector<FeatureItem> items;
    for (const auto& z : prizes)
        for (double p : probs) {
            BinaryLottery l{z[0], z[1], p, Domain::Gain};
            ids.push_back(item_label(l));
            items.push_back(l);
        }
    return Menu(std::move(ids), std::move(items));
}

}  // namespace

Menu synthetic_game_menu(std::size_t count, std::uint64_t seed) {
    if (count == 0) throw Error(ErrorCode::InvalidInput, "game count must be positive");
    std::vector<Game3x3> games(count);
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng = make_rng(seed, k, 0x9a3eu);
        std::uniform_int_distribution<int> payoff(0, 100);
        for (auto* m : {&games[k].row, &games[k].col})
            for (auto& r : *m)
                for (double& v : r) v = payoff(rng);
    }
    normalize_payoffs(games);
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < count; ++k) ids.push_back("g" + std::to_string(k + 1));
    return Menu(std::move(ids), std::vector<FeatureItem>(games.begin(), games.end()));
}

Menu builtin_menu(std::string_view name) {
    if (name == "bernheim_sprenger_18") return bernheim_sprenger_18();
    if (name == "synthetic_gain_25") return synthetic_gain_25();
    if (name == "synthetic_games_100") return synthetic_game_menu(100, 2024);
    throw Error(ErrorCode::InvalidInput, "unknown builtin menu '" + std::string(name) + "'");
}

std::vector<std::string> builtin_menu_names() {
    return {"bernheim_sprenger_18", "synthetic_gain_25", "synthetic_games_100"};
}

std::uint64_t menu_fingerprint(const Menu& menu) {
    std::string text;
    for (std::size_t i = 0; i < menu.size(); ++i)
        text += menu.ids()[i] + "=" + item_label(menu.item(i)) + "@" + format_double(menu.weights()[i]) + "\n";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------- mappings

void write_mappings_csv(std::ostream& out, const Menu& menu, const std::vector<Mapping>& mappings) {
    const bool dist = !mappings.empty() && mappings.front().is_distribution();
    out << (dist ? "draw,item,p1,p2,p3\n" : "draw,item,value\n");
    for (std::size_t m = 0; m < mappings.size(); ++m) {
        const Mapping& f = mappings[m];
        if (f.size() != menu.size() || f.is_distribution() != dist)
            throw Error(ErrorCode::InvalidInput, "mappings do not match the menu");
        for (std::size_t i = 0; i < f.size(); ++i) {
            out << m << ',' << menu.ids()[i];
            if (dist) {
                for (double p : f.distribution_values()[i]) out << ',' << format_double(p);
            } else {
                out << ',' << format_double(f.scalar_values()[i]);
            }
            out << '\n';
        }
    }
}

std::vector<Mapping> read_mappings_csv(std::istream& in) {
    const CsvTable t = read_csv(in, "<mappings>");
    const std::size_t draw = t.require("draw");
    t.require("item");
    const bool dist = t.column("p1").has_value();
    std::vector<std::vector<double>> scalars;
    std::vector<std::vector<Triple>> dists;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto m = static_cast<std::size_t>(t.number(r, draw));
        if (dist) {
            if (dists.size() <= m) dists.resize(m + 1);
            dists[m].push_back({t.number(r, t.require("p1")), t.number(r, t.require("p2")),
                                t.number(r, t.require("p3"))});
        } else {
            if (scalars.size() <= m) scalars.resize(m + 1);
            scalars[m].push_back(t.number(r, t.require("value")));
        }
    }
    std::vector<Mapping> out;
    if (dist)
        for (auto& v : dists) out.push_back(Mapping::distributions(std::move(v)));
    else
        for (auto& v : scalars) out.push_back(Mapping::scalars(std::move(v)));
    return out;
}

// ---------------------------------------------------------------- reports

json to_json(const RestrictReport& r) {
    json j;
    j["model"] = r.model_id;
    j["mu"] = r.mu_spec;
    j["kind"] = std::string(to_string(r.kind));
    j["M"] = r.M;
    j["seed"] = r.seed;
    j["level"] = r.level;
    j["r_hat"] = r.r_hat;
    j["sigma_hat"] = r.sigma_hat;
    j["se"] = r.sigma_hat / std::sqrt(static_cast<double>(r.M));
    j["degenerate"] = r.degenerate;
    j["ci"] = r.ci ? json::array({r.ci->lo, r.ci->hi}) : json(nullptr);
    j["deltas"] = r.deltas;
    j["naive_discrepancies"] = r.naive_discrepancies;
    j["model_discrepancies"] = r.model_discrepancies;
    return j;
}

json to_json(const CompleteReport& r) {
    json j;
    j["model"] = r.model_id;
    j["kind"] = std::string(to_string(r.kind));
    j["cv_model"] = r.cv_model;
    j["cv_naive"] = r.cv_naive;
    j["cv_unrestricted"] = r.cv_unrestricted;
    j["kappa_hat"] = r.kappa_hat;
    j["sigma_hat"] = r.sigma_hat;
    j["se"] = r.sigma_hat / std::sqrt(static_cast<double>(r.N));
    j["ci"] = json::array({r.ci.lo, r.ci.hi});
    j["level"] = r.level;
    j["K"] = r.K;
    j["N"] = r.N;
    j["seed"] = r.seed;
    j["fold_model"] = r.fold_model;
    j["fold_naive"] = r.fold_naive;
    j["fold_unrestricted"] = r.fold_unrestricted;
    j["fold_delta_variance"] = r.fold_delta_variance;
    return j;
}

json to_json(const AltFstarReport& r) {
    return {{"delta_hat", r.delta_hat}, {"bootstrap_se", r.bootstrap_se}, {"B", r.B}, {"seed", r.seed}};
}

json to_json(const GroupCompleteness& g) {
    json groups = json::array();
    for (const auto& gr : g.groups) {
        json e{{"group", gr.group}, {"n", gr.n}};
        if (gr.report)
            e["report"] = to_json(*gr.report);
        else
            e["error"] = gr.error;
        groups.push_back(std::move(e));
    }
    return {{"groups", groups}, {"weighted_kappa", g.weighted_kappa}};
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
    out << "lo,hi,count\n";
    for (const auto& b : bins) out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
}

void write_folds_csv(std::ostream& out, const CompleteReport& r) {
    out << "fold,model,naive,unrestricted,delta_variance\n";
    for (std::size_t k = 0; k < r.K; ++k)
        out << k << ',' << format_double(r.fold_model[k]) << ',' << format_double(r.fold_naive[k]) << ','
            << format_double(r.fold_unrestricted[k]) << ',' << format_double(r.fold_delta_variance[k]) << '\n';
}

}  // namespace restrictlab
