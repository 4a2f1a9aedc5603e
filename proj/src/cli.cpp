#include "restrictlab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "restrictlab/complete.hpp"
#include "restrictlab/error.hpp"
#include "restrictlab/io.hpp"
#include "restrictlab/models.hpp"
#include "restrictlab/restrict.hpp"
#include "restrictlab/samplers.hpp"

namespace restrictlab {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const RunConfig& c) {
    return {{"command", c.command}, {"models", c.models},   {"menu", c.menu},
            {"data", c.data},       {"games", c.games},     {"input", c.input},
            {"kind", c.kind},       {"mu", c.mu},           {"M", c.M},
            {"K", c.K},             {"B", c.B},             {"seed", c.seed},
            {"level", c.level},     {"out", c.out},         {"weights", c.weights},
            {"smoothing", c.smoothing}, {"grid_points", c.grid_points}, {"n_starts", c.n_starts},
            {"level_cap", c.level_cap}, {"groups", c.groups}, {"alt", c.alt},
            {"bins", c.bins}};
}

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void validate_config(const RunConfig& c) {
    const auto& cmd = c.command;
    const bool has_data = !c.data.empty() || !c.games.empty();
    require(c.data.empty() || c.games.empty(), "--data and --games are mutually exclusive");
    for (const auto* p : {&c.data, &c.games, &c.input})
        require(p->empty() || fs::exists(*p), "file not found: " + *p);
    if (!c.menu.empty()) {
        require(!has_data, "--menu cannot be combined with a dataset");
        require(c.menu.rfind("builtin:", 0) == 0, "--menu must be builtin:<name>");
        const auto names = builtin_menu_names();
        require(std::find(names.begin(), names.end(), c.menu.substr(8)) != names.end(),
                "unknown builtin menu: " + c.menu);
    }
    if (cmd == "report") {
        require(!c.input.empty(), "report needs --in");
        return;
    }
    require(!c.menu.empty() || has_data, cmd + " needs --menu or a dataset");
    if (cmd == "restrict" || cmd == "complete") require(c.models.size() == 1, cmd + " needs exactly one --model");
    if (cmd == "compare") require(!c.models.empty(), "compare needs --models");
    if (cmd == "complete") require(has_data, "complete needs --data or --games");
    for (const auto& m : c.models) {
        try {
            make_model(m, c.level_cap);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (!c.mu.empty()) {
        try {
            MuSpec::parse(c.mu);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (!c.kind.empty()) {
        try {
            problem_kind_from_string(c.kind);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    require(c.M >= 2, "--M must be at least 2");
    require(c.K >= 2, "--K must be at least 2");
    require(c.B >= 100, "--B must be at least 100");
    require(c.level > 0.0 && c.level < 1.0, "--level must lie in (0, 1)");
    require(c.weights == "uniform" || c.weights == "empirical", "--weights must be uniform or empirical");
    require(c.weights == "uniform" || has_data, "--weights empirical needs a dataset");
    require(c.smoothing >= 0.0, "--smoothing must be nonnegative");
    require(c.grid_points >= 1 && c.n_starts >= 1, "--grid and --starts must be positive");
    require(c.level_cap >= 1, "--level-cap must be positive");
    require(c.bins >= 1, "--bins must be positive");
}

struct Context {
    Menu menu;
    std::optional<LoadedData> loaded;
    ProblemKind kind = ProblemKind::ConditionalMean;
    MuSpec mu;
    OptConfig opt;
};

Context load_context(const RunConfig& c) {
    Context ctx;
    if (!c.data.empty())
        ctx.loaded = load_ce_dataset(c.data);
    else if (!c.games.empty())
        ctx.loaded = load_game_dataset(c.games);
    ctx.menu = ctx.loaded ? ctx.loaded->menu : builtin_menu(c.menu.substr(8));
    if (c.weights == "empirical") {
        std::vector<double> w(ctx.menu.size(), 0.0);
        for (const auto& o : ctx.loaded->data.observations) w[o.item] += 1.0;
        for (double& x : w) x /= static_cast<double>(ctx.loaded->data.size());
        ctx.menu = ctx.menu.with_weights(std::move(w));
    }
    ctx.kind = c.kind.empty() ? natural_kind(ctx.menu) : problem_kind_from_string(c.kind);
    ctx.mu = c.mu.empty() ? natural_mu(ctx.menu) : MuSpec::parse(c.mu);
    ctx.opt.grid_points = c.grid_points;
    ctx.opt.n_starts = c.n_starts;
    ctx.opt.smoothing = c.smoothing;
    return ctx;
}

json menu_json(const Context& ctx) {
    json j{{"size", ctx.menu.size()}, {"fingerprint", ctx.menu.size() ? menu_fingerprint(ctx.menu) : 0}};
    if (ctx.loaded) {
        j["observations"] = ctx.loaded->data.size();
        j["payoff_scale"] = ctx.loaded->payoff_scale;
    }
    return j;
}

std::ofstream open_output(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / name);
    if (!f) throw Error(ErrorCode::InvalidInput, "cannot write " + (fs::path(c.out) / name).string());
    return f;
}

void write_json(const RunConfig& c, const std::string& name, const json& j) {
    auto f = open_output(c, name);
    f << j.dump(2) << '\n';
}

RestrictReport run_restrict_one(const Context& ctx, const Model& model, const RunConfig& c) {
    const ModelFitter fitter(model, ctx.menu, ctx.kind, ctx.opt);
    return estimate_restrictiveness(fitter, ctx.mu, c.M, c.seed, c.level);
}

void cmd_restrict(const RunConfig& c, std::ostream& out) {
    const Context ctx = load_context(c);
    const auto model = make_model(c.models.front(), c.level_cap);
    const RestrictReport r = run_restrict_one(ctx, *model, c);
    write_json(c, "restrict.json", {{"config", to_json(c)}, {"menu", menu_json(ctx)}, {"result", to_json(r)}});
    auto hist = open_output(c, "deltas_hist.csv");
    write_histogram_csv(hist, delta_histogram(r.deltas, c.bins));
    out << r.model_id << ": r_hat = " << r.r_hat << " (SE " << r.sigma_hat / std::sqrt(double(r.M)) << ", M "
        << r.M << ")\n";
}

void cmd_complete(const RunConfig& c, std::ostream& out) {
    const Context ctx = load_context(c);
    const auto model = make_model(c.models.front(), c.level_cap);
    const auto& data = ctx.loaded->data;
    const CompleteReport r = estimate_completeness(*model, ctx.menu, data, ctx.kind, c.K, c.seed, c.level, ctx.opt);
    json j{{"config", to_json(c)}, {"menu", menu_json(ctx)}, {"result", to_json(r)}};
    if (c.groups) j["groups"] = to_json(group_completeness(*model, ctx.menu, data, ctx.kind, c.K, c.seed, c.level, ctx.opt));
    if (c.alt) j["alt_fstar"] = to_json(alt_fstar_discrepancy(*model, ctx.menu, data, ctx.kind, c.B, c.seed, ctx.opt));
    write_json(c, "complete.json", j);
    auto folds = open_output(c, "folds.csv");
    write_folds_csv(folds, r);
    out << r.model_id << ": kappa_hat = " << r.kappa_hat << " (SE " << r.sigma_hat / std::sqrt(double(r.N))
        << ", N " << r.N << ")\n";
}

std::string csv_field(const std::string& s) {
    return s.find(',') == std::string::npos ? s : '"' + s + '"';
}

void cmd_compare(const RunConfig& c, std::ostream& out) {
    const Context ctx = load_context(c);
    json rows = json::array();
    std::ostringstream csv;
    csv << "model,kappa,kappa_se,N,r,r_se,M\n";
    for (const auto& id : c.models) {
        const auto model = make_model(id, c.level_cap);
        const RestrictReport r = run_restrict_one(ctx, *model, c);
        const double r_se = r.sigma_hat / std::sqrt(double(r.M));
        json row{{"model", model->id()}, {"restrict", to_json(r)}};
        std::string kappa, kappa_se, n;
        if (ctx.loaded) {
            const CompleteReport k =
                estimate_completeness(*model, ctx.menu, ctx.loaded->data, ctx.kind, c.K, c.seed, c.level, ctx.opt);
            row["complete"] = to_json(k);
            kappa = format_double(k.kappa_hat);
            kappa_se = format_double(k.sigma_hat / std::sqrt(double(k.N)));
            n = std::to_string(k.N);
        }
        csv << csv_field(model->id()) << ',' << kappa << ',' << kappa_se << ',' << n << ',' << format_double(r.r_hat) << ','
            << format_double(r_se) << ',' << r.M << '\n';
        rows.push_back(std::move(row));
    }
    write_json(c, "compare.json", {{"config", to_json(c)}, {"menu", menu_json(ctx)}, {"rows", rows}});
    auto f = open_output(c, "compare.csv");
    f << csv.str();
    out << csv.str();
}

void cmd_sample(const RunConfig& c, std::ostream& out) {
    const Context ctx = load_context(c);
    const auto draws = sample_mappings(ctx.menu, ctx.mu, c.M, c.seed);
    auto f = open_output(c, "samples.csv");
    write_mappings_csv(f, ctx.menu, draws);
    write_json(c, "samples.json", {{"config", to_json(c)}, {"menu", menu_json(ctx)}, {"mu", ctx.mu.to_string()}});
    out << "wrote " << draws.size() << " mappings\n";
}

std::string fmt(const json& v) {
    if (v.is_number()) {
        std::ostringstream s;
        s << std::setprecision(4) << std::fixed << v.get<double>();
        return s.str();
    }
    return v.is_null() ? "n/a" : v.dump();
}

void render_result(std::ostream& md, const json& r) {
    if (r.contains("r_hat")) {
        md << "| model | mu | M | r_hat | SE | CI |\n|---|---|---|---|---|---|\n";
        const std::string ci = r["ci"].is_null() ? "n/a" : "[" + fmt(r["ci"][0]) + ", " + fmt(r["ci"][1]) + "]";
        md << "| " << r["model"].get<std::string>() << " | " << r["mu"].get<std::string>() << " | " << r["M"]
           << " | " << fmt(r["r_hat"]) << " | " << fmt(r["se"]) << " | " << ci << " |\n";
    }
    if (r.contains("kappa_hat")) {
        md << "| model | CV naive | CV model | CV unrestricted | kappa_hat | SE | CI | N |\n"
              "|---|---|---|---|---|---|---|---|\n";
        md << "| " << r["model"].get<std::string>() << " | " << fmt(r["cv_naive"]) << " | " << fmt(r["cv_model"])
           << " | " << fmt(r["cv_unrestricted"]) << " | " << fmt(r["kappa_hat"]) << " | " << fmt(r["se"]) << " | ["
           << fmt(r["ci"][0]) << ", " << fmt(r["ci"][1]) << "] | " << r["N"] << " |\n";
    }
}

void cmd_report(const RunConfig& c, std::ostream& out) {
    std::ifstream in(c.input);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("unreadable report: ") + e.what());
    }
    std::ostringstream md;
    md << "# Report: " << j.value("config", json::object()).value("command", std::string("?")) << "\n\n";
    if (j.contains("config")) md << "seed " << j["config"].value("seed", 0ULL) << "\n\n";
    if (j.contains("result")) render_result(md, j["result"]);
    if (j.contains("rows"))
        for (const auto& row : j["rows"]) {
            md << "\n## " << row["model"].get<std::string>() << "\n\n";
            if (row.contains("restrict")) render_result(md, row["restrict"]);
            if (row.contains("complete")) {
                md << '\n';
                render_result(md, row["complete"]);
            }
        }
    if (j.contains("groups")) {
        md << "\n## Groups (weighted kappa " << fmt(j["groups"]["weighted_kappa"]) << ")\n\n";
        for (const auto& g : j["groups"]["groups"]) {
            md << "- " << g["group"].get<std::string>() << " (n=" << g["n"] << "): ";
            md << (g.contains("report") ? fmt(g["report"]["kappa_hat"]) : g["error"].get<std::string>()) << '\n';
        }
    }
    if (j.contains("alt_fstar"))
        md << "\nalternative delta_fstar = " << fmt(j["alt_fstar"]["delta_hat"]) << " (bootstrap SE "
           << fmt(j["alt_fstar"]["bootstrap_se"]) << ")\n";
    out << md.str();
    auto f = open_output(c, "report.md");
    f << md.str();
}

void add_common(CLI::App* sub, RunConfig& c) {
    sub->add_option("--menu", c.menu, "builtin:<name>");
    sub->add_option("--data", c.data, "certainty-equivalent CSV");
    sub->add_option("--games", c.games, "game CSV");
    sub->add_option("--kind", c.kind, "mean | median | distribution");
    sub->add_option("--mu", c.mu, "uniform-fosd | range-only | beta-fosd:a,b | dominance");
    sub->add_option("--M", c.M, "number of sampled mappings");
    sub->add_option("--K", c.K, "cross-validation folds");
    sub->add_option("--B", c.B, "bootstrap resamples");
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--level", c.level, "1 - confidence level");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--weights", c.weights, "uniform | empirical");
    sub->add_option("--smoothing", c.smoothing, "pseudo-count for unrestricted action frequencies");
    sub->add_option("--grid", c.grid_points, "grid points per axis");
    sub->add_option("--starts", c.n_starts, "Nelder-Mead starts");
    sub->add_option("--level-cap", c.level_cap, "highest cognitive level");
    sub->add_option("--bins", c.bins, "histogram bins");
}

// "pchm,cpt:alpha,gamma,logit-pchm": a bare CPT parameter name continues the
// preceding cpt id.
std::vector<std::string> split_model_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
        const bool param = token == "alpha" || token == "beta" || token == "gamma" || token == "eta";
        if (param && !out.empty() && out.back().rfind("cpt", 0) == 0)
            out.back() += "," + token;
        else
            out.push_back(token);
    }
    return out;
}

void emit_error(std::ostream& err, const std::string& code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Restrictiveness and completeness of behavioral models"};
    app.require_subcommand(1);
    std::string model;
    auto* restrict_cmd = app.add_subcommand("restrict", "restrictiveness of one model");
    auto* complete_cmd = app.add_subcommand("complete", "completeness of one model on data");
    auto* compare_cmd = app.add_subcommand("compare", "both measures for several models");
    auto* sample_cmd = app.add_subcommand("sample", "dump sampled mappings");
    auto* report_cmd = app.add_subcommand("report", "render a report JSON as markdown");
    for (auto* sub : {restrict_cmd, complete_cmd, compare_cmd, sample_cmd}) add_common(sub, c);
    restrict_cmd->add_option("--model", model, "model id")->required();
    complete_cmd->add_option("--model", model, "model id")->required();
    complete_cmd->add_flag("--groups", c.groups, "also report completeness per group");
    complete_cmd->add_flag("--alt", c.alt, "also report the bootstrap f* discrepancy");
    std::vector<std::string> model_list;
    compare_cmd->add_option("--models", model_list, "comma-separated model ids")->required();
    report_cmd->add_option("--in", c.input, "report JSON")->required();
    report_cmd->add_option("--out", c.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        emit_error(err, "InvalidConfig", e.what());
        return 2;
    }
    c.command = app.get_subcommands().front()->get_name();
    if (!model.empty()) c.models = {model};
    for (const auto& arg : model_list) {
        const auto more = split_model_list(arg);
        c.models.insert(c.models.end(), more.begin(), more.end());
    }

    try {
        validate_config(c);
    } catch (const ConfigError& e) {
        emit_error(err, "InvalidConfig", e.what());
        return 2;
    }

    try {
        if (c.command == "restrict") cmd_restrict(c, out);
        if (c.command == "complete") cmd_complete(c, out);
        if (c.command == "compare") cmd_compare(c, out);
        if (c.command == "sample") cmd_sample(c, out);
        if (c.command == "report") cmd_report(c, out);
    } catch (const std::exception& e) {
        const auto* re = dynamic_cast<const Error*>(&e);
        const std::string code = re ? std::string(to_string(re->code())) : "Internal";
        emit_error(err, code, e.what());
        try {
            write_json(c, "error.json", {{"error", code}, {"message", e.what()}, {"config", to_json(c)}});
        } catch (const std::exception&) {
        }
        return 3;
    }
    return 0;
}

}  // namespace restrictlab
