#include "restrictlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "restrictlab/error.hpp"

namespace restrictlab {

// ---------------------------------------------------------------- ParamSpec

double ParamSpec::to_unit(double value) const {
    double u = 0.0;
    switch (scale) {
        case ParamScale::Linear: u = (value - lo) / (hi - lo); break;
        case ParamScale::Log: u = std::log(value / lo) / std::log(hi / lo); break;
        case ParamScale::Log1p: u = std::log1p((value - lo) / pivot) / std::log1p((hi - lo) / pivot); break;
    }
    return std::clamp(u, 0.0, 1.0);
}

double ParamSpec::from_unit(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    double v = lo;
    switch (scale) {
        case ParamScale::Linear: v = lo + u * (hi - lo); break;
        case ParamScale::Log: v = lo * std::exp(u * std::log(hi / lo)); break;
        case ParamScale::Log1p: v = lo + pivot * std::expm1(u * std::log1p((hi - lo) / pivot)); break;
    }
    return std::clamp(v, lo, hi);
}

// ---------------------------------------------------------------- CPT

double cpt_weight(double p, double gamma, double eta) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double a = eta * std::pow(p, gamma);
    const double b = std::pow(1.0 - p, gamma);
    return a / (a + b);
}

namespace {

double power(double z, double exponent) {
    return exponent == 1.0 ? z : std::pow(z, exponent);
}

// Gain-domain value function z^alpha and its inverse.
double v_gain(double z, double alpha) { return power(z, alpha); }
double v_gain_inv(double v, double alpha) { return power(std::max(v, 0.0), 1.0 / alpha); }

// Loss-domain value function -(-z)^beta and its inverse.
double v_loss(double z, double beta) { return -power(-z, beta); }
double v_loss_inv(double v, double beta) { return -power(std::max(-v, 0.0), 1.0 / beta); }

}  // namespace

double cpt_value(const CptParams& params, const BinaryLottery& l) {
    if (l.domain == Domain::Gain) {
        const double w = cpt_weight(l.p, params.gamma, params.eta);
        const double v = w * v_gain(l.z_high, params.alpha) + (1.0 - w) * v_gain(l.z_low, params.alpha);
        return std::clamp(v_gain_inv(v, params.alpha), l.z_low, l.z_high);
    }
    // Losses are ranked from the worst prize, so the decision weight attaches
    // to 1 - p, the probability of z_low.
    const double w = cpt_weight(1.0 - l.p, params.gamma, params.eta);
    const double v = (1.0 - w) * v_loss(l.z_high, params.alpha) + w * v_loss(l.z_low, params.alpha);
    return std::clamp(v_loss_inv(v, params.alpha), l.z_low, l.z_high);
}

double cpt3_value(const CptParams& params, const ThreeOutcomeLottery& l) {
    // The rank-dependent sum rounds differently from sum(p * z), and the
    // naive member has to match the expected value exactly.
    if (params.alpha == 1.0 && params.gamma == 1.0 && params.eta == 1.0) return expected_value(l);
    const double a = params.alpha;
    const double v1 = v_gain(l.z1, a);
    const double v2 = v_gain(l.z2, a);
    const double v3 = v_gain(l.z3, a);
    const double v = v1 + cpt_weight(l.p2 + l.p3, params.gamma, params.eta) * (v2 - v1) +
                     cpt_weight(l.p3, params.gamma, params.eta) * (v3 - v2);
    return std::clamp(v_gain_inv(v, a), l.z3, l.z1);
}

double expected_value_naive(const FeatureItem& item) {
    if (const auto* b = std::get_if<BinaryLottery>(&item)) return expected_value(*b);
    if (const auto* t = std::get_if<ThreeOutcomeLottery>(&item)) return expected_value(*t);
    throw Error(ErrorCode::DomainMismatch, "expected value requested for a game");
}

// ---------------------------------------------------------------- games

std::vector<double> poisson_weights(double tau, int cap) {
    std::vector<double> w(static_cast<std::size_t>(cap) + 1, 0.0);
    w[0] = std::exp(-tau);
    for (int h = 1; h <= cap; ++h) w[static_cast<std::size_t>(h)] = w[static_cast<std::size_t>(h) - 1] * tau / h;
    return w;
}

Triple uniform_naive(const Game3x3&) {
    return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
}

namespace {

constexpr Triple kUniform{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

Triple best_response(const Triple& payoff) {
    const double best = std::max({payoff[0], payoff[1], payoff[2]});
    const double tol = 1e-12 * (1.0 + std::abs(best));
    Triple out{};
    double n = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        if (payoff[i] >= best - tol) {
            out[i] = 1.0;
            n += 1.0;
        }
    for (auto& x : out) x /= n;
    return out;
}

Triple softmax(const Triple& payoff, double lambda) {
    const double m = std::max({payoff[0], payoff[1], payoff[2]});
    Triple out{};
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = std::exp(lambda * (payoff[i] - m));
        s += out[i];
    }
    for (auto& x : out) x /= s;
    return out;
}

// Expected payoff of each row action against column mixture `col_mix`.
Triple row_payoffs(const Game3x3& g, const Triple& col_mix) {
    Triple u{};
    for (std::size_t i = 0; i < 3; ++i)
        u[i] = g.row[i][0] * col_mix[0] + g.row[i][1] * col_mix[1] + g.row[i][2] * col_mix[2];
    return u;
}

// Expected payoff of each column action against row mixture `row_mix`.
Triple col_payoffs(const Game3x3& g, const Triple& row_mix) {
    Triple u{};
    for (std::size_t j = 0; j < 3; ++j)
        u[j] = g.col[0][j] * row_mix[0] + g.col[1][j] * row_mix[1] + g.col[2][j] * row_mix[2];
    return u;
}

// Level-k play for both roles: level k responds to the Poisson-truncated
// mixture of the opponent's levels 0..k-1. `respond` maps expected payoffs to
// a mixed action.
template <class Respond>
std::vector<Triple> hierarchy_levels(double tau, const Game3x3& g, int cap, Respond respond) {
    const auto pi = poisson_weights(tau, cap);
    std::vector<Triple> row(static_cast<std::size_t>(cap) + 1), col(static_cast<std::size_t>(cap) + 1);
    row[0] = col[0] = kUniform;
    Triple row_acc{}, col_acc{};
    double mass = 0.0;
    for (int k = 1; k <= cap; ++k) {
        const auto h = static_cast<std::size_t>(k) - 1;
        for (std::size_t a = 0; a < 3; ++a) {
            row_acc[a] += pi[h] * row[h][a];
            col_acc[a] += pi[h] * col[h][a];
        }
        mass += pi[h];
        Triple row_belief{}, col_belief{};
        for (std::size_t a = 0; a < 3; ++a) {
            row_belief[a] = col_acc[a] / mass;
            col_belief[a] = row_acc[a] / mass;
        }
        row[static_cast<std::size_t>(k)] = respond(row_payoffs(g, row_belief));
        col[static_cast<std::size_t>(k)] = respond(col_payoffs(g, col_belief));
    }
    return row;
}

Triple poisson_mixture(const std::vector<Triple>& levels, double tau) {
    const auto pi = poisson_weights(tau, static_cast<int>(levels.size()) - 1);
    Triple out{};
    double mass = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        for (std::size_t a = 0; a < 3; ++a) out[a] += pi[k] * levels[k][a];
        mass += pi[k];
    }
    for (auto& x : out) x /= mass;
    return out;
}

void check_rate(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::InvalidInput, std::string(name) + " must be finite and nonnegative");
}

}  // namespace

Triple pchm_distribution(double tau, const Game3x3& game, int level_cap) {
    check_rate(tau, "tau");
    if (level_cap < 1) throw Error(ErrorCode::InvalidInput, "level cap must be positive");
    return poisson_mixture(hierarchy_levels(tau, game, level_cap, best_response), tau);
}

Triple logit_level1_distribution(double lambda, const Game3x3& game) {
    check_rate(lambda, "lambda");
    return softmax(row_payoffs(game, kUniform), lambda);
}

std::vector<Triple> logit_pchm_levels(double tau, double lambda, const Game3x3& game, int level_cap) {
    check_rate(tau, "tau");
    check_rate(lambda, "lambda");
    if (level_cap < 1) throw Error(ErrorCode::InvalidInput, "level cap must be positive");
    return hierarchy_levels(tau, game, level_cap, [lambda](const Triple& u) { return softmax(u, lambda); });
}

Triple logit_pchm_distribution(double tau, double lambda, const Game3x3& game, int level_cap) {
    // Zero precision makes every level play uniformly; skip the mixture so
    // the result is exactly the naive prediction for any tau.
    if (lambda == 0.0) return uniform_naive(game);
    return poisson_mixture(logit_pchm_levels(tau, lambda, game, level_cap), tau);
}

double normalize_payoffs(std::vector<Game3x3>& games) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& g : games)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                lo = std::min({lo, g.row[i][j], g.col[i][j]});
                hi = std::max({hi, g.row[i][j], g.col[i][j]});
            }
    if (!(hi > lo)) return 1.0;
    const double scale = 10.0 / (hi - lo);
    for (auto& g : games)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                g.row[i][j] = (g.row[i][j] - lo) * scale;
                g.col[i][j] = (g.col[i][j] - lo) * scale;
            }
    return scale;
}

Menu normalize_payoffs(const Menu& menu, double* scale) {
    std::vector<Game3x3> games;
    games.reserve(menu.size());
    for (const auto& it : menu.items()) {
        const auto* g = std::get_if<Game3x3>(&it);
        if (!g) throw Error(ErrorCode::DomainMismatch, "payoff normalization requires a menu of games");
        games.push_back(*g);
    }
    const double s = normalize_payoffs(games);
    if (scale) *scale = s;
    return Menu(menu.ids(), std::vector<FeatureItem>(games.begin(), games.end()), menu.weights());
}

// ---------------------------------------------------------------- families

Mapping naive_mapping(const Menu& menu) {
    if (menu.all_of<Game3x3>()) {
        std::vector<Triple> out(menu.size(), kUniform);
        return Mapping::distributions(std::move(out));
    }
    std::vector<double> out;
    out.reserve(menu.size());
    for (const auto& it : menu.items()) out.push_back(expected_value_naive(it));
    return Mapping::scalars(std::move(out));
}

std::vector<double> Model::naive_params() const {
    std::vector<double> out;
    for (const auto& s : params()) out.push_back(s.naive);
    return out;
}

std::vector<double> Model::clamp(std::span<const double> theta) const {
    const auto& specs = params();
    std::vector<double> out(theta.begin(), theta.end());
    for (std::size_t i = 0; i < out.size() && i < specs.size(); ++i)
        out[i] = std::clamp(out[i], specs[i].lo, specs[i].hi);
    return out;
}

CptModel::CptModel(unsigned free_mask, std::string curvature_name)
    : mask_(free_mask), curvature_name_(std::move(curvature_name)) {
    if (mask_ & static_cast<unsigned>(CptFree::Alpha))
        specs_.push_back({curvature_name_, 0.2, 2.0, ParamScale::Log, 1.0, 1.0});
    if (mask_ & static_cast<unsigned>(CptFree::Gamma))
        specs_.push_back({"gamma", 0.05, 2.0, ParamScale::Log, 1.0, 1.0});
    if (mask_ & static_cast<unsigned>(CptFree::Eta))
        specs_.push_back({"eta", 0.05, 5.0, ParamScale::Log, 1.0, 1.0});
}

std::string CptModel::id() const {
    std::string out = "cpt:";
    if (specs_.empty()) return out + "none";
    for (std::size_t i = 0; i < specs_.size(); ++i) out += (i ? "," : "") + specs_[i].name;
    return out;
}

CptParams CptModel::expand(std::span<const double> theta) const {
    if (theta.size() != specs_.size())
        throw Error(ErrorCode::InvalidInput, "CPT parameter vector has wrong length");
    CptParams p;
    std::size_t k = 0;
    if (mask_ & static_cast<unsigned>(CptFree::Alpha)) p.alpha = theta[k++];
    if (mask_ & static_cast<unsigned>(CptFree::Gamma)) p.gamma = theta[k++];
    if (mask_ & static_cast<unsigned>(CptFree::Eta)) p.eta = theta[k++];
    if (!(p.alpha > 0.0 && p.gamma > 0.0 && p.eta > 0.0))
        throw Error(ErrorCode::InvalidInput, "CPT parameters must be strictly positive");
    return p;
}

Mapping CptModel::predict(std::span<const double> theta, const Menu& menu) const {
    const CptParams p = expand(theta);
    const bool curvature_free = mask_ & static_cast<unsigned>(CptFree::Alpha);
    std::vector<double> out;
    out.reserve(menu.size());
    for (const auto& it : menu.items()) {
        if (const auto* b = std::get_if<BinaryLottery>(&it)) {
            if (curvature_free && (b->domain == Domain::Loss) != (curvature_name_ == "beta"))
                throw Error(ErrorCode::DomainMismatch,
                            "curvature '" + curvature_name_ + "' does not match the lottery domain");
            out.push_back(cpt_value(p, *b));
        } else if (const auto* t = std::get_if<ThreeOutcomeLottery>(&it)) {
            if (curvature_free && curvature_name_ == "beta")
                throw Error(ErrorCode::DomainMismatch, "three-outcome lotteries are gain-domain");
            out.push_back(cpt3_value(p, *t));
        } else {
            throw Error(ErrorCode::DomainMismatch, "CPT cannot predict play in a game");
        }
    }
    return Mapping::scalars(std::move(out));
}

GameModel::GameModel(GameModelId which, int level_cap) : which_(which), level_cap_(level_cap) {
    if (level_cap_ < 1) throw Error(ErrorCode::InvalidInput, "level cap must be positive");
    const ParamSpec tau{"tau", 0.0, 10.0, ParamScale::Log1p, 0.0, 0.1};
    const ParamSpec lambda{"lambda", 0.0, 100.0, ParamScale::Log1p, 0.0, 0.01};
    switch (which_) {
        case GameModelId::Pchm: specs_ = {tau}; break;
        case GameModelId::LogitLevel1: specs_ = {lambda}; break;
        case GameModelId::LogitPchm: specs_ = {tau, lambda}; break;
    }
}

std::string GameModel::id() const {
    switch (which_) {
        case GameModelId::Pchm: return "pchm";
        case GameModelId::LogitLevel1: return "logit-level1";
        case GameModelId::LogitPchm: return "logit-pchm";
    }
    return "unknown";
}

Mapping GameModel::predict(std::span<const double> theta, const Menu& menu) const {
    if (theta.size() != specs_.size())
        throw Error(ErrorCode::InvalidInput, "game model parameter vector has wrong length");
    std::vector<Triple> out;
    out.reserve(menu.size());
    for (const auto& it : menu.items()) {
        const auto* g = std::get_if<Game3x3>(&it);
        if (!g) throw Error(ErrorCode::DomainMismatch, "game model applied to a lottery");
        switch (which_) {
            case GameModelId::Pchm: out.push_back(pchm_distribution(theta[0], *g, level_cap_)); break;
            case GameModelId::LogitLevel1: out.push_back(logit_level1_distribution(theta[0], *g)); break;
            case GameModelId::LogitPchm:
                out.push_back(logit_pchm_distribution(theta[0], theta[1], *g, level_cap_));
                break;
        }
    }
    return Mapping::distributions(std::move(out));
}

Mapping NaiveModel::predict(std::span<const double>, const Menu& menu) const {
    return naive_mapping(menu);
}

Mapping UnrestrictedModel::predict(std::span<const double>, const Menu& menu) const {
    return naive_mapping(menu);
}

std::unique_ptr<Model> make_model(std::string_view id, int level_cap) {
    const std::string s(id);
    if (s == "naive") return std::make_unique<NaiveModel>();
    if (s == "unrestricted") return std::make_unique<UnrestrictedModel>();
    if (s == "pchm") return std::make_unique<GameModel>(GameModelId::Pchm, level_cap);
    if (s == "logit-level1") return std::make_unique<GameModel>(GameModelId::LogitLevel1, level_cap);
    if (s == "logit-pchm") return std::make_unique<GameModel>(GameModelId::LogitPchm, level_cap);

    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    if (head != "cpt" && head != "cpt3") throw Error(ErrorCode::InvalidInput, "unknown model '" + s + "'");
    if (colon == std::string::npos)
        return std::make_unique<CptModel>(static_cast<unsigned>(CptFree::Alpha) |
                                          static_cast<unsigned>(CptFree::Gamma) |
                                          static_cast<unsigned>(CptFree::Eta));
    unsigned mask = 0;
    std::string curvature = "alpha";
    std::stringstream list(s.substr(colon + 1));
    std::string name;
    while (std::getline(list, name, ',')) {
        if (name == "alpha" || name == "beta") {
            mask |= static_cast<unsigned>(CptFree::Alpha);
            curvature = name;
        } else if (name == "gamma") {
            mask |= static_cast<unsigned>(CptFree::Gamma);
        } else if (name == "eta") {
            mask |= static_cast<unsigned>(CptFree::Eta);
        } else if (name != "none") {
            throw Error(ErrorCode::InvalidInput, "unknown CPT parameter '" + name + "' in '" + s + "'");
        }
    }
    return std::make_unique<CptModel>(mask, curvature);
}

}  // namespace restrictlab
