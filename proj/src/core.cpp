#include "restrictlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "restrictlab/error.hpp"

namespace restrictlab {

std::string_view to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::ConditionalMean: return "mean";
        case ProblemKind::ConditionalDistribution: return "distribution";
        case ProblemKind::ConditionalMedian: return "median";
    }
    return "unknown";
}

ProblemKind problem_kind_from_string(std::string_view name) {
    if (name == "mean") return ProblemKind::ConditionalMean;
    if (name == "distribution") return ProblemKind::ConditionalDistribution;
    if (name == "median") return ProblemKind::ConditionalMedian;
    throw Error(ErrorCode::InvalidInput, "unknown problem kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- Menu

namespace {

void check_weights(const std::vector<double>& w, std::size_t n) {
    if (w.size() != n)
        throw Error(ErrorCode::InvalidInput, "menu weights must have one entry per item");
    double total = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0)
            throw Error(ErrorCode::InvalidInput, "menu weights must be nonnegative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidInput, "menu weights must sum to 1");
}

}  // namespace

Menu::Menu(std::vector<std::string> ids, std::vector<FeatureItem> items, std::vector<double> weights)
    : ids_(std::move(ids)), items_(std::move(items)), weights_(std::move(weights)) {
    if (items_.empty()) throw Error(ErrorCode::InvalidInput, "menu must be nonempty");
    if (ids_.size() != items_.size())
        throw Error(ErrorCode::InvalidInput, "menu ids and items differ in length");
    std::set<std::string> seen(ids_.begin(), ids_.end());
    if (seen.size() != ids_.size()) throw Error(ErrorCode::InvalidInput, "menu item ids must be unique");
    if (weights_.empty()) weights_.assign(items_.size(), 1.0 / static_cast<double>(items_.size()));
    check_weights(weights_, items_.size());
    for (const auto& it : items_) std::visit([](const auto& x) { validate(x); }, it);
}

Menu Menu::with_weights(std::vector<double> weights) const {
    Menu out = *this;
    check_weights(weights, items_.size());
    out.weights_ = std::move(weights);
    return out;
}

// ---------------------------------------------------------------- Mapping

Mapping Mapping::scalars(std::vector<double> values) {
    Mapping m;
    m.values_ = std::move(values);
    return m;
}

Mapping Mapping::distributions(std::vector<Triple> values) {
    Mapping m;
    m.values_ = std::move(values);
    return m;
}

std::size_t Mapping::size() const {
    return std::visit([](const auto& v) { return v.size(); }, values_);
}

const std::vector<double>& Mapping::scalar_values() const {
    if (is_distribution()) throw Error(ErrorCode::DomainMismatch, "mapping holds distributions, not scalars");
    return std::get<std::vector<double>>(values_);
}

const std::vector<Triple>& Mapping::distribution_values() const {
    if (!is_distribution()) throw Error(ErrorCode::DomainMismatch, "mapping holds scalars, not distributions");
    return std::get<std::vector<Triple>>(values_);
}

std::vector<double>& Mapping::scalar_values() {
    if (is_distribution()) throw Error(ErrorCode::DomainMismatch, "mapping holds distributions, not scalars");
    return std::get<std::vector<double>>(values_);
}

std::vector<Triple>& Mapping::distribution_values() {
    if (!is_distribution()) throw Error(ErrorCode::DomainMismatch, "mapping holds scalars, not distributions");
    return std::get<std::vector<Triple>>(values_);
}

bool is_valid_distribution(const Triple& p, double tol) {
    double s = 0.0;
    for (double x : p) {
        if (!std::isfinite(x) || x < 0.0) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol;
}

void validate_mapping(const Mapping& f, std::size_t menu_size, ProblemKind kind) {
    if (f.size() != menu_size)
        throw Error(ErrorCode::InvalidInput, "mapping size does not match menu size");
    if (kind == ProblemKind::ConditionalDistribution) {
        for (const auto& p : f.distribution_values())
            if (!is_valid_distribution(p))
                throw Error(ErrorCode::InvalidInput, "mapping value is not a probability triple");
    } else {
        for (double v : f.scalar_values())
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "mapping value is not finite");
    }
}

// ---------------------------------------------------------------- Dataset

void Dataset::validate(ProblemKind kind) const {
    if (observations.empty()) throw Error(ErrorCode::InvalidInput, "dataset is empty");
    for (std::size_t r = 0; r < observations.size(); ++r) {
        const auto& o = observations[r];
        if (o.item >= menu_size)
            throw Error(ErrorCode::InvalidInput, "observation " + std::to_string(r) + " has invalid item index");
        if (!std::isfinite(o.outcome))
            throw Error(ErrorCode::InvalidInput, "observation " + std::to_string(r) + " has non-finite outcome");
        if (kind == ProblemKind::ConditionalDistribution) {
            if (o.outcome != 0.0 && o.outcome != 1.0 && o.outcome != 2.0)
                throw Error(ErrorCode::InvalidInput,
                            "observation " + std::to_string(r) + " has action outside {0,1,2}");
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.menu_size = menu_size;
    out.observations.reserve(rows.size());
    for (std::size_t r : rows) out.observations.push_back(observations.at(r));
    return out;
}

ItemStats summarize(const Dataset& data, ProblemKind kind) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return summarize(data, kind, rows);
}

ItemStats summarize(const Dataset& data, ProblemKind kind, std::span<const std::size_t> rows) {
    const std::size_t n = data.menu_size;
    ItemStats s;
    s.kind = kind;
    s.total = static_cast<double>(rows.size());
    s.count.assign(n, 0.0);
    switch (kind) {
        case ProblemKind::ConditionalMean: {
            s.mean.assign(n, 0.0);
            s.ss.assign(n, 0.0);
            for (std::size_t r : rows) {
                const auto& o = data.observations[r];
                s.count[o.item] += 1.0;
                s.mean[o.item] += o.outcome;
            }
            for (std::size_t i = 0; i < n; ++i)
                if (s.count[i] > 0) s.mean[i] /= s.count[i];
            for (std::size_t r : rows) {
                const auto& o = data.observations[r];
                const double dev = o.outcome - s.mean[o.item];
                s.ss[o.item] += dev * dev;
            }
            break;
        }
        case ProblemKind::ConditionalDistribution: {
            s.action_count.assign(n, Triple{0.0, 0.0, 0.0});
            for (std::size_t r : rows) {
                const auto& o = data.observations[r];
                s.count[o.item] += 1.0;
                s.action_count[o.item][static_cast<std::size_t>(o.outcome)] += 1.0;
            }
            break;
        }
        case ProblemKind::ConditionalMedian: {
            s.sorted_outcomes.assign(n, {});
            s.prefix.assign(n, {});
            for (std::size_t r : rows) {
                const auto& o = data.observations[r];
                s.count[o.item] += 1.0;
                s.sorted_outcomes[o.item].push_back(o.outcome);
            }
            for (std::size_t i = 0; i < n; ++i) {
                auto& v = s.sorted_outcomes[i];
                std::sort(v.begin(), v.end());
                s.prefix[i].resize(v.size() + 1, 0.0);
                for (std::size_t k = 0; k < v.size(); ++k) s.prefix[i][k + 1] = s.prefix[i][k] + v[k];
            }
            break;
        }
    }
    return s;
}

// ---------------------------------------------------------------- losses

double pointwise_loss(ProblemKind kind, double prediction, double outcome) {
    switch (kind) {
        case ProblemKind::ConditionalMean: {
            const double e = outcome - prediction;
            return e * e;
        }
        case ProblemKind::ConditionalMedian:
            return std::abs(outcome - prediction);
        case ProblemKind::ConditionalDistribution:
            break;
    }
    throw Error(ErrorCode::DomainMismatch, "scalar prediction used with a distribution problem");
}

double pointwise_loss(const Triple& prediction, int action) {
    if (action < 0 || action > 2) throw Error(ErrorCode::InvalidInput, "action index outside {0,1,2}");
    const double q = prediction[static_cast<std::size_t>(action)];
    if (!(q > 0.0))
        throw Error(ErrorCode::ZeroLikelihood,
                    "predicted probability of realized action " + std::to_string(action + 1) + " is zero");
    return -std::log(q);
}

double pointwise_loss(ProblemKind kind, const Mapping& f, const Observation& obs) {
    if (kind == ProblemKind::ConditionalDistribution)
        return pointwise_loss(f.distribution_values().at(obs.item), static_cast<int>(obs.outcome));
    return pointwise_loss(kind, f.scalar_values().at(obs.item), obs.outcome);
}

double empirical_error(const Mapping& f, const Dataset& data, ProblemKind kind) {
    if (data.observations.empty()) throw Error(ErrorCode::InvalidInput, "dataset is empty");
    if (f.size() != data.menu_size) throw Error(ErrorCode::InvalidInput, "mapping and dataset menus differ");
    double total = 0.0;
    for (const auto& o : data.observations) total += pointwise_loss(kind, f, o);
    return total / static_cast<double>(data.size());
}

double empirical_error(const Mapping& f, const ItemStats& stats) {
    if (stats.total <= 0.0) throw Error(ErrorCode::InvalidInput, "no observations");
    if (f.size() != stats.count.size()) throw Error(ErrorCode::InvalidInput, "mapping and dataset menus differ");
    double total = 0.0;
    const std::size_t n = stats.count.size();
    switch (stats.kind) {
        case ProblemKind::ConditionalMean: {
            const auto& v = f.scalar_values();
            for (std::size_t i = 0; i < n; ++i) {
                if (stats.count[i] == 0.0) continue;
                const double gap = stats.mean[i] - v[i];
                total += stats.ss[i] + stats.count[i] * gap * gap;
            }
            break;
        }
        case ProblemKind::ConditionalDistribution: {
            const auto& v = f.distribution_values();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t a = 0; a < 3; ++a) {
                    const double c = stats.action_count[i][a];
                    if (c == 0.0) continue;
                    if (!(v[i][a] > 0.0))
                        throw Error(ErrorCode::ZeroLikelihood,
                                    "zero predicted probability for an observed action at item " + std::to_string(i));
                    total -= c * std::log(v[i][a]);
                }
            break;
        }
        case ProblemKind::ConditionalMedian: {
            const auto& v = f.scalar_values();
            for (std::size_t i = 0; i < n; ++i) {
                const auto& ys = stats.sorted_outcomes[i];
                if (ys.empty()) continue;
                const auto& pre = stats.prefix[i];
                const std::size_t k = static_cast<std::size_t>(
                    std::upper_bound(ys.begin(), ys.end(), v[i]) - ys.begin());
                const double below = static_cast<double>(k) * v[i] - pre[k];
                const double above = (pre.back() - pre[k]) - static_cast<double>(ys.size() - k) * v[i];
                total += below + above;
            }
            break;
        }
    }
    return total / stats.total;
}

// ---------------------------------------------------------------- discrepancy

double discrepancy(ProblemKind kind, const Mapping& f, const Mapping& g, std::span<const double> weights) {
    if (f.size() != g.size() || f.size() != weights.size())
        throw Error(ErrorCode::InvalidInput, "discrepancy arguments disagree in menu size");
    double total = 0.0;
    switch (kind) {
        case ProblemKind::ConditionalMean: {
            const auto& a = f.scalar_values();
            const auto& b = g.scalar_values();
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double e = a[i] - b[i];
                total += weights[i] * e * e;
            }
            return total;
        }
        case ProblemKind::ConditionalMedian: {
            const auto& a = f.scalar_values();
            const auto& b = g.scalar_values();
            for (std::size_t i = 0; i < a.size(); ++i) total += weights[i] * std::abs(a[i] - b[i]);
            return total;
        }
        case ProblemKind::ConditionalDistribution: {
            const auto& a = f.distribution_values();
            const auto& b = g.distribution_values();
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (weights[i] == 0.0) continue;
                double kl = 0.0;
                for (std::size_t y = 0; y < 3; ++y) {
                    if (a[i][y] <= 0.0) continue;  // 0 log 0 = 0
                    if (!(b[i][y] > 0.0))
                        throw Error(ErrorCode::InfiniteDivergence,
                                    "reference puts mass where the comparison mapping has none (item " +
                                        std::to_string(i) + ")");
                    kl += a[i][y] * (std::log(a[i][y]) - std::log(b[i][y]));
                }
                total += weights[i] * kl;
            }
            // Rounding can push an exact zero slightly negative.
            return std::max(total, 0.0);
        }
    }
    return total;
}

// ---------------------------------------------------------------- decomposition

namespace {

double atom_median(Atoms atoms) {
    std::sort(atoms.begin(), atoms.end());
    double cdf = 0.0;
    for (const auto& [y, p] : atoms) {
        cdf += p;
        if (cdf >= 0.5 - 1e-12) return y;
    }
    return atoms.back().first;
}

}  // namespace

Mapping best_mapping(ProblemKind kind, const DiscreteJoint& p) {
    const std::size_t n = p.conditional.size();
    if (kind == ProblemKind::ConditionalDistribution) {
        std::vector<Triple> out(n, Triple{0.0, 0.0, 0.0});
        for (std::size_t x = 0; x < n; ++x)
            for (const auto& [y, q] : p.conditional[x]) out[x][static_cast<std::size_t>(y)] += q;
        return Mapping::distributions(std::move(out));
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        if (kind == ProblemKind::ConditionalMean) {
            for (const auto& [y, q] : p.conditional[x]) out[x] += y * q;
        } else {
            out[x] = atom_median(p.conditional[x]);
        }
    }
    return Mapping::scalars(std::move(out));
}

double expected_error(ProblemKind kind, const DiscreteJoint& p, const Mapping& f) {
    double total = 0.0;
    for (std::size_t x = 0; x < p.conditional.size(); ++x) {
        double ex = 0.0;
        for (const auto& [y, q] : p.conditional[x]) {
            if (q == 0.0) continue;
            if (kind == ProblemKind::ConditionalDistribution)
                ex += q * pointwise_loss(f.distribution_values()[x], static_cast<int>(y));
            else
                ex += q * pointwise_loss(kind, f.scalar_values()[x], y);
        }
        total += p.marginal[x] * ex;
    }
    return total;
}

DecompositionCheck check_decomposition(ProblemKind kind, const DiscreteJoint& p, const Mapping& f) {
    const Mapping best = best_mapping(kind, p);
    return {expected_error(kind, p, f) - expected_error(kind, p, best),
            discrepancy(kind, best, f, p.marginal)};
}

}  // namespace restrictlab
