#include "restrictlab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "restrictlab/error.hpp"
#include "restrictlab/parallel.hpp"

namespace restrictlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_log(double p) {
    return p > 0.0 ? std::log(p) : -kInf;
}

}  // namespace

void OptConfig::validate() const {
    if (n_starts < 1 || max_iters < 1 || grid_points < 1)
        throw Error(ErrorCode::InvalidInput, "optimizer counts must be positive");
    if (!(x_tol > 0.0) || !(f_tol > 0.0)) throw Error(ErrorCode::InvalidInput, "optimizer tolerances must be positive");
    if (!(smoothing >= 0.0)) throw Error(ErrorCode::InvalidInput, "smoothing must be nonnegative");
}

// ---------------------------------------------------------------- Nelder-Mead

SimplexResult nelder_mead_unit_box(const std::function<double(std::span<const double>)>& f,
                                   std::vector<double> start, double step, int max_iters, double x_tol,
                                   double f_tol) {
    const std::size_t d = start.size();
    SimplexResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isnan(v) ? kInf : v;
    };
    auto clamp_unit = [](std::vector<double>& x) {
        for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
    };
    clamp_unit(start);
    res.x = start;
    res.value = eval(start);
    if (d == 0) return res;

    std::vector<std::vector<double>> x(d + 1);
    std::vector<double> fx(d + 1);
    std::vector<std::size_t> idx(d + 1);
    std::vector<double> c(d), xr(d), xe(d), xc(d);
    int iter = 0;

    // A restart rebuilds the simplex around the incumbent; it stops once a
    // restart no longer improves on it.
    for (int restart = 0; restart < 3 && iter < max_iters; ++restart) {
        const double before = res.value;
        x[0] = res.x;
        fx[0] = res.value;
        for (std::size_t i = 0; i < d; ++i) {
            x[i + 1] = res.x;
            x[i + 1][i] = res.x[i] + step <= 1.0 ? res.x[i] + step : res.x[i] - step;
            clamp_unit(x[i + 1]);
            fx[i + 1] = eval(x[i + 1]);
        }
        for (; iter < max_iters; ++iter) {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
            {
                std::vector<std::vector<double>> xs(d + 1);
                std::vector<double> fs(d + 1);
                for (std::size_t k = 0; k <= d; ++k) {
                    xs[k] = std::move(x[idx[k]]);
                    fs[k] = fx[idx[k]];
                }
                x.swap(xs);
                fx.swap(fs);
            }
            double size = 0.0;
            for (std::size_t k = 1; k <= d; ++k)
                for (std::size_t i = 0; i < d; ++i) size = std::max(size, std::abs(x[k][i] - x[0][i]));
            if (fx[d] - fx[0] <= f_tol && size <= x_tol) break;

            std::fill(c.begin(), c.end(), 0.0);
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t i = 0; i < d; ++i) c[i] += x[k][i] / static_cast<double>(d);

            for (std::size_t i = 0; i < d; ++i) xr[i] = c[i] + (c[i] - x[d][i]);
            clamp_unit(xr);
            const double fr = eval(xr);
            if (fr < fx[0]) {
                for (std::size_t i = 0; i < d; ++i) xe[i] = c[i] + 2.0 * (xr[i] - c[i]);
                clamp_unit(xe);
                const double fe = eval(xe);
                if (fe < fr) {
                    x[d] = xe;
                    fx[d] = fe;
                } else {
                    x[d] = xr;
                    fx[d] = fr;
                }
            } else if (fr < fx[d - 1]) {
                x[d] = xr;
                fx[d] = fr;
            } else {
                const bool outside = fr < fx[d];
                const auto& toward = outside ? xr : x[d];
                for (std::size_t i = 0; i < d; ++i) xc[i] = c[i] + 0.5 * (toward[i] - c[i]);
                const double fc = eval(xc);
                if (fc < (outside ? fr : fx[d])) {
                    x[d] = xc;
                    fx[d] = fc;
                } else {
                    for (std::size_t k = 1; k <= d; ++k) {
                        for (std::size_t i = 0; i < d; ++i) x[k][i] = x[0][i] + 0.5 * (x[k][i] - x[0][i]);
                        fx[k] = eval(x[k]);
                    }
                }
            }
        }
        const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
        if (fx[best] < res.value) {
            res.value = fx[best];
            res.x = x[best];
        }
        if (!(before - res.value > f_tol)) break;
    }
    return res;
}

// ---------------------------------------------------------------- ModelFitter

ModelFitter::ModelFitter(const Model& model, const Menu& menu, ProblemKind kind, OptConfig cfg)
    : model_(model), menu_(menu), kind_(kind), cfg_(cfg) {
    cfg_.validate();
    width_ = menu_.size() * (kind_ == ProblemKind::ConditionalDistribution ? 3 : 1);
    if (model_.is_unrestricted()) return;

    const auto& specs = model_.params();
    const std::size_t d = specs.size();
    std::vector<double> naive_unit;
    for (const auto& s : specs) naive_unit.push_back(s.to_unit(s.naive));
    unit_points_.push_back(naive_unit);

    const auto g = static_cast<std::size_t>(cfg_.grid_points);
    if (d == 1) {
        for (std::size_t k = 0; k <= g; ++k) unit_points_.push_back({static_cast<double>(k) / static_cast<double>(g)});
    } else if (d == 2) {
        for (std::size_t a = 0; a <= g; ++a)
            for (std::size_t b = 0; b <= g; ++b)
                unit_points_.push_back(
                    {static_cast<double>(a) / static_cast<double>(g), static_cast<double>(b) / static_cast<double>(g)});
    } else if (d >= 3) {
        const std::size_t n = 10 * g;
        Rng rng = make_rng(cfg_.seed, 0, 0x1a7u);
        std::vector<std::vector<double>> cols(d, std::vector<double>(n));
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng() % k]);
            for (std::size_t k = 0; k < n; ++k)
                cols[j][k] = (static_cast<double>(perm[k]) + uniform01(rng)) / static_cast<double>(n);
        }
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> p(d);
            for (std::size_t j = 0; j < d; ++j) p[j] = cols[j][k];
            unit_points_.push_back(std::move(p));
        }
    }

    cached_.assign(unit_points_.size() * width_, 0.0);
    parallel_for(unit_points_.size(), [&](std::size_t k) {
        const auto flat = flatten(model_.predict(to_theta(unit_points_[k]), menu_));
        std::copy(flat.begin(), flat.end(), cached_.begin() + static_cast<std::ptrdiff_t>(k * width_));
    });
}

std::vector<double> ModelFitter::flatten(const Mapping& prediction) const {
    std::vector<double> out;
    out.reserve(width_);
    if (kind_ == ProblemKind::ConditionalDistribution) {
        for (const auto& p : prediction.distribution_values())
            for (double q : p) out.push_back(safe_log(q));
    } else {
        out = prediction.scalar_values();
    }
    if (out.size() != width_) throw Error(ErrorCode::InvalidInput, "prediction size does not match menu");
    return out;
}

std::vector<double> ModelFitter::to_theta(std::span<const double> unit) const {
    const auto& specs = model_.params();
    // The first candidate is the naive point; map it back exactly so that the
    // naive mapping is reproduced bit for bit.
    if (!unit_points_.empty() && std::equal(unit.begin(), unit.end(), unit_points_[0].begin(), unit_points_[0].end()))
        return model_.naive_params();
    std::vector<double> theta(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) theta[i] = specs[i].from_unit(unit[i]);
    return theta;
}

FitResult ModelFitter::minimize(const Objective& objective) const {
    const std::size_t d = model_.dimension();
    const std::size_t n = unit_points_.size();
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double v = objective(std::span<const double>(cached_.data() + k * width_, width_));
        values[k] = std::isnan(v) ? kInf : v;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return unit_points_[a] < unit_points_[b];
    });
    if (n == 0 || !std::isfinite(values[order[0]]))
        throw Error(ErrorCode::NonFinite, "objective is non-finite at every start point");

    std::vector<double> best_unit = unit_points_[order[0]];
    double best_value = values[order[0]];

    if (d > 0) {
        auto f = [&](std::span<const double> u) { return objective(flatten(model_.predict(to_theta(u), menu_))); };
        const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(cfg_.n_starts), n);
        for (std::size_t s = 0; s < starts; ++s) {
            const std::size_t k = order[s];
            if (!std::isfinite(values[k])) break;
            const auto r = nelder_mead_unit_box(f, unit_points_[k], 0.05, cfg_.max_iters, cfg_.x_tol, cfg_.f_tol);
            if (r.value < best_value) {
                best_value = r.value;
                best_unit = r.x;
            }
        }
    }

    FitResult out;
    out.theta = to_theta(best_unit);
    out.prediction = model_.predict(out.theta, menu_);
    out.value = best_value;
    return out;
}

FitResult ModelFitter::fit_to_mapping(const Mapping& target) const {
    validate_mapping(target, menu_.size(), kind_);
    if (model_.is_unrestricted()) return {{}, 0.0, target};

    const auto& w = menu_.weights();
    Objective objective;
    switch (kind_) {
        case ProblemKind::ConditionalMean: {
            const auto& t = target.scalar_values();
            objective = [&w, &t](std::span<const double> p) {
                double s = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const double e = t[i] - p[i];
                    s += w[i] * e * e;
                }
                return s;
            };
            break;
        }
        case ProblemKind::ConditionalMedian: {
            const auto& t = target.scalar_values();
            objective = [&w, &t](std::span<const double> p) {
                double s = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) s += w[i] * std::abs(t[i] - p[i]);
                return s;
            };
            break;
        }
        case ProblemKind::ConditionalDistribution: {
            const auto& t = target.distribution_values();
            double entropy_term = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i)
                for (double q : t[i])
                    if (q > 0.0) entropy_term += w[i] * q * std::log(q);
            objective = [&w, &t, entropy_term](std::span<const double> logp) {
                double s = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    double cross = 0.0;
                    for (std::size_t a = 0; a < 3; ++a) {
                        const double q = t[i][a];
                        if (q <= 0.0) continue;
                        if (logp[3 * i + a] == -kInf) return kInf;
                        cross += q * logp[3 * i + a];
                    }
                    s += w[i] * cross;
                }
                return entropy_term - s;
            };
            break;
        }
    }
    FitResult r = minimize(objective);
    r.value = discrepancy(kind_, target, r.prediction, w);
    return r;
}

FitResult ModelFitter::fit_to_data(const ItemStats& train) const {
    if (train.kind != kind_) throw Error(ErrorCode::DomainMismatch, "training statistics were built for another kind");
    if (train.count.size() != menu_.size())
        throw Error(ErrorCode::InvalidInput, "training data and menu disagree in size");
    if (train.total <= 0.0) throw Error(ErrorCode::InsufficientData, "empty training set");
    if (model_.is_unrestricted()) {
        Mapping f = fit_unrestricted(train, cfg_.smoothing);
        const double e = empirical_error(f, train);
        return {{}, e, std::move(f)};
    }
    Objective objective;
    switch (kind_) {
        case ProblemKind::ConditionalMean: {
            const double ss = std::accumulate(train.ss.begin(), train.ss.end(), 0.0);
            objective = [&train, ss](std::span<const double> p) {
                double s = ss;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    const double gap = train.mean[i] - p[i];
                    s += train.count[i] * gap * gap;
                }
                return s / train.total;
            };
            break;
        }
        case ProblemKind::ConditionalDistribution: {
            objective = [&train](std::span<const double> logp) {
                double s = 0.0;
                for (std::size_t i = 0; i < train.count.size(); ++i)
                    for (std::size_t a = 0; a < 3; ++a) {
                        const double c = train.action_count[i][a];
                        if (c == 0.0) continue;
                        if (logp[3 * i + a] == -kInf) return kInf;
                        s -= c * logp[3 * i + a];
                    }
                return s / train.total;
            };
            break;
        }
        case ProblemKind::ConditionalMedian: {
            objective = [&train](std::span<const double> p) {
                return empirical_error(Mapping::scalars(std::vector<double>(p.begin(), p.end())), train);
            };
            break;
        }
    }
    try {
        return minimize(objective);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NonFinite)
            throw Error(ErrorCode::ZeroLikelihood, "every candidate assigns zero probability to an observed action");
        throw;
    }
}

FitResult fit_model_to_mapping(const Model& model, const Mapping& target, ProblemKind kind, const Menu& menu,
                               const OptConfig& cfg) {
    return ModelFitter(model, menu, kind, cfg).fit_to_mapping(target);
}

FitResult fit_model_to_data(const Model& model, const Menu& menu, const Dataset& train, ProblemKind kind,
                            const OptConfig& cfg) {
    train.validate(kind);
    return ModelFitter(model, menu, kind, cfg).fit_to_data(summarize(train, kind));
}

// ---------------------------------------------------------------- unrestricted

namespace {

double median_of_sorted(const std::vector<double>& v) {
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Mapping fit_unrestricted(const ItemStats& train, double smoothing) {
    if (train.total <= 0.0) throw Error(ErrorCode::InsufficientData, "empty training set");
    const std::size_t n = train.count.size();
    switch (train.kind) {
        case ProblemKind::ConditionalMean: {
            double pooled = 0.0;
            for (std::size_t i = 0; i < n; ++i) pooled += train.count[i] * train.mean[i];
            pooled /= train.total;
            std::vector<double> out(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = train.count[i] > 0.0 ? train.mean[i] : pooled;
            return Mapping::scalars(std::move(out));
        }
        case ProblemKind::ConditionalDistribution: {
            std::vector<Triple> out(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double denom = train.count[i] + 3.0 * smoothing;
                for (std::size_t a = 0; a < 3; ++a)
                    out[i][a] = denom > 0.0 ? (train.action_count[i][a] + smoothing) / denom : 1.0 / 3.0;
            }
            return Mapping::distributions(std::move(out));
        }
        case ProblemKind::ConditionalMedian: {
            std::vector<double> all;
            for (const auto& v : train.sorted_outcomes) all.insert(all.end(), v.begin(), v.end());
            std::sort(all.begin(), all.end());
            const double pooled = median_of_sorted(all);
            std::vector<double> out(n);
            for (std::size_t i = 0; i < n; ++i)
                out[i] = train.sorted_outcomes[i].empty() ? pooled : median_of_sorted(train.sorted_outcomes[i]);
            return Mapping::scalars(std::move(out));
        }
    }
    return {};
}

Mapping fit_unrestricted(const Dataset& train, ProblemKind kind, double smoothing) {
    train.validate(kind);
    return fit_unrestricted(summarize(train, kind), smoothing);
}

}  // namespace restrictlab
