#include "restrictlab/complete.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "restrictlab/error.hpp"
#include "restrictlab/parallel.hpp"

namespace restrictlab {

namespace {

constexpr std::uint64_t kFoldSalt = 0xf01du;
constexpr std::uint64_t kBootSalt = 0xb007u;

enum class Family { Model, Unrestricted, Fixed };

Family family_of(const Model& model) {
    if (model.is_unrestricted()) return Family::Unrestricted;
    return model.dimension() == 0 ? Family::Fixed : Family::Model;
}

double observation_loss(ProblemKind kind, const Mapping& f, const Dataset& data, std::size_t row) {
    try {
        return pointwise_loss(kind, f, data.observations[row]);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroLikelihood) throw;
        throw Error(ErrorCode::ZeroLikelihood, "observation " + std::to_string(row) + ": " + e.what());
    }
}

}  // namespace

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t K, std::uint64_t seed) {
    if (K < 2 || n < K) throw Error(ErrorCode::InsufficientData, "need N >= K >= 2 for K-fold cross-validation");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = make_rng(seed, 0, kFoldSalt);
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
    }
    std::vector<std::vector<std::size_t>> folds(K);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t size = n / K + (k < n % K ? 1 : 0);
        folds[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(folds[k].begin(), folds[k].end());
        pos += size;
    }
    return folds;
}

CvResult kfold_cv(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind, std::size_t K,
                  std::uint64_t seed, const OptConfig& cfg) {
    data.validate(kind);
    if (data.menu_size != menu.size()) throw Error(ErrorCode::InvalidInput, "dataset and menu disagree in size");
    CvResult out;
    // Folds are cut from a canonical ordering of the observations, so the
    // estimate does not depend on the order rows arrive in.
    std::vector<std::size_t> canonical(data.size());
    std::iota(canonical.begin(), canonical.end(), std::size_t{0});
    std::stable_sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
        const Observation& x = data.observations[a];
        const Observation& y = data.observations[b];
        return std::tie(x.item, x.outcome, x.group) < std::tie(y.item, y.outcome, y.group);
    });
    out.folds = make_folds(data.size(), K, seed);
    for (auto& fold : out.folds) {
        for (std::size_t& row : fold) row = canonical[row];
        std::sort(fold.begin(), fold.end());
    }
    out.fold_errors.assign(K, 0.0);
    out.losses.assign(data.size(), 0.0);
    out.predictors.resize(K);

    const Family family = family_of(model);
    std::optional<ModelFitter> fitter;
    if (family == Family::Model) fitter.emplace(model, menu, kind, cfg);

    parallel_for(K, [&](std::size_t k) {
        Mapping f;
        if (family == Family::Fixed) {
            f = model.predict({}, menu);
        } else {
            std::vector<std::size_t> train;
            train.reserve(data.size() - out.folds[k].size());
            for (std::size_t j = 0; j < K; ++j)
                if (j != k) train.insert(train.end(), out.folds[j].begin(), out.folds[j].end());
            const ItemStats stats = summarize(data, kind, train);
            f = family == Family::Unrestricted ? fit_unrestricted(stats, cfg.smoothing)
                                               : fitter->fit_to_data(stats).prediction;
        }
        double sum = 0.0;
        for (std::size_t row : out.folds[k]) {
            out.losses[row] = observation_loss(kind, f, data, row);
            sum += out.losses[row];
        }
        out.fold_errors[k] = sum / static_cast<double>(out.folds[k].size());
        out.predictors[k] = std::move(f);
    });
    out.cv = std::accumulate(out.fold_errors.begin(), out.fold_errors.end(), 0.0) / static_cast<double>(K);
    return out;
}

double kappa_from_cv(double cv_naive, double cv_model, double cv_unrestricted) {
    const double denom = cv_naive - cv_unrestricted;
    if (!(denom > 0.0))
        throw Error(ErrorCode::NaiveNotWorse, "the naive rule is not outperformed by the unrestricted fit");
    return (cv_naive - cv_model) / denom;
}

CompleteReport estimate_completeness(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind,
                                     std::size_t K, std::uint64_t seed, double level, const OptConfig& cfg) {
    const double z = normal_quantile_two_sided(level);
    const CvResult m = kfold_cv(model, menu, data, kind, K, seed, cfg);
    const CvResult u = kfold_cv(UnrestrictedModel(), menu, data, kind, K, seed, cfg);
    const CvResult n = kfold_cv(NaiveModel(), menu, data, kind, K, seed, cfg);

    CompleteReport r;
    r.model_id = model.id();
    r.kind = kind;
    r.cv_model = m.cv;
    r.cv_naive = n.cv;
    r.cv_unrestricted = u.cv;
    r.kappa_hat = kappa_from_cv(n.cv, m.cv, u.cv);
    r.level = level;
    r.K = K;
    r.N = data.size();
    r.seed = seed;
    r.fold_model = m.fold_errors;
    r.fold_naive = n.fold_errors;
    r.fold_unrestricted = u.fold_errors;

    double var_sum = 0.0;
    for (const auto& fold : m.folds) {
        double mean = 0.0;
        for (std::size_t row : fold) mean += m.losses[row] - u.losses[row];
        mean /= static_cast<double>(fold.size());
        double ss = 0.0;
        for (std::size_t row : fold) {
            const double dev = m.losses[row] - u.losses[row] - mean;
            ss += dev * dev;
        }
        const double var = fold.size() > 1 ? ss / static_cast<double>(fold.size() - 1) : 0.0;
        r.fold_delta_variance.push_back(var);
        var_sum += var;
    }
    const double denom = n.cv - u.cv;
    r.sigma_hat = std::sqrt(var_sum / static_cast<double>(K)) / denom;
    const double half = z * r.sigma_hat / std::sqrt(static_cast<double>(r.N));
    r.ci = {r.kappa_hat - half, r.kappa_hat + half};
    return r;
}

AltFstarReport alt_fstar_discrepancy(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind,
                                     std::size_t B, std::uint64_t seed, const OptConfig& cfg) {
    if (B < 100) throw Error(ErrorCode::InvalidInput, "bootstrap count must be at least 100");
    data.validate(kind);
    if (data.menu_size != menu.size()) throw Error(ErrorCode::InvalidInput, "dataset and menu disagree in size");
    const ModelFitter fitter(model, menu, kind, cfg);
    const Mapping naive = naive_mapping(menu);

    auto estimate = [&](const ItemStats& stats) {
        for (double c : stats.count)
            if (c == 0.0) throw Error(ErrorCode::InsufficientData, "some menu item has no observations");
        return f_discrepancy(fitter, naive, fit_unrestricted(stats, 0.0));
    };

    AltFstarReport out;
    out.B = B;
    out.seed = seed;
    out.delta_hat = estimate(summarize(data, kind));
    out.bootstrap_deltas.assign(B, 0.0);
    // Resampling is done within each menu item. The items are a fixed design,
    // and a plain resample of small data can leave an item with no rows.
    std::vector<std::vector<std::size_t>> by_item(menu.size());
    for (std::size_t i = 0; i < data.size(); ++i) by_item[data.observations[i].item].push_back(i);
    parallel_for(B, [&](std::size_t b) {
        Rng rng = make_rng(seed, b, kBootSalt);
        std::vector<std::size_t> rows;
        rows.reserve(data.size());
        for (const auto& pool : by_item) {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (std::size_t k = 0; k < pool.size(); ++k) rows.push_back(pool[pick(rng)]);
        }
        out.bootstrap_deltas[b] = estimate(summarize(data, kind, rows));
    });
    const double mean =
        std::accumulate(out.bootstrap_deltas.begin(), out.bootstrap_deltas.end(), 0.0) / static_cast<double>(B);
    double ss = 0.0;
    for (double d : out.bootstrap_deltas) ss += (d - mean) * (d - mean);
    out.bootstrap_se = std::sqrt(ss / static_cast<double>(B - 1));
    return out;
}

GroupCompleteness group_completeness(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind,
                                     std::size_t K, std::uint64_t seed, double level, const OptConfig& cfg) {
    std::map<std::string, std::vector<std::size_t>> rows;
    for (std::size_t i = 0; i < data.size(); ++i) rows[data.observations[i].group].push_back(i);

    GroupCompleteness out;
    double weight = 0.0;
    for (const auto& [name, idx] : rows) {
        GroupResult g;
        g.group = name;
        g.n = idx.size();
        try {
            g.report = estimate_completeness(model, menu, data.subset(idx), kind, K, seed, level, cfg);
            out.weighted_kappa += static_cast<double>(g.n) * g.report->kappa_hat;
            weight += static_cast<double>(g.n);
        } catch (const Error& e) {
            g.error = std::string(to_string(e.code())) + ": " + e.what();
        }
        out.groups.push_back(std::move(g));
    }
    out.weighted_kappa = weight > 0.0 ? out.weighted_kappa / weight : std::nan("");
    return out;
}

}  // namespace restrictlab
