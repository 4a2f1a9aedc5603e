#include "restrictlab/restrict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "restrictlab/error.hpp"
#include "restrictlab/parallel.hpp"

namespace restrictlab {

namespace {

constexpr double kNestingSlack = 1e-6;

}  // namespace

ProblemKind natural_kind(const Menu& menu) {
    return menu.all_of<Game3x3>() ? ProblemKind::ConditionalDistribution : ProblemKind::ConditionalMean;
}

MuSpec natural_mu(const Menu& menu) {
    MuSpec spec;
    spec.kind = menu.all_of<Game3x3>() ? MuKind::Dominance : MuKind::UniformFosd;
    return spec;
}

double f_discrepancy(const ModelFitter& fitter, const Mapping& naive, const Mapping& target, double* naive_discrepancy,
                     double* model_discrepancy) {
    const auto& w = fitter.menu().weights();
    const double denom = discrepancy(fitter.kind(), target, naive, w);
    if (naive_discrepancy) *naive_discrepancy = denom;
    if (!(denom > 0.0)) throw Error(ErrorCode::DegenerateTarget, "target coincides with the naive mapping");
    const double num = fitter.fit_to_mapping(target).value;
    if (model_discrepancy) *model_discrepancy = num;
    const double ratio = num / denom;
    if (!std::isfinite(ratio)) throw Error(ErrorCode::NonFinite, "f-discrepancy is not finite");
    if (ratio > 1.0 + kNestingSlack)
        throw Error(ErrorCode::NestingViolation,
                    "model fits worse than the naive mapping (ratio " + std::to_string(ratio) + ")");
    return std::clamp(ratio, 0.0, 1.0);
}

double f_discrepancy(const Model& model, const Mapping& naive, const Mapping& target, ProblemKind kind,
                     const Menu& menu, const OptConfig& cfg) {
    return f_discrepancy(ModelFitter(model, menu, kind, cfg), naive, target);
}

double normal_quantile_two_sided(double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidInput, "level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - level / 2.0);
}

void summarize_deltas(RestrictReport& report) {
    const auto& d = report.deltas;
    if (d.size() < 2) throw Error(ErrorCode::InvalidInput, "need at least two deltas");
    const double m = static_cast<double>(d.size());
    report.r_hat = std::accumulate(d.begin(), d.end(), 0.0) / m;
    double ss = 0.0;
    for (double x : d) ss += (x - report.r_hat) * (x - report.r_hat);
    report.sigma_hat = std::sqrt(ss / m);
    report.degenerate = std::all_of(d.begin(), d.end(), [&](double x) { return x == d.front(); });
    if (report.degenerate) {
        report.ci.reset();
        return;
    }
    const double half = normal_quantile_two_sided(report.level) * report.sigma_hat / std::sqrt(m);
    report.ci = Interval{report.r_hat - half, report.r_hat + half};
}

RestrictReport estimate_restrictiveness(const ModelFitter& fitter, const MuSpec& mu, std::size_t M,
                                        std::uint64_t seed, double level) {
    if (M < 2) throw Error(ErrorCode::InvalidInput, "M must be at least 2");
    normal_quantile_two_sided(level);
    const Menu& menu = fitter.menu();
    const Mapping naive = naive_mapping(menu);

    RestrictReport report;
    report.model_id = fitter.model().id();
    report.mu_spec = mu.to_string();
    report.kind = fitter.kind();
    report.M = M;
    report.seed = seed;
    report.level = level;
    report.deltas.assign(M, 0.0);
    report.naive_discrepancies.assign(M, 0.0);
    report.model_discrepancies.assign(M, 0.0);

    const auto targets = sample_mappings(menu, mu, M, seed);
    parallel_for(M, [&](std::size_t m) {
        report.deltas[m] = f_discrepancy(fitter, naive, targets[m], &report.naive_discrepancies[m],
                                         &report.model_discrepancies[m]);
    });
    summarize_deltas(report);
    return report;
}

RestrictReport estimate_restrictiveness(const Model& model, const Menu& menu, const MuSpec& mu, std::size_t M,
                                        std::uint64_t seed, double level, const OptConfig& cfg) {
    const ModelFitter fitter(model, menu, natural_kind(menu), cfg);
    return estimate_restrictiveness(fitter, mu, M, seed, level);
}

SweepResult sensitivity_sweep(const Model& model, const Menu& menu, std::size_t n_distributions, std::uint64_t seed,
                              std::size_t M, const OptConfig& cfg) {
    if (n_distributions < 1 || M < 1) throw Error(ErrorCode::InvalidInput, "need at least one distribution and draw");
    const ModelFitter fitter(model, menu, natural_kind(menu), cfg);
    const Mapping naive = naive_mapping(menu);
    SweepResult out;
    out.ab.resize(n_distributions);
    out.r.assign(n_distributions, 0.0);
    for (std::size_t k = 0; k < n_distributions; ++k) {
        Rng rng = make_rng(seed, k, 0xbe7au);
        const double a = uniform(rng, 0.9, 1.1);
        out.ab[k] = {a, uniform(rng, 0.9, 1.1)};
    }
    std::vector<double> deltas(n_distributions * M);
    parallel_for(deltas.size(), [&](std::size_t job) {
        const std::size_t k = job / M;
        MuSpec mu;
        mu.kind = MuKind::BetaFosd;
        mu.a = out.ab[k].first;
        mu.b = out.ab[k].second;
        const std::uint64_t draw_seed = substream_seed(seed, k, 0x5eedu);
        Rng rng = make_rng(draw_seed, job % M);
        const Mapping target = sample_ce_mapping(menu, mu, rng);
        deltas[job] = f_discrepancy(fitter, naive, target);
    });
    for (std::size_t job = 0; job < deltas.size(); ++job) out.r[job / M] += deltas[job] / static_cast<double>(M);
    out.mean = std::accumulate(out.r.begin(), out.r.end(), 0.0) / static_cast<double>(out.r.size());
    out.min = *std::min_element(out.r.begin(), out.r.end());
    out.max = *std::max_element(out.r.begin(), out.r.end());
    return out;
}

std::vector<HistogramBin> delta_histogram(const std::vector<double>& deltas, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::InvalidInput, "bin count must be positive");
    std::vector<HistogramBin> out(bins);
    const double width = 1.0 / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo = static_cast<double>(b) * width;
        out[b].hi = static_cast<double>(b + 1) * width;
    }
    for (double d : deltas) {
        auto b = static_cast<std::size_t>(std::floor(std::clamp(d, 0.0, 1.0) / width));
        ++out[std::min(b, bins - 1)].count;
    }
    return out;
}

double fstar_quantile(const std::vector<double>& deltas, double delta_fstar) {
    if (deltas.empty()) throw Error(ErrorCode::InvalidInput, "no deltas");
    const auto below = std::count_if(deltas.begin(), deltas.end(), [&](double d) { return d <= delta_fstar; });
    return static_cast<double>(below) / static_cast<double>(deltas.size());
}

std::pair<double, double> tv_bound_terms(const std::vector<double>& deltas, const std::vector<double>& mu,
                                         const std::vector<double>& nu) {
    if (mu.size() != deltas.size() || nu.size() != deltas.size())
        throw Error(ErrorCode::InvalidInput, "prior and delta lists differ in length");
    double gap = 0.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        gap += (mu[i] - nu[i]) * deltas[i];
        tv += std::abs(mu[i] - nu[i]);
    }
    return {std::abs(gap), tv};  // 2 d_TV = sum |mu - nu|
}

}  // namespace restrictlab
