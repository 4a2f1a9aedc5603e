#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "restrictlab/core.hpp"
#include "restrictlab/fit.hpp"
#include "restrictlab/models.hpp"
#include "restrictlab/samplers.hpp"

namespace restrictlab {

/// Squared loss for certainty-equivalent menus, log loss for game menus.
ProblemKind natural_kind(const Menu& menu);

/// The permissible-set prior that goes with a menu when none is given.
MuSpec natural_mu(const Menu& menu);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct RestrictReport {
    std::string model_id;
    std::string mu_spec;
    ProblemKind kind = ProblemKind::ConditionalMean;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    double level = 0.05;
    std::vector<double> deltas;
    std::vector<double> naive_discrepancies;  // d(f_naive, f_m)
    std::vector<double> model_discrepancies;  // d(F_Theta, f_m)
    double r_hat = 0.0;
    double sigma_hat = 0.0;
    std::optional<Interval> ci;  // absent when every delta is identical
    bool degenerate = false;
};

/// delta_f = d(F_Theta, f) / d(f_naive, f). `naive_discrepancy` and
/// `model_discrepancy`, when given, receive the two terms.
double f_discrepancy(const ModelFitter& fitter, const Mapping& naive, const Mapping& target,
                     double* naive_discrepancy = nullptr, double* model_discrepancy = nullptr);
double f_discrepancy(const Model& model, const Mapping& naive, const Mapping& target, ProblemKind kind,
                     const Menu& menu, const OptConfig& cfg = {});

/// Mean, standard deviation with divisor M, and the normal-theory interval.
/// Fills r_hat, sigma_hat, ci and degenerate; leaves the rest untouched.
void summarize_deltas(RestrictReport& report);

/// z_{1 - level/2}.
double normal_quantile_two_sided(double level);

RestrictReport estimate_restrictiveness(const Model& model, const Menu& menu, const MuSpec& mu, std::size_t M,
                                        std::uint64_t seed, double level = 0.05, const OptConfig& cfg = {});
/// Same, reusing a fitter built for `menu` (and its cached grid).
RestrictReport estimate_restrictiveness(const ModelFitter& fitter, const MuSpec& mu, std::size_t M,
                                        std::uint64_t seed, double level = 0.05);

struct SweepResult {
    std::vector<std::pair<double, double>> ab;
    std::vector<double> r;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Restrictiveness under beta(a, b) priors with (a, b) uniform on
/// [0.9, 1.1]^2: the mean delta over M draws per pair. The default M = 1
/// pairs every generated mapping with its own (a, b).
SweepResult sensitivity_sweep(const Model& model, const Menu& menu, std::size_t n_distributions, std::uint64_t seed,
                              std::size_t M = 1, const OptConfig& cfg = {});

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

/// Equal-width bins on [0, 1]; 1 lands in the last bin.
std::vector<HistogramBin> delta_histogram(const std::vector<double>& deltas, std::size_t bins = 20);

/// Share of sampled deltas at or below `delta_fstar`.
double fstar_quantile(const std::vector<double>& deltas, double delta_fstar);

/// For priors mu, nu on a common finite list of mappings with deltas
/// `deltas`: |E_mu delta - E_nu delta| and 2 d_TV(mu, nu).
std::pair<double, double> tv_bound_terms(const std::vector<double>& deltas, const std::vector<double>& mu,
                                         const std::vector<double>& nu);

}  // namespace restrictlab
