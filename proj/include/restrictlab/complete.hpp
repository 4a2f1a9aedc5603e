#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "restrictlab/core.hpp"
#include "restrictlab/fit.hpp"
#include "restrictlab/models.hpp"
#include "restrictlab/restrict.hpp"

namespace restrictlab {

/// Row indices of each fold: a seeded permutation cut into K contiguous
/// blocks whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t K, std::uint64_t seed);

struct CvResult {
    double cv = 0.0;                       // mean of the K fold errors
    std::vector<double> fold_errors;
    std::vector<double> losses;            // test loss of each observation, data order
    std::vector<Mapping> predictors;       // one per fold
    std::vector<std::vector<std::size_t>> folds;
};

/// The family is read off the model: UnrestrictedModel is fitted by
/// fit_unrestricted, a model without parameters is used as is, anything
/// else is fitted to each training complement.
CvResult kfold_cv(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind, std::size_t K,
                  std::uint64_t seed, const OptConfig& cfg = {});

struct CompleteReport {
    std::string model_id;
    ProblemKind kind = ProblemKind::ConditionalMean;
    double cv_model = 0.0;
    double cv_naive = 0.0;
    double cv_unrestricted = 0.0;
    double kappa_hat = 0.0;
    double sigma_hat = 0.0;
    Interval ci;
    double level = 0.05;
    std::size_t K = 0;
    std::size_t N = 0;
    std::uint64_t seed = 0;
    std::vector<double> fold_model;
    std::vector<double> fold_naive;
    std::vector<double> fold_unrestricted;
    std::vector<double> fold_delta_variance;  // per-fold variance of model minus unrestricted loss
};

/// (cv_naive - cv_model) / (cv_naive - cv_unrestricted).
double kappa_from_cv(double cv_naive, double cv_model, double cv_unrestricted);

CompleteReport estimate_completeness(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind,
                                     std::size_t K = 10, std::uint64_t seed = 0, double level = 0.05,
                                     const OptConfig& cfg = {});

struct AltFstarReport {
    double delta_hat = 0.0;
    double bootstrap_se = 0.0;
    std::size_t B = 0;
    std::uint64_t seed = 0;
    std::vector<double> bootstrap_deltas;
};

/// delta_{f*} with f* replaced by its per-item sample estimate (means,
/// medians or raw action frequencies); the standard error is the spread of
/// the same statistic over bootstrap resamples drawn within each menu item.
AltFstarReport alt_fstar_discrepancy(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind,
                                     std::size_t B = 200, std::uint64_t seed = 0, const OptConfig& cfg = {});

struct GroupResult {
    std::string group;
    std::size_t n = 0;
    std::optional<CompleteReport> report;
    std::string error;  // set when the group could not be evaluated
};

struct GroupCompleteness {
    std::vector<GroupResult> groups;  // sorted by group name
    double weighted_kappa = 0.0;      // over groups that succeeded, by observation count
};

GroupCompleteness group_completeness(const Model& model, const Menu& menu, const Dataset& data, ProblemKind kind,
                                     std::size_t K = 10, std::uint64_t seed = 0, double level = 0.05,
                                     const OptConfig& cfg = {});

}  // namespace restrictlab
