#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "restrictlab/core.hpp"
#include "restrictlab/models.hpp"

namespace restrictlab {

struct OptConfig {
    int n_starts = 20;
    int max_iters = 500;  // per start
    double x_tol = 1e-6;  // on the unit-cube parameterization
    double f_tol = 1e-9;
    /// Per axis for one- and two-parameter models ((grid_points + 1)^d nested
    /// points); models with three or more parameters use a Latin hypercube of
    /// 10 * grid_points points.
    int grid_points = 200;
    std::uint64_t seed = 0x5eedULL;
    /// Pseudo-count per action for the unrestricted distribution fit.
    double smoothing = 0.5;

    void validate() const;
};

struct FitResult {
    std::vector<double> theta;
    double value = 0.0;  // minimized objective: d_star or empirical error
    Mapping prediction;
};

/// Minimizes either d(target, f_theta) or the empirical error of f_theta over
/// the model's parameter box. Predictions at the grid points do not depend on
/// the target, so they are computed once and shared across calls; a fitter is
/// safe to use from several threads.
class ModelFitter {
public:
    ModelFitter(const Model& model, const Menu& menu, ProblemKind kind, OptConfig cfg = {});

    FitResult fit_to_mapping(const Mapping& target) const;
    FitResult fit_to_data(const ItemStats& train) const;

    const Model& model() const { return model_; }
    const Menu& menu() const { return menu_; }
    ProblemKind kind() const { return kind_; }
    const OptConfig& config() const { return cfg_; }
    std::size_t candidate_count() const { return unit_points_.size(); }

private:
    // Objective on a flattened prediction: values (scalar kinds) or log
    // probabilities (distribution kind), 3 per item.
    using Objective = std::function<double(std::span<const double>)>;

    std::vector<double> flatten(const Mapping& prediction) const;
    std::vector<double> to_theta(std::span<const double> unit) const;
    FitResult minimize(const Objective& objective) const;

    const Model& model_;
    Menu menu_;
    ProblemKind kind_;
    OptConfig cfg_;
    std::size_t width_ = 0;
    std::vector<std::vector<double>> unit_points_;
    std::vector<double> cached_;  // candidate_count() x width_
};

/// d(F_Theta, target) and the minimizing parameter.
FitResult fit_model_to_mapping(const Model& model, const Mapping& target, ProblemKind kind, const Menu& menu,
                               const OptConfig& cfg = {});

FitResult fit_model_to_data(const Model& model, const Menu& menu, const Dataset& train, ProblemKind kind,
                            const OptConfig& cfg = {});

/// Best mapping with no model restriction: per-item sample means (squared
/// loss), medians (absolute loss), or add-`smoothing` action frequencies (log
/// loss). Items absent from the training data fall back to the pooled mean /
/// median, or to uniform play.
Mapping fit_unrestricted(const ItemStats& train, double smoothing = 0.5);
Mapping fit_unrestricted(const Dataset& train, ProblemKind kind, double smoothing = 0.5);

/// Bounded Nelder-Mead on [0,1]^d with projection onto the box. Exposed for
/// testing.
struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

SimplexResult nelder_mead_unit_box(const std::function<double(std::span<const double>)>& f,
                                   std::vector<double> start, double step, int max_iters, double x_tol,
                                   double f_tol);

}  // namespace restrictlab
