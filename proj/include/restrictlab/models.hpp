#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "restrictlab/core.hpp"

namespace restrictlab {

// ---------------------------------------------------------------- parameters

/// How a bounded parameter is laid onto the unit interval for grid search and
/// simplex refinement. Log1p spaces points geometrically above `pivot`, which
/// keeps resolution near a lower bound of zero.
enum class ParamScale { Linear, Log, Log1p };

struct ParamSpec {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    ParamScale scale = ParamScale::Linear;
    double naive = 0.0;
    double pivot = 1.0;  // Log1p only

    double to_unit(double value) const;
    double from_unit(double u) const;
};

// ---------------------------------------------------------------- CPT

/// Curvature, weighting curvature and elevation. `alpha` is the value
/// function exponent; on the loss domain it plays the role of beta.
struct CptParams {
    double alpha = 1.0;
    double gamma = 1.0;
    double eta = 1.0;
};

/// Probability weighting eta p^gamma / (eta p^gamma + (1-p)^gamma).
double cpt_weight(double p, double gamma, double eta);

/// Certainty equivalent in money: the value function is inverted after
/// weighting, so alpha = 1 gives the weighted mean of prizes.
double cpt_value(const CptParams& params, const BinaryLottery& lottery);
double cpt3_value(const CptParams& params, const ThreeOutcomeLottery& lottery);

double expected_value_naive(const FeatureItem& item);

// ---------------------------------------------------------------- games

inline constexpr int kDefaultLevelCap = 10;

/// Poisson(tau) pmf at 0..cap, not renormalized.
std::vector<double> poisson_weights(double tau, int cap);

Triple uniform_naive(const Game3x3& game);
Triple pchm_distribution(double tau, const Game3x3& game, int level_cap = kDefaultLevelCap);
Triple logit_level1_distribution(double lambda, const Game3x3& game);
Triple logit_pchm_distribution(double tau, double lambda, const Game3x3& game,
                               int level_cap = kDefaultLevelCap);

/// Row player's level-k play under logit PCHM for k = 0..level_cap.
std::vector<Triple> logit_pchm_levels(double tau, double lambda, const Game3x3& game, int level_cap);

/// Rescales all payoffs affinely onto [0, 10] (one transform for the whole
/// menu). Returns the multiplicative factor applied; 1 when the menu has no
/// payoff spread. Best responses and logit choice are invariant to the shift.
double normalize_payoffs(std::vector<Game3x3>& games);
Menu normalize_payoffs(const Menu& menu, double* scale = nullptr);

// ---------------------------------------------------------------- families

/// The naive benchmark: expected value for lotteries, uniform play for games.
Mapping naive_mapping(const Menu& menu);

/// A parametric family with a box-bounded parameter space that nests the
/// naive mapping at `naive_params()`.
class Model {
public:
    virtual ~Model() = default;

    virtual std::string id() const = 0;
    virtual const std::vector<ParamSpec>& params() const = 0;
    virtual Mapping predict(std::span<const double> theta, const Menu& menu) const = 0;

    /// The family of all mappings; fitters project onto it in closed form.
    virtual bool is_unrestricted() const { return false; }

    std::size_t dimension() const { return params().size(); }
    std::vector<double> naive_params() const;
    std::vector<double> clamp(std::span<const double> theta) const;
};

enum class CptFree : unsigned { Alpha = 1, Gamma = 2, Eta = 4 };

class CptModel final : public Model {
public:
    /// `free_mask` is a bitwise OR of CptFree; fixed parameters are pinned at 1.
    explicit CptModel(unsigned free_mask, std::string curvature_name = "alpha");

    std::string id() const override;
    const std::vector<ParamSpec>& params() const override { return specs_; }
    Mapping predict(std::span<const double> theta, const Menu& menu) const override;

    CptParams expand(std::span<const double> theta) const;
    unsigned free_mask() const { return mask_; }

private:
    unsigned mask_;
    std::string curvature_name_;
    std::vector<ParamSpec> specs_;
};

enum class GameModelId { Pchm, LogitLevel1, LogitPchm };

class GameModel final : public Model {
public:
    explicit GameModel(GameModelId which, int level_cap = kDefaultLevelCap);

    std::string id() const override;
    const std::vector<ParamSpec>& params() const override { return specs_; }
    Mapping predict(std::span<const double> theta, const Menu& menu) const override;

    GameModelId which() const { return which_; }

private:
    GameModelId which_;
    int level_cap_;
    std::vector<ParamSpec> specs_;
};

/// The naive mapping alone (no free parameters).
class NaiveModel final : public Model {
public:
    std::string id() const override { return "naive"; }
    const std::vector<ParamSpec>& params() const override { return specs_; }
    Mapping predict(std::span<const double> theta, const Menu& menu) const override;

private:
    std::vector<ParamSpec> specs_;
};

/// Every mapping. Its only "parameterized" member is the naive one; fitting
/// is done by projection in the fit module.
class UnrestrictedModel final : public Model {
public:
    std::string id() const override { return "unrestricted"; }
    const std::vector<ParamSpec>& params() const override { return specs_; }
    Mapping predict(std::span<const double> theta, const Menu& menu) const override;
    bool is_unrestricted() const override { return true; }

private:
    std::vector<ParamSpec> specs_;
};

/// Parses ids such as "cpt:alpha,gamma,eta", "cpt3:gamma,eta", "cpt:beta",
/// "pchm", "logit-level1", "logit-pchm", "naive", "unrestricted".
std::unique_ptr<Model> make_model(std::string_view id, int level_cap = kDefaultLevelCap);

}  // namespace restrictlab
