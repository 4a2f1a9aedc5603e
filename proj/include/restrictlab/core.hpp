#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "restrictlab/items.hpp"

namespace restrictlab {

/// Which statistic of Y|X is predicted, and therefore which loss is used.
enum class ProblemKind {
    ConditionalMean,          // squared loss, d_MSE
    ConditionalDistribution,  // negative log-likelihood, d_KL
    ConditionalMedian,        // absolute loss, d_abs taken as a primitive
};

/// Squared loss and log loss admit a discrepancy equal to the excess error;
/// absolute loss does not.
constexpr bool is_decomposable(ProblemKind kind) {
    return kind != ProblemKind::ConditionalMedian;
}

std::string_view to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(std::string_view name);

using Triple = std::array<double, 3>;

/// Finite feature set with known marginal weights.
class Menu {
public:
    Menu() = default;
    /// Empty `weights` means uniform.
    Menu(std::vector<std::string> ids, std::vector<FeatureItem> items,
         std::vector<double> weights = {});

    std::size_t size() const { return items_.size(); }
    const std::vector<FeatureItem>& items() const { return items_; }
    const FeatureItem& item(std::size_t i) const { return items_.at(i); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Same items, different marginal.
    Menu with_weights(std::vector<double> weights) const;

    template <class T>
    bool all_of() const {
        for (const auto& it : items_)
            if (!std::holds_alternative<T>(it)) return false;
        return !items_.empty();
    }

private:
    std::vector<std::string> ids_;
    std::vector<FeatureItem> items_;
    std::vector<double> weights_;
};

/// One prediction per menu item: a scalar (CE / median problems) or a
/// distribution over three actions.
class Mapping {
public:
    Mapping() = default;

    static Mapping scalars(std::vector<double> values);
    static Mapping distributions(std::vector<Triple> values);

    bool is_distribution() const { return std::holds_alternative<std::vector<Triple>>(values_); }
    std::size_t size() const;

    const std::vector<double>& scalar_values() const;
    const std::vector<Triple>& distribution_values() const;
    std::vector<double>& scalar_values();
    std::vector<Triple>& distribution_values();

    friend bool operator==(const Mapping&, const Mapping&) = default;

private:
    std::variant<std::vector<double>, std::vector<Triple>> values_;
};

/// For distribution problems `outcome` holds the 0-based action index.
struct Observation {
    std::size_t item = 0;
    double outcome = 0.0;
    std::string group;
};

struct Dataset {
    std::size_t menu_size = 0;
    std::vector<Observation> observations;

    std::size_t size() const { return observations.size(); }
    /// Throws InvalidInput on an empty dataset, bad item indices, or
    /// outcomes inconsistent with `kind`.
    void validate(ProblemKind kind) const;
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Per-item sufficient statistics of a set of observations. Squared loss needs
/// count, mean and centered sum of squares; log loss the action tallies;
/// absolute loss keeps the sorted outcomes with their prefix sums.
struct ItemStats {
    ProblemKind kind = ProblemKind::ConditionalMean;
    double total = 0.0;
    std::vector<double> count;
    std::vector<double> mean;
    std::vector<double> ss;
    std::vector<Triple> action_count;
    std::vector<std::vector<double>> sorted_outcomes;
    std::vector<std::vector<double>> prefix;  // prefix[i][k] = sum of first k sorted outcomes
};

ItemStats summarize(const Dataset& data, ProblemKind kind);
ItemStats summarize(const Dataset& data, ProblemKind kind, std::span<const std::size_t> rows);

bool is_valid_distribution(const Triple& p, double tol = 1e-9);
void validate_mapping(const Mapping& f, std::size_t menu_size, ProblemKind kind);

double pointwise_loss(ProblemKind kind, double prediction, double outcome);
double pointwise_loss(const Triple& prediction, int action);
double pointwise_loss(ProblemKind kind, const Mapping& f, const Observation& obs);

/// Mean loss of `f` over the observations.
double empirical_error(const Mapping& f, const Dataset& data, ProblemKind kind);
/// Same value computed from sufficient statistics.
double empirical_error(const Mapping& f, const ItemStats& stats);

/// d(f, g) under the menu marginal. For d_KL `f` is the reference
/// distribution: sum_x w(x) sum_y f(y|x) log(f(y|x) / g(y|x)).
double discrepancy(ProblemKind kind, const Mapping& f, const Mapping& g,
                   std::span<const double> weights);

/// Finitely supported joint law of (X, Y). `conditional[x]` lists
/// (y, P(y|x)) atoms; for distribution problems y is the action index.
struct DiscreteJoint {
    std::vector<double> marginal;
    std::vector<Atoms> conditional;
};

Mapping best_mapping(ProblemKind kind, const DiscreteJoint& p);
double expected_error(ProblemKind kind, const DiscreteJoint& p, const Mapping& f);

struct DecompositionCheck {
    double excess_error = 0.0;  // e_P(f) - e_P(f_P)
    double discrepancy = 0.0;   // d(f_P, f)
};

/// Both sides by exact enumeration over `p`.
DecompositionCheck check_decomposition(ProblemKind kind, const DiscreteJoint& p, const Mapping& f);

}  // namespace restrictlab
