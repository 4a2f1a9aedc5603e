#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "restrictlab/core.hpp"
#include "restrictlab/parallel.hpp"

namespace restrictlab {

// ---------------------------------------------------------------- FOSD

/// True iff `a` first-order stochastically dominates `b`: CDF_a <= CDF_b
/// everywhere and strictly below somewhere.
bool fosd_dominates(const Atoms& a, const Atoms& b);

/// Strict FOSD partial order over a menu of lotteries.
struct FosdOrder {
    std::size_t size = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (dominating, dominated)
    std::vector<std::vector<std::size_t>> dominates;         // dominates[i]: items i dominates
    std::vector<std::vector<std::size_t>> dominated_by;      // dominated_by[i]: items dominating i

    bool contains(std::size_t i, std::size_t j) const;
};

FosdOrder build_fosd_order(const Menu& menu);

// ---------------------------------------------------------------- mu

enum class MuKind { UniformFosd, RangeOnly, BetaFosd, Dominance };

/// How BetaFosd realizes "beta draws kept only if they satisfy FOSD". Gibbs
/// samples the same conditioned law coordinate by coordinate; Rejection
/// redraws whole mappings and is only practical on small menus.
enum class BetaMethod { Gibbs, Rejection };

struct MuSpec {
    MuKind kind = MuKind::UniformFosd;
    double a = 1.0;
    double b = 1.0;
    int burn_in = 500;
    int thinning = 50;
    BetaMethod beta_method = BetaMethod::Gibbs;

    /// "uniform-fosd", "range-only", "dominance", "beta-fosd:<a>,<b>".
    static MuSpec parse(std::string_view text);
    std::string to_string() const;
};

inline constexpr std::uint64_t kRejectionBudget = 1'000'000;

/// Draws certainty-equivalent tables from mu over the permissible set.
class CeSampler {
public:
    CeSampler(const Menu& menu, MuSpec spec);

    /// Independent draw: a fresh chain started at the expected values and run
    /// for `burn_in` sweeps (Gibbs kinds), or a direct draw otherwise.
    Mapping draw(Rng& rng) const;

    /// One chain: burn-in, then a draw every `thinning` sweeps.
    std::vector<Mapping> chain(std::size_t count, Rng& rng) const;

    /// Range constraint plus (unless RangeOnly) every FOSD pair.
    bool satisfies(const Mapping& f) const;

    const FosdOrder& order() const { return order_; }
    const MuSpec& spec() const { return spec_; }

private:
    void sweep(std::vector<double>& f, Rng& rng) const;
    double draw_coordinate(std::size_t i, double lo, double hi, Rng& rng) const;
    Mapping rejection_draw(Rng& rng) const;

    MuSpec spec_;
    FosdOrder order_;
    std::vector<double> low_, high_, start_;
};

Mapping sample_ce_mapping(const Menu& menu, const MuSpec& spec, Rng& rng);

// ---------------------------------------------------------------- games

enum class DominanceTag { StrictlyDominated, StrictlyDominant, Neither };
using DominanceTags = std::array<DominanceTag, 3>;

/// Pure-strategy strict dominance on the row player's payoffs.
DominanceTags classify_dominance(const Game3x3& game);

bool satisfies_dominance(const Triple& play, const DominanceTags& tags);

/// Uniform play distributions subject to the dominance bounds, independently
/// per game.
class PlaySampler {
public:
    explicit PlaySampler(const Menu& menu);

    Mapping draw(Rng& rng) const;
    bool satisfies(const Mapping& f) const;
    const std::vector<DominanceTags>& tags() const { return tags_; }

private:
    std::vector<DominanceTags> tags_;
};

Mapping sample_play_mapping(const Menu& menu, Rng& rng);

/// Uniform draw from the probability simplex (Dirichlet(1,1,1)).
Triple uniform_simplex(Rng& rng);

/// `count` independent draws, draw m using substream (seed, m). Output is
/// identical for any thread count.
std::vector<Mapping> sample_mappings(const Menu& menu, const MuSpec& spec, std::size_t count,
                                     std::uint64_t seed);

}  // namespace restrictlab
