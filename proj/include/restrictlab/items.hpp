#pragma once

#include <array>
#include <utility>
#include <variant>
#include <vector>

namespace restrictlab {

enum class Domain { Gain, Loss };

/// Two-prize lottery paying `z_high` with probability `p`, otherwise `z_low`.
struct BinaryLottery {
    double z_high = 0.0;
    double z_low = 0.0;
    double p = 0.0;
    Domain domain = Domain::Gain;

    friend bool operator==(const BinaryLottery&, const BinaryLottery&) = default;
};

/// Prizes ordered z1 > z2 > z3 >= 0.
struct ThreeOutcomeLottery {
    double z1 = 0.0, z2 = 0.0, z3 = 0.0;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;

    friend bool operator==(const ThreeOutcomeLottery&, const ThreeOutcomeLottery&) = default;
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Row player's payoff `row[i][j]` when row plays a_i and column plays a_j;
/// `col[i][j]` is the column player's payoff at the same cell.
struct Game3x3 {
    Matrix3 row{};
    Matrix3 col{};

    friend bool operator==(const Game3x3&, const Game3x3&) = default;
};

using FeatureItem = std::variant<BinaryLottery, ThreeOutcomeLottery, Game3x3>;

/// A discrete money lottery as (prize, probability) atoms.
using Atoms = std::vector<std::pair<double, double>>;

Atoms atoms_of(const BinaryLottery& l);
Atoms atoms_of(const ThreeOutcomeLottery& l);

/// Expected value; the naive certainty equivalent.
double expected_value(const BinaryLottery& l);
double expected_value(const ThreeOutcomeLottery& l);

/// [lowest prize, highest prize]; a certainty equivalent must lie inside it.
std::pair<double, double> prize_range(const BinaryLottery& l);
std::pair<double, double> prize_range(const ThreeOutcomeLottery& l);

void validate(const BinaryLottery& l);
void validate(const ThreeOutcomeLottery& l);
void validate(const Game3x3& g);

}  // namespace restrictlab
