#include "restrictlab/items.hpp"

#include <cmath>
#include <string>

#include "restrictlab/error.hpp"

namespace restrictlab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::DomainMismatch: return "DomainMismatch";
        case ErrorCode::ZeroLikelihood: return "ZeroLikelihood";
        case ErrorCode::InfiniteDivergence: return "InfiniteDivergence";
        case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DegenerateTarget: return "DegenerateTarget";
        case ErrorCode::NestingViolation: return "NestingViolation";
        case ErrorCode::NaiveNotWorse: return "NaiveNotWorse";
        case ErrorCode::InsufficientData: return "InsufficientData";
    }
    return "Unknown";
}

Atoms atoms_of(const BinaryLottery& l) {
    return {{l.z_high, l.p}, {l.z_low, 1.0 - l.p}};
}

Atoms atoms_of(const ThreeOutcomeLottery& l) {
    return {{l.z1, l.p1}, {l.z2, l.p2}, {l.z3, l.p3}};
}

double expected_value(const BinaryLottery& l) {
    return l.p * l.z_high + (1.0 - l.p) * l.z_low;
}

double expected_value(const ThreeOutcomeLottery& l) {
    return l.p1 * l.z1 + l.p2 * l.z2 + l.p3 * l.z3;
}

std::pair<double, double> prize_range(const BinaryLottery& l) {
    return {l.z_low, l.z_high};
}

std::pair<double, double> prize_range(const ThreeOutcomeLottery& l) {
    return {l.z3, l.z1};
}

namespace {

bool is_probability(double p) {
    return std::isfinite(p) && p >= 0.0 && p <= 1.0;
}

}  // namespace

void validate(const BinaryLottery& l) {
    if (!std::isfinite(l.z_high) || !std::isfinite(l.z_low))
        throw Error(ErrorCode::InvalidInput, "lottery prizes must be finite");
    if (!is_probability(l.p))
        throw Error(ErrorCode::InvalidInput, "lottery probability " + std::to_string(l.p) + " outside [0,1]");
    if (l.domain == Domain::Gain) {
        if (!(l.z_high > l.z_low && l.z_low >= 0.0))
            throw Error(ErrorCode::InvalidInput, "gain lottery requires z_high > z_low >= 0");
    } else {
        if (!(0.0 >= l.z_high && l.z_high >= l.z_low))
            throw Error(ErrorCode::InvalidInput, "loss lottery requires 0 >= z_high >= z_low");
    }
}

void validate(const ThreeOutcomeLottery& l) {
    if (!(l.z1 > l.z2 && l.z2 > l.z3 && l.z3 >= 0.0))
        throw Error(ErrorCode::InvalidInput, "three-outcome lottery requires z1 > z2 > z3 >= 0");
    if (!is_probability(l.p1) || !is_probability(l.p2) || !is_probability(l.p3))
        throw Error(ErrorCode::InvalidInput, "three-outcome lottery probability outside [0,1]");
    if (std::abs(l.p1 + l.p2 + l.p3 - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidInput, "three-outcome lottery probabilities must sum to 1");
}

void validate(const Game3x3& g) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!std::isfinite(g.row[i][j]) || !std::isfinite(g.col[i][j]))
                throw Error(ErrorCode::InvalidInput, "game payoffs must be finite");
}

}  // namespace restrictlab
