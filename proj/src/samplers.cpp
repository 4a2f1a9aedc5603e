#include "restrictlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "restrictlab/error.hpp"

namespace restrictlab {

// ---------------------------------------------------------------- FOSD

namespace {

double cdf_at(const Atoms& atoms, double t) {
    double c = 0.0;
    for (const auto& [z, p] : atoms)
        if (z <= t) c += p;
    return c;
}

Atoms lottery_atoms(const FeatureItem& item) {
    if (const auto* b = std::get_if<BinaryLottery>(&item)) return atoms_of(*b);
    if (const auto* t = std::get_if<ThreeOutcomeLottery>(&item)) return atoms_of(*t);
    throw Error(ErrorCode::DomainMismatch, "FOSD order requires a menu of lotteries");
}

std::pair<double, double> lottery_range(const FeatureItem& item) {
    if (const auto* b = std::get_if<BinaryLottery>(&item)) return prize_range(*b);
    if (const auto* t = std::get_if<ThreeOutcomeLottery>(&item)) return prize_range(*t);
    throw Error(ErrorCode::DomainMismatch, "certainty-equivalent sampling requires a menu of lotteries");
}

double lottery_ev(const FeatureItem& item) {
    if (const auto* b = std::get_if<BinaryLottery>(&item)) return expected_value(*b);
    return expected_value(std::get<ThreeOutcomeLottery>(item));
}

}  // namespace

bool fosd_dominates(const Atoms& a, const Atoms& b) {
    constexpr double eps = 1e-12;
    std::vector<double> support;
    for (const auto& [z, p] : a) support.push_back(z);
    for (const auto& [z, p] : b) support.push_back(z);
    std::sort(support.begin(), support.end());
    bool strict = false;
    for (double t : support) {
        const double fa = cdf_at(a, t);
        const double fb = cdf_at(b, t);
        if (fa > fb + eps) return false;
        if (fa < fb - eps) strict = true;
    }
    return strict;
}

bool FosdOrder::contains(std::size_t i, std::size_t j) const {
    return std::find(dominates.at(i).begin(), dominates.at(i).end(), j) != dominates.at(i).end();
}

FosdOrder build_fosd_order(const Menu& menu) {
    FosdOrder order;
    order.size = menu.size();
    order.dominates.assign(menu.size(), {});
    order.dominated_by.assign(menu.size(), {});
    std::vector<Atoms> atoms;
    atoms.reserve(menu.size());
    for (const auto& it : menu.items()) atoms.push_back(lottery_atoms(it));
    for (std::size_t i = 0; i < menu.size(); ++i)
        for (std::size_t j = 0; j < menu.size(); ++j)
            if (i != j && fosd_dominates(atoms[i], atoms[j])) {
                order.pairs.emplace_back(i, j);
                order.dominates[i].push_back(j);
                order.dominated_by[j].push_back(i);
            }
    return order;
}

// ---------------------------------------------------------------- MuSpec

MuSpec MuSpec::parse(std::string_view text) {
    MuSpec spec;
    if (text == "uniform-fosd") {
        spec.kind = MuKind::UniformFosd;
    } else if (text == "range-only") {
        spec.kind = MuKind::RangeOnly;
    } else if (text == "dominance") {
        spec.kind = MuKind::Dominance;
    } else if (text.starts_with("beta-fosd:")) {
        spec.kind = MuKind::BetaFosd;
        const std::string args(text.substr(10));
        const auto comma = args.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::InvalidInput, "beta-fosd needs '<a>,<b>'");
        try {
            spec.a = std::stod(args.substr(0, comma));
            spec.b = std::stod(args.substr(comma + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidInput, "beta-fosd parameters are not numbers: '" + args + "'");
        }
        if (!(spec.a > 0.0 && spec.b > 0.0)) throw Error(ErrorCode::InvalidInput, "beta parameters must be > 0");
    } else {
        throw Error(ErrorCode::InvalidInput, "unknown mu '" + std::string(text) + "'");
    }
    return spec;
}

std::string MuSpec::to_string() const {
    switch (kind) {
        case MuKind::UniformFosd: return "uniform-fosd";
        case MuKind::RangeOnly: return "range-only";
        case MuKind::Dominance: return "dominance";
        case MuKind::BetaFosd: {
            std::ostringstream os;
            os.precision(17);
            os << "beta-fosd:" << a << ',' << b;
            return os.str();
        }
    }
    return "unknown";
}

// ---------------------------------------------------------------- CeSampler

CeSampler::CeSampler(const Menu& menu, MuSpec spec) : spec_(spec) {
    if (spec_.kind == MuKind::Dominance)
        throw Error(ErrorCode::DomainMismatch, "dominance mu applies to games, not lotteries");
    if (spec_.burn_in < 0 || spec_.thinning < 1)
        throw Error(ErrorCode::InvalidInput, "burn-in must be >= 0 and thinning >= 1");
    if (!(spec_.a > 0.0 && spec_.b > 0.0)) throw Error(ErrorCode::InvalidInput, "beta parameters must be > 0");
    low_.reserve(menu.size());
    high_.reserve(menu.size());
    for (const auto& it : menu.items()) {
        const auto [lo, hi] = lottery_range(it);
        low_.push_back(lo);
        high_.push_back(hi);
        start_.push_back(lottery_ev(it));
    }
    if (spec_.kind != MuKind::RangeOnly) order_ = build_fosd_order(menu);
}

double CeSampler::draw_coordinate(std::size_t i, double lo, double hi, Rng& rng) const {
    if (spec_.kind != MuKind::BetaFosd || (spec_.a == 1.0 && spec_.b == 1.0))
        return std::clamp(uniform(rng, lo, hi), lo, hi);
    // Beta(a,b) on the prize range, truncated to [lo, hi], by inverse CDF.
    const double span = high_[i] - low_[i];
    const double t_lo = std::clamp((lo - low_[i]) / span, 0.0, 1.0);
    const double t_hi = std::clamp((hi - low_[i]) / span, 0.0, 1.0);
    const double c_lo = boost::math::ibeta(spec_.a, spec_.b, t_lo);
    const double c_hi = boost::math::ibeta(spec_.a, spec_.b, t_hi);
    double t = 0.0;
    if (c_hi - c_lo > 1e-300) {
        const double u = std::clamp(c_lo + (c_hi - c_lo) * uniform01(rng), 0.0, 1.0);
        t = boost::math::ibeta_inv(spec_.a, spec_.b, u);
    } else {
        t = uniform(rng, t_lo, t_hi);
    }
    return std::clamp(low_[i] + span * t, lo, hi);
}

void CeSampler::sweep(std::vector<double>& f, Rng& rng) const {
    for (std::size_t i = 0; i < f.size(); ++i) {
        double lo = low_[i];
        double hi = high_[i];
        for (std::size_t j : order_.dominates[i]) lo = std::max(lo, f[j]);
        for (std::size_t j : order_.dominated_by[i]) hi = std::min(hi, f[j]);
        f[i] = draw_coordinate(i, lo, hi, rng);
    }
}

Mapping CeSampler::rejection_draw(Rng& rng) const {
    std::gamma_distribution<double> ga(spec_.a, 1.0);
    std::gamma_distribution<double> gb(spec_.b, 1.0);
    std::vector<double> f(low_.size());
    for (std::uint64_t attempt = 0; attempt < kRejectionBudget; ++attempt) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double x = ga(rng);
            const double y = gb(rng);
            f[i] = low_[i] + (high_[i] - low_[i]) * (x / (x + y));
        }
        bool ok = true;
        for (const auto& [i, j] : order_.pairs)
            if (f[i] < f[j]) {
                ok = false;
                break;
            }
        if (ok) return Mapping::scalars(f);
    }
    throw Error(ErrorCode::RejectionBudgetExceeded,
                "beta-FOSD rejection failed " + std::to_string(kRejectionBudget) + " consecutive times");
}

Mapping CeSampler::draw(Rng& rng) const {
    if (spec_.kind == MuKind::RangeOnly) {
        std::vector<double> f(low_.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::clamp(uniform(rng, low_[i], high_[i]), low_[i], high_[i]);
        return Mapping::scalars(std::move(f));
    }
    if (spec_.kind == MuKind::BetaFosd && spec_.beta_method == BetaMethod::Rejection) return rejection_draw(rng);
    std::vector<double> f = start_;
    for (int s = 0; s < spec_.burn_in; ++s) sweep(f, rng);
    return Mapping::scalars(std::move(f));
}

std::vector<Mapping> CeSampler::chain(std::size_t count, Rng& rng) const {
    std::vector<Mapping> out;
    out.reserve(count);
    if (spec_.kind == MuKind::RangeOnly ||
        (spec_.kind == MuKind::BetaFosd && spec_.beta_method == BetaMethod::Rejection)) {
        for (std::size_t k = 0; k < count; ++k) out.push_back(draw(rng));
        return out;
    }
    std::vector<double> f = start_;
    for (int s = 0; s < spec_.burn_in; ++s) sweep(f, rng);
    for (std::size_t k = 0; k < count; ++k) {
        if (k > 0)
            for (int s = 0; s < spec_.thinning; ++s) sweep(f, rng);
        out.push_back(Mapping::scalars(f));
    }
    return out;
}

bool CeSampler::satisfies(const Mapping& f) const {
    const auto& v = f.scalar_values();
    if (v.size() != low_.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] >= low_[i] && v[i] <= high_[i])) return false;
    if (spec_.kind == MuKind::RangeOnly) return true;
    for (const auto& [i, j] : order_.pairs)
        if (v[i] < v[j]) return false;
    return true;
}

Mapping sample_ce_mapping(const Menu& menu, const MuSpec& spec, Rng& rng) {
    return CeSampler(menu, spec).draw(rng);
}

// ---------------------------------------------------------------- games

DominanceTags classify_dominance(const Game3x3& g) {
    auto beats = [&](std::size_t a, std::size_t b) {
        for (std::size_t j = 0; j < 3; ++j)
            if (!(g.row[a][j] > g.row[b][j])) return false;
        return true;
    };
    DominanceTags tags{DominanceTag::Neither, DominanceTag::Neither, DominanceTag::Neither};
    for (std::size_t i = 0; i < 3; ++i) {
        bool dominated = false;
        bool dominant = true;
        for (std::size_t k = 0; k < 3; ++k) {
            if (k == i) continue;
            dominated = dominated || beats(k, i);
            dominant = dominant && beats(i, k);
        }
        if (dominant)
            tags[i] = DominanceTag::StrictlyDominant;
        else if (dominated)
            tags[i] = DominanceTag::StrictlyDominated;
    }
    return tags;
}

bool satisfies_dominance(const Triple& play, const DominanceTags& tags) {
    constexpr double third = 1.0 / 3.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (tags[i] == DominanceTag::StrictlyDominated && play[i] > third) return false;
        if (tags[i] == DominanceTag::StrictlyDominant && play[i] < third) return false;
    }
    return true;
}

Triple uniform_simplex(Rng& rng) {
    Triple e{};
    double s = 0.0;
    for (auto& x : e) {
        x = -std::log1p(-uniform01(rng));
        s += x;
    }
    for (auto& x : e) x /= s;
    return e;
}

PlaySampler::PlaySampler(const Menu& menu) {
    tags_.reserve(menu.size());
    for (const auto& it : menu.items()) {
        const auto* g = std::get_if<Game3x3>(&it);
        if (!g) throw Error(ErrorCode::DomainMismatch, "play sampling requires a menu of games");
        tags_.push_back(classify_dominance(*g));
    }
}

Mapping PlaySampler::draw(Rng& rng) const {
    std::vector<Triple> out;
    out.reserve(tags_.size());
    for (const auto& tags : tags_) {
        std::uint64_t attempt = 0;
        Triple p = uniform_simplex(rng);
        while (!satisfies_dominance(p, tags)) {
            if (++attempt >= kRejectionBudget)
                throw Error(ErrorCode::RejectionBudgetExceeded, "dominance-constrained play rejection budget exhausted");
            p = uniform_simplex(rng);
        }
        out.push_back(p);
    }
    return Mapping::distributions(std::move(out));
}

bool PlaySampler::satisfies(const Mapping& f) const {
    const auto& v = f.distribution_values();
    if (v.size() != tags_.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!is_valid_distribution(v[i]) || !satisfies_dominance(v[i], tags_[i])) return false;
    return true;
}

Mapping sample_play_mapping(const Menu& menu, Rng& rng) {
    return PlaySampler(menu).draw(rng);
}

std::vector<Mapping> sample_mappings(const Menu& menu, const MuSpec& spec, std::size_t count, std::uint64_t seed) {
    std::vector<Mapping> out(count);
    if (spec.kind == MuKind::Dominance) {
        const PlaySampler sampler(menu);
        parallel_for(count, [&](std::size_t m) {
            Rng rng = make_rng(seed, m);
            out[m] = sampler.draw(rng);
        });
    } else {
        const CeSampler sampler(menu, spec);
        parallel_for(count, [&](std::size_t m) {
            Rng rng = make_rng(seed, m);
            out[m] = sampler.draw(rng);
        });
    }
    return out;
}

}  // namespace restrictlab
