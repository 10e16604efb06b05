#include "vibronic/levels.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "vibronic/error.hpp"
#include "vibronic/units.hpp"

namespace vibronic {

std::string_view to_string(ElectronicState s) noexcept { return s == ElectronicState::S0 ? "S0" : "S1"; }

std::string_view to_string(LevelKind k) noexcept {
    switch (k) {
    case LevelKind::fundamental: return "fundamental";
    case LevelKind::overtone: return "overtone";
    case LevelKind::combination: return "combination";
    case LevelKind::satellite: return "satellite";
    case LevelKind::unassigned: return "unassigned";
    }
    return "unassigned";
}

LevelKind parse_level_kind(std::string_view name) {
    for (auto k : {LevelKind::fundamental, LevelKind::overtone, LevelKind::combination, LevelKind::satellite,
                   LevelKind::unassigned})
        if (to_string(k) == name) return k;
    throw InputError("unknown level kind '" + std::string(name) + "'");
}

double LevelScheme::zpl_linewidth_ghz() const {
    return lifetime_to_linewidth(TimeNs<>(t1_ns)).value;
}

double LevelScheme::decay_rate() const {
    if (!(t1_ns > 0)) throw InputError("t1 must be positive");
    return 1e9 / t1_ns;
}

const VibronicLevel* LevelScheme::find(std::string_view id) const noexcept {
    for (const auto& l : s0_levels)
        if (l.id == id) return &l;
    for (const auto& l : s1_levels)
        if (l.id == id) return &l;
    return nullptr;
}

VibronicLevel* LevelScheme::find(std::string_view id) noexcept {
    return const_cast<VibronicLevel*>(std::as_const(*this).find(id));
}

const VibronicLevel& LevelScheme::at(std::string_view id) const {
    if (const auto* l = find(id)) return *l;
    throw InputError("unknown level id '" + std::string(id) + "'");
}

std::vector<SchemeViolation> validate_scheme(const LevelScheme& scheme) {
    std::vector<SchemeViolation> out;
    if (!(scheme.t1_ns > 0) || !std::isfinite(scheme.t1_ns)) out.push_back({"", "t1 must be positive"});
    if (!(scheme.zpl_frequency_thz > 0) || !std::isfinite(scheme.zpl_frequency_thz))
        out.push_back({"", "zpl_frequency must be positive"});
    if (!(scheme.baseline_sideband_cross_section >= 0) || !std::isfinite(scheme.baseline_sideband_cross_section))
        out.push_back({"", "baseline_sideband_cross_section must be non-negative"});

    std::set<std::string> seen;
    auto check = [&](const VibronicLevel& l, ElectronicState expected) {
        if (l.id.empty()) out.push_back({l.id, "level id must not be empty"});
        if (l.id == kZplTarget) out.push_back({l.id, "level id is reserved for the 00ZPL"});
        if (!seen.insert(l.id).second) out.push_back({l.id, "duplicate level id"});
        if (l.state != expected) out.push_back({l.id, "level listed under the wrong electronic state"});
        if (!(l.wavenumber > 0) || !std::isfinite(l.wavenumber)) out.push_back({l.id, "wavenumber must be positive"});
        if (!(l.gamma_over_2pi > 0) || !std::isfinite(l.gamma_over_2pi))
            out.push_back({l.id, "gamma_over_2pi must be positive"});
        if (!(l.relative_fc >= 0 && l.relative_fc <= 1)) out.push_back({l.id, "relative_fc must lie in [0, 1]"});
    };
    for (const auto& l : scheme.s0_levels) check(l, ElectronicState::S0);
    for (const auto& l : scheme.s1_levels) check(l, ElectronicState::S1);
    return out;
}

double transition_linewidth(const LevelScheme& scheme, std::string_view level_id) {
    const double zpl = scheme.zpl_linewidth_ghz();
    if (level_id == kZplTarget) return zpl;
    const auto& level = scheme.at(level_id);
    if (!(level.gamma_over_2pi > 0))
        throw InputError("level '" + level.id + "' has a non-positive linewidth");
    return level.gamma_over_2pi + zpl;
}

int mode_count(int n_atoms, bool linear) {
    if (n_atoms < 2) throw InputError("mode_count: a molecule needs at least two atoms");
    return 3 * n_atoms - (linear ? 5 : 6);
}

}  // namespace vibronic
