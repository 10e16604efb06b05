#include "vibronic/units.hpp"

#include <array>
#include <utility>

namespace vibronic {

namespace {

struct UnitEntry {
    Unit unit;
    std::string_view name;
};

constexpr std::array<UnitEntry, 8> kUnitNames{{
    {Unit::wavenumber_cm1, "wavenumber_cm-1"},
    {Unit::frequency_ghz, "frequency_GHz"},
    {Unit::frequency_thz, "frequency_THz"},
    {Unit::wavelength_nm, "wavelength_nm"},
    {Unit::time_ps, "time_ps"},
    {Unit::time_ns, "time_ns"},
    {Unit::power_nw, "power_nW"},
    {Unit::power_uw, "power_uW"},
}};

constexpr std::array<std::pair<std::string_view, Unit>, 5> kAliases{{
    {"wavenumber_cm1", Unit::wavenumber_cm1},
    {"wavenumber_cm⁻¹", Unit::wavenumber_cm1},
    {"power_µW", Unit::power_uw},
    {"power_μW", Unit::power_uw},
    {"frequency_ghz", Unit::frequency_ghz},
}};

// Frequency-like quantities go through GHz.
double to_ghz(double value, Unit unit) {
    switch (unit) {
    case Unit::wavenumber_cm1: return value * constants::ghz_per_wavenumber;
    case Unit::frequency_ghz: return value;
    case Unit::frequency_thz: return value * 1000.0;
    case Unit::wavelength_nm:
        detail::require_positive(value, "wavelength");
        return constants::c_nm_thz / value * 1000.0;
    default: break;
    }
    throw InputError("not a frequency-like unit");
}

double from_ghz(double ghz, Unit unit) {
    switch (unit) {
    case Unit::wavenumber_cm1: return ghz / constants::ghz_per_wavenumber;
    case Unit::frequency_ghz: return ghz;
    case Unit::frequency_thz: return ghz / 1000.0;
    case Unit::wavelength_nm:
        detail::require_positive(ghz, "frequency for wavelength conversion");
        return constants::c_nm_thz / (ghz / 1000.0);
    default: break;
    }
    throw InputError("not a frequency-like unit");
}

double to_ps(double value, Unit unit) { return unit == Unit::time_ns ? value * 1000.0 : value; }
double from_ps(double ps, Unit unit) { return unit == Unit::time_ns ? ps / 1000.0 : ps; }
double to_nw(double value, Unit unit) { return unit == Unit::power_uw ? value * 1000.0 : value; }
double from_nw(double nw, Unit unit) { return unit == Unit::power_uw ? nw / 1000.0 : nw; }

}  // namespace

Dimension dimension_of(Unit unit) noexcept {
    switch (unit) {
    case Unit::time_ps:
    case Unit::time_ns: return Dimension::time;
    case Unit::power_nw:
    case Unit::power_uw: return Dimension::power;
    default: return Dimension::wavenumber_like;
    }
}

std::string_view unit_name(Unit unit) noexcept {
    for (const auto& e : kUnitNames)
        if (e.unit == unit) return e.name;
    return "?";
}

Unit parse_unit(std::string_view name) {
    for (const auto& e : kUnitNames)
        if (e.name == name) return e.unit;
    for (const auto& [alias, unit] : kAliases)
        if (alias == name) return unit;
    throw InputError("unknown unit '" + std::string(name) + "'");
}

Relation parse_relation(std::string_view name) {
    if (name == "direct") return Relation::direct;
    if (name == "lifetime") return Relation::lifetime;
    throw InputError("unknown relation '" + std::string(name) + "' (expected direct or lifetime)");
}

Quantity convert(const Quantity& q, Unit to, Relation relation) {
    detail::require_finite(q.value, "convert");
    const Dimension from_dim = dimension_of(q.unit);
    const Dimension to_dim = dimension_of(to);

    if (relation == Relation::direct) {
        if (from_dim != to_dim)
            throw InputError("cannot convert " + std::string(unit_name(q.unit)) + " to " +
                             std::string(unit_name(to)) + " without a relation");
        switch (from_dim) {
        case Dimension::wavenumber_like: return {from_ghz(to_ghz(q.value, q.unit), to), to};
        case Dimension::time: return {from_ps(to_ps(q.value, q.unit), to), to};
        case Dimension::power: return {from_nw(to_nw(q.value, q.unit), to), to};
        }
    }

    // lifetime relation: linewidth <-> lifetime
    if (q.unit == Unit::wavelength_nm || to == Unit::wavelength_nm)
        throw InputError("the lifetime relation does not apply to wavelengths");
    if (from_dim == Dimension::wavenumber_like && to_dim == Dimension::time) {
        const double tau_ps = linewidth_to_lifetime(FrequencyGHz<>(to_ghz(q.value, q.unit))).value;
        return {from_ps(tau_ps, to), to};
    }
    if (from_dim == Dimension::time && to_dim == Dimension::wavenumber_like) {
        const double fwhm = lifetime_to_linewidth(TimePs<>(to_ps(q.value, q.unit))).value;
        return {from_ghz(fwhm, to), to};
    }
    throw InputError("the lifetime relation converts between a linewidth and a lifetime only");
}

}  // namespace vibronic
