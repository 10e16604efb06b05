#pragma once
// Spectroscopic unit conversions.
//
// Two layers: compile-time tagged measures (Measure<Unit::..., Scalar>) for
// library code, and a run-time tagged Quantity for user input such as the
// `convert` CLI command. Neither layer converts implicitly.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "vibronic/error.hpp"

namespace vibronic {

namespace constants {
/// GHz per cm^-1 (speed of light in cm/ns).
inline constexpr double ghz_per_wavenumber = 29.9792458;
/// Speed of light in nm*THz.
inline constexpr double c_nm_thz = 299792.458;
}  // namespace constants

enum class Unit {
    wavenumber_cm1,
    frequency_ghz,
    frequency_thz,
    wavelength_nm,
    time_ps,
    time_ns,
    power_nw,
    power_uw,
};

enum class Dimension { wavenumber_like, time, power };

template <Unit U, class Scalar = double>
struct Measure {
    Scalar value{};

    constexpr Measure() = default;
    constexpr explicit Measure(Scalar v) : value(v) {}

    friend constexpr bool operator==(const Measure&, const Measure&) = default;
    friend constexpr auto operator<=>(const Measure&, const Measure&) = default;
};

template <class Scalar = double> using Wavenumber = Measure<Unit::wavenumber_cm1, Scalar>;
template <class Scalar = double> using FrequencyGHz = Measure<Unit::frequency_ghz, Scalar>;
template <class Scalar = double> using FrequencyTHz = Measure<Unit::frequency_thz, Scalar>;
template <class Scalar = double> using WavelengthNm = Measure<Unit::wavelength_nm, Scalar>;
template <class Scalar = double> using TimePs = Measure<Unit::time_ps, Scalar>;
template <class Scalar = double> using TimeNs = Measure<Unit::time_ns, Scalar>;
template <class Scalar = double> using PowerNw = Measure<Unit::power_nw, Scalar>;
template <class Scalar = double> using PowerUw = Measure<Unit::power_uw, Scalar>;

namespace detail {
template <class Scalar>
void require_finite(Scalar v, const char* what) {
    using std::isfinite;
    if (!isfinite(v)) throw InputError(std::string(what) + ": non-finite input");
}
template <class Scalar>
void require_positive(Scalar v, const char* what) {
    require_finite(v, what);
    if (!(v > Scalar(0))) throw InputError(std::string(what) + ": input must be strictly positive");
}
}  // namespace detail

template <class Scalar>
FrequencyGHz<Scalar> wavenumber_to_frequency(Wavenumber<Scalar> w) {
    detail::require_finite(w.value, "wavenumber_to_frequency");
    return FrequencyGHz<Scalar>(w.value * Scalar(constants::ghz_per_wavenumber));
}

template <class Scalar>
Wavenumber<Scalar> frequency_to_wavenumber(FrequencyGHz<Scalar> f) {
    detail::require_finite(f.value, "frequency_to_wavenumber");
    return Wavenumber<Scalar>(f.value / Scalar(constants::ghz_per_wavenumber));
}

/// Lifetime-limited relation: a Lorentzian of FWHM dnu belongs to a level
/// of lifetime 1/(2*pi*dnu).
template <class Scalar>
TimePs<Scalar> linewidth_to_lifetime(FrequencyGHz<Scalar> fwhm) {
    detail::require_positive(fwhm.value, "linewidth_to_lifetime");
    // 1/(2 pi GHz) = 1000/(2 pi) ps
    return TimePs<Scalar>(Scalar(1000) / (Scalar(2) * std::numbers::pi_v<Scalar> * fwhm.value));
}

template <class Scalar>
FrequencyGHz<Scalar> lifetime_to_linewidth(TimePs<Scalar> tau) {
    detail::require_positive(tau.value, "lifetime_to_linewidth");
    return FrequencyGHz<Scalar>(Scalar(1000) / (Scalar(2) * std::numbers::pi_v<Scalar> * tau.value));
}

template <class Scalar>
FrequencyGHz<Scalar> lifetime_to_linewidth(TimeNs<Scalar> tau) {
    detail::require_positive(tau.value, "lifetime_to_linewidth");
    return FrequencyGHz<Scalar>(Scalar(1) / (Scalar(2) * std::numbers::pi_v<Scalar> * tau.value));
}

template <class Scalar>
FrequencyTHz<Scalar> wavelength_to_frequency(WavelengthNm<Scalar> lambda) {
    detail::require_positive(lambda.value, "wavelength_to_frequency");
    return FrequencyTHz<Scalar>(Scalar(constants::c_nm_thz) / lambda.value);
}

template <class Scalar>
WavelengthNm<Scalar> frequency_to_wavelength(FrequencyTHz<Scalar> f) {
    detail::require_positive(f.value, "frequency_to_wavelength");
    return WavelengthNm<Scalar>(Scalar(constants::c_nm_thz) / f.value);
}

template <class Scalar>
TimePs<Scalar> to_ps(TimeNs<Scalar> t) {
    return TimePs<Scalar>(t.value * Scalar(1000));
}

template <class Scalar>
TimeNs<Scalar> to_ns(TimePs<Scalar> t) {
    return TimeNs<Scalar>(t.value / Scalar(1000));
}

// ---------------------------------------------------------------------------
// Run-time tagged quantities

struct Quantity {
    double value = 0.0;
    Unit unit = Unit::wavenumber_cm1;
};

/// How two dimensions are related when converting between them.
enum class Relation {
    direct,    ///< same physical quantity (cm^-1 <-> GHz <-> THz <-> nm, ns <-> ps, nW <-> uW)
    lifetime,  ///< linewidth FWHM <-> lifetime via dnu = 1/(2 pi T)
};

Dimension dimension_of(Unit unit) noexcept;
std::string_view unit_name(Unit unit) noexcept;
/// Accepts the canonical names (`frequency_GHz`, `time_ps`, ...) and a few ASCII aliases.
Unit parse_unit(std::string_view name);
Relation parse_relation(std::string_view name);

/// Converts `q` to `to`. Throws InputError for non-finite values, incompatible
/// dimensions, or non-positive inputs where the relation is reciprocal.
Quantity convert(const Quantity& q, Unit to, Relation relation = Relation::direct);

}  // namespace vibronic
