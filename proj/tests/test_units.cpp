#include <cmath>
#include <numbers>

#include "doctest.h"
#include "vibronic/units.hpp"

using namespace vibronic;

TEST_CASE("wavenumber and frequency") {
    CHECK(wavenumber_to_frequency(Wavenumber<>(290.0)).value == doctest::Approx(8694.0).epsilon(1e-5));
    CHECK(wavenumber_to_frequency(Wavenumber<>(1.0)).value == 29.9792458);
    CHECK(frequency_to_wavenumber(FrequencyGHz<>(29.9792458)).value == doctest::Approx(1.0));
    CHECK(wavenumber_to_frequency(Wavenumber<>(0.0)).value == 0.0);
    CHECK_THROWS_AS(wavenumber_to_frequency(Wavenumber<>(NAN)), InputError);
}

TEST_CASE("round trips stay within a few ulps") {
    for (double w = 0.5; w < 5000; w *= 1.37) {
        const double back = frequency_to_wavenumber(wavenumber_to_frequency(Wavenumber<>(w))).value;
        CHECK(std::abs(back - w) <= 4 * std::numeric_limits<double>::epsilon() * w);
        const double nm = frequency_to_wavelength(wavelength_to_frequency(WavelengthNm<>(w))).value;
        CHECK(std::abs(nm - w) <= 4 * std::numeric_limits<double>::epsilon() * w);
    }
}

TEST_CASE("lifetime and linewidth") {
    CHECK(linewidth_to_lifetime(FrequencyGHz<>(10.9)).value == doctest::Approx(14.6).epsilon(1e-3));
    CHECK(linewidth_to_lifetime(FrequencyGHz<>(2.0)).value == doctest::Approx(79.577).epsilon(1e-4));
    CHECK(lifetime_to_linewidth(TimeNs<>(7.0)).value == doctest::Approx(0.022736).epsilon(1e-4));
    CHECK(linewidth_to_lifetime(FrequencyGHz<>(0.0227364)).value == doctest::Approx(7000.0).epsilon(1e-5));
    CHECK_THROWS_AS(linewidth_to_lifetime(FrequencyGHz<>(0.0)), InputError);
    CHECK_THROWS_AS(linewidth_to_lifetime(FrequencyGHz<>(-1.0)), InputError);
    CHECK_THROWS_AS(lifetime_to_linewidth(TimePs<>(0.0)), InputError);

    for (double f = 0.01; f < 1000; f *= 1.9) {
        const double tau_s = linewidth_to_lifetime(FrequencyGHz<>(f)).value * 1e-12;
        CHECK(f * 1e9 * tau_s == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-14));
        CHECK(lifetime_to_linewidth(linewidth_to_lifetime(FrequencyGHz<>(f))).value == doctest::Approx(f).epsilon(1e-14));
    }
}

TEST_CASE("float scalars work too") {
    const auto t = linewidth_to_lifetime(FrequencyGHz<float>(2.0f));
    static_assert(std::is_same_v<decltype(t.value), float>);
    CHECK(t.value == doctest::Approx(79.577f).epsilon(1e-4));
}

TEST_CASE("run-time conversions") {
    CHECK(convert({2.0, Unit::frequency_ghz}, Unit::time_ps, Relation::lifetime).value ==
          doctest::Approx(79.577).epsilon(1e-4));
    CHECK(convert({7.0, Unit::time_ns}, Unit::frequency_ghz, Relation::lifetime).value ==
          doctest::Approx(0.022736).epsilon(1e-4));
    CHECK(convert({290.0, Unit::wavenumber_cm1}, Unit::frequency_thz).value == doctest::Approx(8.694).epsilon(1e-4));
    CHECK(convert({589.0, Unit::wavelength_nm}, Unit::frequency_thz).value ==
          doctest::Approx(299792.458 / 589.0));
    CHECK(convert({18.6, Unit::power_uw}, Unit::power_nw).value == doctest::Approx(18600.0));
    CHECK(convert({7.0, Unit::time_ns}, Unit::time_ps).value == doctest::Approx(7000.0));

    CHECK_THROWS_AS(convert({1.0, Unit::time_ps}, Unit::power_nw), InputError);
    CHECK_THROWS_AS(convert({1.0, Unit::frequency_ghz}, Unit::time_ps), InputError);
    CHECK_THROWS_AS(convert({500.0, Unit::wavelength_nm}, Unit::time_ps, Relation::lifetime), InputError);
    CHECK_THROWS_AS(convert({INFINITY, Unit::frequency_ghz}, Unit::wavenumber_cm1), InputError);
}

TEST_CASE("unit names parse back") {
    for (auto u : {Unit::wavenumber_cm1, Unit::frequency_ghz, Unit::frequency_thz, Unit::wavelength_nm, Unit::time_ps,
                   Unit::time_ns, Unit::power_nw, Unit::power_uw})
        CHECK(parse_unit(unit_name(u)) == u);
    CHECK(parse_unit("wavenumber_cm1") == Unit::wavenumber_cm1);
    CHECK_THROWS_AS(parse_unit("furlongs"), InputError);
    CHECK(parse_relation("lifetime") == Relation::lifetime);
    CHECK_THROWS_AS(parse_relation("sideways"), InputError);
}
