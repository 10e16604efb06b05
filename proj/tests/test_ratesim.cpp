#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vibronic/error.hpp"
#include "vibronic/ratesim.hpp"

using namespace vibronic;

namespace {

LevelScheme one_level(double gamma_ghz = 10.9) {
    LevelScheme s;
    s.zpl_frequency_thz = 508.9;
    s.t1_ns = 7.0;
    s.s1_levels.push_back({"w290", ElectronicState::S1, 290.0, gamma_ghz, 1.0});
    return s;
}

LevelScheme sted_scheme(double sigma_b = 0.0) {
    auto s = one_level();
    s.s0_levels.push_back({"g290", ElectronicState::S0, 290.0, 4.0, 1.0});
    s.baseline_sideband_cross_section = sigma_b;
    return s;
}

RateSystem random_system(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(4, 6);
    std::uniform_real_distribution<double> logr(0.0, 2.0);
    std::bernoulli_distribution present(0.7);
    const int n = size(rng);
    RateSystem sys;
    for (int i = 0; i < n; ++i) sys.state_labels.push_back("s" + std::to_string(i));
    sys.rates = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        // a ring keeps the chain irreducible
        sys.rates(i, (i + 1) % n) = std::pow(10.0, logr(rng));
        for (int j = 0; j < n; ++j)
            if (j != i && j != (i + 1) % n && present(rng)) sys.rates(i, j) = std::pow(10.0, logr(rng));
    }
    return sys;
}

// FWHM of a sampled peak by linear interpolation of the half-maximum crossings.
double measured_fwhm(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::Index peak;
    const double top = y.maxCoeff(&peak);
    const double half = top / 2;
    Eigen::Index l = peak, r = peak;
    while (l > 0 && y[l] > half) --l;
    while (r + 1 < y.size() && y[r] > half) ++r;
    const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
    const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
    return xr - xl;
}

}  // namespace

TEST_CASE("pump-only rate matrix") {
    const auto s = one_level();
    const auto sys = build_rate_matrix(s, {LaserRole::pump, "w290", 0.0, 1.0});
    REQUIRE(sys.size() == 3);
    CHECK(sys.state_labels == std::vector<std::string>{"g", "e", "p_w290"});
    const auto g = sys.index_of("g"), e = sys.index_of("e"), p = sys.index_of("p_w290");
    CHECK(sys.rates(g, p) == doctest::Approx(s.decay_rate()));
    CHECK(sys.rates(p, g) == sys.rates(g, p));
    CHECK(sys.rates(p, e) == doctest::Approx(2 * std::numbers::pi * 10.9e9));
    CHECK(sys.rates(e, g) == doctest::Approx(s.decay_rate()));
    CHECK(sys.generator().colwise().sum().cwiseAbs().maxCoeff() < 1e-6);
    CHECK((sys.generator().diagonal().array() <= 0).all());

    const double half = transition_linewidth(s, "w290") / 2;
    const auto detuned = build_rate_matrix(s, {LaserRole::pump, "w290", half, 1.0});
    CHECK(detuned.rates(g, p) == doctest::Approx(s.decay_rate() / 2));
}

TEST_CASE("pump and depletion rate matrix") {
    const auto s = sted_scheme(0.1);
    const auto sys = build_rate_matrix(s, {LaserRole::pump, "w290", 0.0, 1.0}, LaserDrive{LaserRole::depletion, "g290", 0.0, 2.0});
    REQUIRE(sys.size() == 4);
    const auto g = sys.index_of("g"), e = sys.index_of("e"), d = sys.index_of("d_g290");
    const double ge = s.decay_rate();
    CHECK(sys.rates(e, d) == doctest::Approx(2 * ge));
    CHECK(sys.rates(d, e) == sys.rates(e, d));
    CHECK(sys.rates(d, g) == doctest::Approx(2 * std::numbers::pi * 4e9));
    CHECK(sys.rates(e, g) == doctest::Approx(ge + 2 * ge * 0.1));
    CHECK_THROWS_AS(sys.index_of("x"), InputError);
}

TEST_CASE("invalid drives") {
    const auto s = sted_scheme();
    CHECK_THROWS_AS(build_rate_matrix(s, {LaserRole::pump, "nope", 0.0, 1.0}), InputError);
    CHECK_THROWS_AS(build_rate_matrix(s, {LaserRole::pump, "w290", 0.0, 1.0}, LaserDrive{LaserRole::depletion, "w290", 0.0, 1.0}),
                    InputError);
}

TEST_CASE("steady state limits") {
    const auto s = one_level();
    const auto dark = steady_state(build_rate_matrix(s, {LaserRole::pump, "w290", 0.0, 0.0}));
    CHECK(dark[0] == 1.0);
    CHECK(dark.tail(2).cwiseAbs().maxCoeff() == 0.0);

    const double ratio = s.decay_rate() / (2 * std::numbers::pi * 10.9e9);
    const double ne = excited_population(s, {LaserRole::pump, "w290", 0.0, 1.0});
    CHECK(ne == doctest::Approx(1.0 / (2.0 + 2.0 * ratio)).epsilon(1e-12));
    CHECK(std::abs(ne - 0.5) < ratio);

    CHECK(excited_population(s, {LaserRole::pump, "w290", 0.0, 1e6}) > 0.99);
    CHECK(excited_population(one_level(1e4), {LaserRole::pump, "w290", 0.0, 3.0}) ==
          doctest::Approx(0.75).epsilon(1e-5));
    CHECK(excited_population(s, {LaserRole::pump, std::string(kZplTarget), 0.0, 1.0}) == doctest::Approx(0.25));
}

TEST_CASE("steady state matches time evolution on random systems") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sys = random_system(rng);
        const auto ss = steady_state(sys);
        CHECK(std::abs(ss.sum() - 1.0) < 1e-12);
        CHECK((ss.array() >= 0).all());
        Eigen::VectorXd n0 = Eigen::VectorXd::Zero(sys.size());
        n0[0] = 1.0;
        const auto rep = time_evolve_report(sys, n0, 100.0 / sys.min_rate());
        CHECK(rep.max_population_drift < 1e-12);
        CHECK((rep.populations - ss).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("time evolution of a two-level decay") {
    RateSystem sys;
    sys.state_labels = {"a", "b"};
    sys.rates = Eigen::MatrixXd::Zero(2, 2);
    sys.rates(1, 0) = 3.0;
    const Eigen::Vector2d n0(0.0, 1.0);
    CHECK(time_evolve(sys, n0, 0.0) == n0);
    for (double t : {0.1, 0.5, 2.0}) {
        const auto n = time_evolve(sys, n0, t);
        CHECK(std::abs(n[1] - std::exp(-3.0 * t)) < 1e-8);
        CHECK(std::abs(n.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("disconnected systems are rejected") {
    RateSystem sys;
    sys.state_labels = {"a", "b", "c", "d"};
    sys.rates = Eigen::MatrixXd::Zero(4, 4);
    sys.rates(0, 1) = sys.rates(1, 0) = 1.0;
    sys.rates(2, 3) = sys.rates(3, 2) = 1.0;
    CHECK_THROWS_AS(steady_state(sys), NumericalError);
}

TEST_CASE("fluorex peak and power broadening") {
    const auto s = one_level();
    const double gt = transition_linewidth(s, "w290");
    for (double sp : {0.1, 1.0, 10.0}) {
        FluorexScan scan{"w290", linear_axis(-25 * gt, 25 * gt, 10001), sp};
        const auto spec = fluorex_spectrum(s, scan);
        CHECK(spec.kind == SpectrumKind::fluorex);
        CHECK(spec.axis_unit == "GHz");
        CHECK(measured_fwhm(spec.axis, spec.values) / (gt * std::sqrt(1 + sp)) == doctest::Approx(1.0).epsilon(0.01));
        CHECK((spec.values.array() >= 0).all());
        CHECK((spec.values.array() <= 1).all());
    }
    FluorexScan scan{"w290", linear_axis(-50, 50, 2001), 1.0};
    CHECK(fluorex_spectrum(s, scan).values.maxCoeff() == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("doublet gives two peaks on a wavenumber axis") {
    auto s = one_level(3.0);
    s.s1_levels[0].wavenumber = 291.0;
    s.s1_levels.push_back({"w289", ElectronicState::S1, 289.0, 6.0, 0.4});
    FluorexScan scan{"", linear_axis(287.0, 293.0, 3001), 1.0};
    const auto spec = fluorex_spectrum(s, scan);
    CHECK(spec.axis_unit == "cm-1");
    int maxima = 0;
    for (Eigen::Index i = 1; i + 1 < spec.size(); ++i)
        if (spec.values[i] > spec.values[i - 1] && spec.values[i] > spec.values[i + 1]) ++maxima;
    CHECK(maxima == 2);
}

TEST_CASE("depletion factor") {
    const auto s = sted_scheme();
    const LaserDrive pump{LaserRole::pump, "w290", 0.0, 1.0};
    const auto axis = linear_axis(-40.0, 40.0, 401);

    const auto off = sted_spectrum(s, pump, {"g290", axis, 0.0});
    CHECK(off.values.cwiseAbs().maxCoeff() == 0.0);

    const auto on = sted_spectrum(s, pump, {"g290", axis, 1.0});
    Eigen::Index dip;
    on.values.maxCoeff(&dip);
    CHECK(on.axis[dip] == doctest::Approx(0.0));
    CHECK(on.values[0] < 0.05 * on.values[dip]);

    double prev = 0;
    for (double sd : {0.1, 0.5, 1.0, 5.0, 50.0, 1e4}) {
        const auto d = sted_spectrum(s, pump, {"g290", Eigen::VectorXd::Zero(1), sd}).values[0];
        CHECK(d > prev);
        CHECK(d < 1.0);
        prev = d;
    }
}

TEST_CASE("baseline depletion offsets the wings") {
    const LaserDrive pump{LaserRole::pump, "w290", 0.0, 1.0};
    const Eigen::VectorXd far = Eigen::VectorXd::Constant(1, 5000.0);
    const double none = sted_spectrum(sted_scheme(0.0), pump, {"g290", far, 2.0}).values[0];
    const double weak = sted_spectrum(sted_scheme(0.05), pump, {"g290", far, 1.0}).values[0];
    const double strong = sted_spectrum(sted_scheme(0.05), pump, {"g290", far, 2.0}).values[0];
    CHECK(none < 1e-4);
    CHECK(weak > 0.01);
    CHECK(strong > weak);
}

TEST_CASE("saturation curve") {
    const auto s = one_level();
    const Eigen::VectorXd p = (Eigen::VectorXd(4) << 0.0, 1.4, 9 * 1.4, 100.0).finished();
    const auto zpl = saturation_curve(s, kZplTarget, p, 1.4);
    CHECK(zpl.values[0] == 0.0);
    CHECK(zpl.values[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(zpl.values[2] == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(zpl.kind == SpectrumKind::saturation);
    CHECK_THROWS_AS(saturation_curve(s, "w290", p, 0.0), InputError);
    const Eigen::VectorXd bad = (Eigen::VectorXd(2) << -1.0, 1.0).finished();
    CHECK_THROWS_AS(saturation_curve(s, "w290", bad, 1.0), InputError);
}

TEST_CASE("poisson noise") {
    const auto s = one_level();
    const auto spec = fluorex_spectrum(s, {"w290", linear_axis(-50, 50, 201), 1.0});
    const auto a = add_noise(spec, 7, 1e6);
    const auto b = add_noise(spec, 7, 1e6);
    const auto c = add_noise(spec, 8, 1e6);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.value_unit == "counts");
    CHECK(a.metadata.at("seed") == "7");
    Eigen::Index peak;
    spec.values.maxCoeff(&peak);
    CHECK(std::abs(a.values[peak] / 1e6 - spec.values[peak]) < 5e-3);

    Spectrum zeros = spec;
    zeros.values.setZero();
    CHECK(add_noise(zeros, 3, 1e6).values.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(add_noise(spec, 0, 0.0), InputError);
}
