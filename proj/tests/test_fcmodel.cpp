#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "vibronic/fcmodel.hpp"
#include "vibronic/units.hpp"

using namespace vibronic;

TEST_CASE("poisson factors") {
    CHECK(fc_factor_poisson(0.0, 0) == 1.0);
    CHECK(fc_factor_poisson(0.0, 1) == 0.0);
    CHECK(fc_factor_poisson(0.0961, 1) == doctest::Approx(0.08730).epsilon(1e-4));
    CHECK(std::abs(fc_factor_poisson(0.0961, 1) - 0.0961 * std::exp(-0.0961)) < 1e-15);
    CHECK_THROWS_AS(fc_factor_poisson(-0.1, 1), InputError);
    CHECK_THROWS_AS(fc_factor_poisson(0.1, -1), InputError);

    for (double s : {0.01, 0.1, 1.0, 5.0}) {
        double sum = 0;
        for (int n = 0; n <= 50; ++n) sum += fc_factor_poisson(s, n);
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("gauss-hermite rule integrates polynomials exactly") {
    const auto rule = gauss_hermite(12);
    CHECK(rule.weights.sum() == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
    const double x2 = (rule.weights.array() * rule.nodes.array().square()).sum();
    CHECK(x2 == doctest::Approx(std::sqrt(std::numbers::pi) / 2).epsilon(1e-13));
    const double x3 = (rule.weights.array() * rule.nodes.array().cube()).sum();
    CHECK(std::abs(x3) < 1e-13);
}

TEST_CASE("numerical overlap agrees with the poisson factors") {
    CHECK(fc_overlap_numeric(0.0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(fc_overlap_numeric(0.0, 1, 0)) < 1e-12);
    CHECK(std::abs(fc_overlap_numeric(0.31, 0, 2) - fc_factor_poisson(0.0961, 2)) < 1e-8);
    for (double alpha : {0.0, 0.1, 0.31, 1.0})
        for (int m = 0; m <= 10; ++m)
            CHECK(std::abs(fc_overlap_numeric(alpha, 0, m) - fc_factor_poisson(alpha * alpha, m)) < 1e-8);
}

TEST_CASE("numerical overlaps of a row sum to one") {
    double sum = 0;
    for (int m = 0; m <= 20; ++m) sum += fc_overlap_numeric(0.5, 2, m);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("overlap quadrature reports non-convergence") {
    OverlapQuadrature tight;
    tight.initial_nodes = 2;
    tight.max_nodes = 4;
    CHECK_THROWS_AS(fc_overlap_numeric(1.0, 5, 7, tight), NumericalError);
    CHECK_THROWS_AS(fc_overlap_numeric(0.3, 21, 0), InputError);
}

TEST_CASE("huang-rhys from intensity ratio") {
    CHECK(huang_rhys_from_ratio(0.0961) == doctest::Approx(0.31));
    CHECK(huang_rhys_from_ratio(0.0) == 0.0);
    CHECK(huang_rhys_from_ratio(1.0) == 1.0);
    CHECK_THROWS_AS(huang_rhys_from_ratio(-0.1), InputError);
}

TEST_CASE("single mode overtone ratio is S/2") {
    const ModeDisplacement modes[] = {{1, 290.0, 0.31}};
    const auto sticks = relative_intensities(modes, 2);
    REQUIRE(sticks.size() == 3);
    CHECK(sticks[0].wavenumber == 0.0);
    CHECK(sticks[1].wavenumber == 290.0);
    CHECK(sticks[2].wavenumber == 580.0);
    CHECK(sticks[2].intensity / sticks[1].intensity == doctest::Approx(0.0961 / 2).epsilon(1e-14));
    CHECK(sticks[2].intensity / sticks[1].intensity == doctest::Approx(0.0481).epsilon(1e-3));
    CHECK(sticks[0].intensity == 1.0);
}

TEST_CASE("multi-mode sticks factorize") {
    const ModeDisplacement modes[] = {{1, 290.0, 0.31}, {2, 270.0, 0.2}, {3, 177.0, 1.3}};
    const int max_q = 3;
    const auto sticks = relative_intensities(modes, max_q);
    double top = 0;
    std::vector<std::tuple<double, double, std::map<int, int>>> brute;
    for (int a = 0; a <= max_q; ++a)
        for (int b = 0; a + b <= max_q; ++b)
            for (int c = 0; a + b + c <= max_q; ++c) {
                const double w = fc_factor_poisson(0.31 * 0.31, a) * fc_factor_poisson(0.04, b) *
                                 fc_factor_poisson(1.69, c);
                top = std::max(top, w);
                std::map<int, int> q;
                if (a) q[1] = a;
                if (b) q[2] = b;
                if (c) q[3] = c;
                brute.emplace_back(290.0 * a + 270.0 * b + 177.0 * c, w, q);
            }
    REQUIRE(sticks.size() == brute.size());
    for (const auto& [w, inten, q] : brute) {
        auto it = std::find_if(sticks.begin(), sticks.end(), [&](const VibronicStick& s) { return s.quanta == q; });
        REQUIRE(it != sticks.end());
        CHECK(it->wavenumber == w);
        CHECK(it->intensity == doctest::Approx(inten / top).epsilon(1e-13));
    }
    for (std::size_t i = 1; i < sticks.size(); ++i) CHECK(sticks[i - 1].wavenumber <= sticks[i].wavenumber);
}

TEST_CASE("combination stick follows the product rule") {
    const ModeDisplacement modes[] = {{1, 290.0, 0.31}, {2, 270.0, 0.2}};
    const auto sticks = relative_intensities(modes, 2);
    auto it = std::find_if(sticks.begin(), sticks.end(), [](const VibronicStick& s) { return s.wavenumber == 560.0; });
    REQUIRE(it != sticks.end());
    const double origin = fc_factor_poisson(0.0961, 0) * fc_factor_poisson(0.04, 0);
    CHECK(it->intensity == doctest::Approx(fc_factor_poisson(0.0961, 1) * fc_factor_poisson(0.04, 1) / origin));
}

TEST_CASE("undisplaced mode contributes nothing") {
    const ModeDisplacement modes[] = {{1, 290.0, 0.31}, {2, 270.0, 0.0}};
    for (const auto& s : relative_intensities(modes, 2)) CHECK(s.quanta.count(2) == 0);
}

TEST_CASE("stick budget is enforced") {
    std::vector<ModeDisplacement> modes;
    for (int i = 0; i < 60; ++i) modes.push_back({i, 100.0 + i, 0.2});
    CHECK_THROWS_AS(relative_intensities(modes, 4, 10000), InputError);
}

TEST_CASE("broadened spectrum") {
    const double gamma_ghz = 10.0;
    const double gamma_cm = gamma_ghz / constants::ghz_per_wavenumber;
    const VibronicStick one[] = {{290.0, 1.0, {{1, 1}}}};
    const double g[] = {gamma_ghz};
    const auto axis = linear_axis(280.0, 300.0, 2001);
    const auto single = stick_to_spectrum(one, g, axis);
    Eigen::Index peak;
    single.values.maxCoeff(&peak);
    CHECK(axis[peak] == doctest::Approx(290.0));
    CHECK(single.values[peak] == doctest::Approx(2.0 / (std::numbers::pi * gamma_cm)).epsilon(1e-12));

    const VibronicStick two[] = {{290.0, 1.0, {{1, 1}}}, {290.0, 1.0, {{1, 1}}}};
    const auto doubled = stick_to_spectrum(two, g, axis);
    CHECK((doubled.values - 2 * single.values).cwiseAbs().maxCoeff() < 1e-12);

    const VibronicStick half[] = {{290.0, 0.5, {{1, 1}}}};
    CHECK((stick_to_spectrum(half, g, axis).values - 0.5 * single.values).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(stick_to_spectrum(one, g, Eigen::VectorXd()), InputError);
    const double bad[] = {0.0};
    CHECK_THROWS_AS(stick_to_spectrum(one, bad, axis), InputError);
}

TEST_CASE("triad shows three maxima") {
    const VibronicStick triad[] = {{177.0, 0.2, {}}, {234.0, 0.3, {}}, {290.0, 1.0, {}}};
    const double g[] = {10.0};
    const auto s = stick_to_spectrum(triad, g, linear_axis(150.0, 320.0, 17001));
    int maxima = 0;
    for (Eigen::Index i = 1; i + 1 < s.values.size(); ++i)
        if (s.values[i] > s.values[i - 1] && s.values[i] > s.values[i + 1]) ++maxima;
    CHECK(maxima == 3);
}

TEST_CASE("anharmonicity") {
    CHECK(anharmonicity_defect(580.10, 290.0, 290.0) == doctest::Approx(0.10));
    CHECK(is_harmonic(anharmonicity_defect(580.10, 290.0, 290.0)));
    CHECK(anharmonicity_defect(580.0, 290.0, 290.0) == 0.0);
    CHECK(anharmonicity_defect(581.0, 290.0, 290.0) == doctest::Approx(1.0));
    CHECK_FALSE(is_harmonic(anharmonicity_defect(581.0, 290.0, 290.0)));
}

TEST_CASE("frequency scaling") {
    const ModeDisplacement m[] = {{1, 290.0, 0.31}};
    CHECK(apply_scaling(m, 1.0, 0.0)[0] == m[0]);
    const auto scaled = apply_scaling(m, 0.98, 0.0);
    CHECK(scaled[0].wavenumber == doctest::Approx(284.2));
    CHECK(scaled[0].alpha == 0.31);
    CHECK_THROWS_AS(apply_scaling(m, 1.0, -300.0), InputError);
    CHECK_THROWS_AS(apply_scaling(m, 0.0, 0.0), InputError);
}

TEST_CASE("mode list csv") {
    std::istringstream in("# computed modes\nmode_id,wavenumber_cm1,value,flag\n1,290,0.31,alpha\n2,177,0.04,intensity\n");
    const auto modes = read_modes_csv(in);
    REQUIRE(modes.size() == 2);
    CHECK(modes[0].alpha == 0.31);
    CHECK(modes[1].alpha == doctest::Approx(0.2));
    CHECK(modes[1].huang_rhys() == doctest::Approx(0.04));

    std::istringstream bad("1,290,0.31,sideways\n");
    CHECK_THROWS_AS(read_modes_csv(bad), InputError);
    std::istringstream nan_cell("1,abc,0.31,alpha\n");
    CHECK_THROWS_AS(read_modes_csv(nan_cell), InputError);
}
