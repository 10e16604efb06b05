#pragma once
// Franck-Condon factors in the displaced harmonic oscillator picture with no
// Duschinsky rotation. A mode is characterized by its wavenumber and by
// alpha = dQ / (2 dQ_zpm), the square root of its Huang-Rhys factor S.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "vibronic/error.hpp"
#include "vibronic/spectrum.hpp"

namespace vibronic {

struct ModeDisplacement {
    int mode_id = 0;
    double wavenumber = 0.0;  ///< cm^-1
    double alpha = 0.0;

    double huang_rhys() const noexcept { return alpha * alpha; }

    friend bool operator==(const ModeDisplacement&, const ModeDisplacement&) = default;
};

struct VibronicStick {
    double wavenumber = 0.0;    ///< sum of n_i * w_i, cm^-1
    double intensity = 0.0;     ///< relative to the strongest stick
    std::map<int, int> quanta;  ///< mode_id -> number of quanta; empty for the origin

    int total_quanta() const noexcept {
        int n = 0;
        for (const auto& [id, q] : quanta) n += q;
        return n;
    }
};

/// Poisson Franck-Condon factor e^-S S^n / n! for the 0 -> n transition.
template <class Scalar>
Scalar fc_factor_poisson(Scalar huang_rhys, int n) {
    using std::exp;
    using std::log;
    using std::lgamma;
    if (!(huang_rhys >= Scalar(0))) throw InputError("fc_factor_poisson: Huang-Rhys factor must be non-negative");
    if (n < 0) throw InputError("fc_factor_poisson: quanta must be non-negative");
    if (huang_rhys == Scalar(0)) return n == 0 ? Scalar(1) : Scalar(0);
    return exp(-huang_rhys + Scalar(n) * log(huang_rhys) - lgamma(Scalar(n) + Scalar(1)));
}

/// Nodes and weights for integrals of f(x) exp(-x^2) over the real line.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Golub-Welsch construction of the `n`-point Gauss-Hermite rule.
GaussHermiteRule gauss_hermite(int n);

struct OverlapQuadrature {
    int initial_nodes = 8;
    int max_nodes = 160;
    double tolerance = 1e-10;  ///< successive refinements must agree to this
};

/// |<n | m displaced by 2 alpha dQ_zpm>|^2 by Gauss-Hermite quadrature over
/// products of Hermite functions, refining the node count until two
/// successive estimates agree. Throws NumericalError if they never do.
double fc_overlap_numeric(double alpha, int n, int m, const OverlapQuadrature& quad = {});

/// alpha = sqrt(Omega^2_overtone / Omega^2_fundamental).
double huang_rhys_from_ratio(double ratio);

/// Every quanta assignment with sum n_i <= max_total_quanta, weighted by the
/// product of Poisson factors and normalized so the strongest stick is 1.
/// Zero-weight sticks are dropped; the rest is sorted by wavenumber.
std::vector<VibronicStick> relative_intensities(std::span<const ModeDisplacement> modes, int max_total_quanta,
                                                std::size_t max_sticks = 1'000'000);

/// Sum of area-normalized Lorentzians at the stick positions. `gamma_ghz`
/// holds either one FWHM for every stick or one per stick.
Spectrum stick_to_spectrum(std::span<const VibronicStick> sticks, std::span<const double> gamma_ghz,
                           const Eigen::Ref<const Eigen::VectorXd>& axis_cm1);

/// Signed deviation nu_combination - (nu_a + nu_b).
double anharmonicity_defect(double nu_combination, double nu_a, double nu_b);

inline constexpr double kHarmonicDefectThreshold = 0.15;  // cm^-1

inline bool is_harmonic(double defect, double threshold = kHarmonicDefectThreshold) noexcept {
    return std::abs(defect) < threshold;
}

/// Maps each wavenumber to slope * w + intercept; alpha is untouched.
std::vector<ModeDisplacement> apply_scaling(std::span<const ModeDisplacement> modes, double slope, double intercept);

/// Reads `mode_id,wavenumber_cm1,value,flag` rows. flag `alpha` takes value as
/// alpha; flag `intensity` takes it as the fundamental-to-origin intensity
/// ratio, which equals S in the Poisson model, so alpha = sqrt(value).
/// Lines starting with '#' and a header row starting with `mode_id` are skipped.
std::vector<ModeDisplacement> read_modes_csv(std::istream& in);

}  // namespace vibronic
