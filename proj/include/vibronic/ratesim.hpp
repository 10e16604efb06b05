#pragma once
// Incoherent rate-equation model of a single molecule under pump and
// depletion lasers.
//
// States: g = |S0,0>, e = |S1,0>, p_j for S1 vibronic levels, d_k for S0
// vibronic levels. Laser-induced rates are S * relative_fc * Gamma_e * L(delta)
// with L the peak-normalized Lorentzian of the transition FWHM; every
// laser-induced rate has an equal reverse rate. Vibrational levels relax one
// way (p_j -> e, d_k -> g) and e decays to g at Gamma_e = 1/T1.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vibronic/levels.hpp"
#include "vibronic/spectrum.hpp"

namespace vibronic {

struct RateSystem {
    std::vector<std::string> state_labels;
    /// rates(i, j) is the rate (s^-1) of the transition i -> j. The diagonal is unused.
    Eigen::MatrixXd rates;

    Eigen::Index size() const noexcept { return rates.rows(); }
    /// Throws InputError for an unknown label.
    Eigen::Index index_of(std::string_view label) const;
    /// dn/dt = G n; off-diagonal G(j, i) = rates(i, j), columns sum to zero.
    Eigen::MatrixXd generator() const;
    /// Smallest strictly positive off-diagonal rate.
    double min_rate() const;
};

/// Assembles the rate matrix for one pump and an optional depletion laser.
///
/// A pump aimed at kZplTarget drives the two-level 00ZPL transition with
/// W = S Gamma_e L / 2, so that S = 1 still halves the asymptotic signal.
/// A pump aimed at an S1 level sits at that level's wavenumber plus
/// `detuning_ghz` and drives every S1 level at its own detuning. The
/// depletion laser works the same way on the S0 levels and also adds the
/// detuning-independent baseline channel e -> g at S_d Gamma_e sigma_b.
RateSystem build_rate_matrix(const LevelScheme& scheme, const LaserDrive& pump,
                             const std::optional<LaserDrive>& depletion = std::nullopt);

/// Normalized null vector of the generator. Entries above -1e-14 are clamped
/// to zero. Throws NumericalError when the stationary state is not unique.
Eigen::VectorXd steady_state(const RateSystem& system);

struct IntegratorOptions {
    double rtol = 1e-12;
    double atol = 1e-15;
    double min_step = 1e-300;
    long max_steps = 50'000'000;
};

struct EvolutionReport {
    Eigen::VectorXd populations;
    long accepted_steps = 0;
    long rejected_steps = 0;
    double max_population_drift = 0.0;  ///< max |sum(n) - sum(n0)| over accepted steps
};

/// Integrates dn/dt = G n from 0 to `t_seconds` with an adaptive
/// Dormand-Prince 5(4) scheme. Throws NumericalError on step-size underflow.
EvolutionReport time_evolve_report(const RateSystem& system, const Eigen::Ref<const Eigen::VectorXd>& initial,
                                   double t_seconds, const IntegratorOptions& options = {});

Eigen::VectorXd time_evolve(const RateSystem& system, const Eigen::Ref<const Eigen::VectorXd>& initial,
                            double t_seconds, const IntegratorOptions& options = {});

/// Population of |S1,0>.
double excited_population(const LevelScheme& scheme, const LaserDrive& pump,
                          const std::optional<LaserDrive>& depletion = std::nullopt);

/// Fluorescence-excitation scan. With an empty `target` the axis is the
/// excitation wavenumber above the 00ZPL (cm^-1) and every S1 level is
/// driven. Otherwise the axis is the detuning in GHz from `target`, which may
/// be an S1 level id or kZplTarget.
struct FluorexScan {
    std::string target;
    Eigen::VectorXd axis;
    double saturation = 1.0;
};

Spectrum fluorex_spectrum(const LevelScheme& scheme, const FluorexScan& scan);

/// Depletion scan with a fixed pump. An empty `target` means the axis is the
/// depletion wavenumber below the 00ZPL (cm^-1); otherwise it is the detuning
/// in GHz from the S0 level `target`.
struct StedScan {
    std::string target;
    Eigen::VectorXd axis;
    double saturation = 1.0;
};

/// Depletion factor D = [n_e(S_d = 0) - n_e] / n_e(S_d = 0) along the scan.
Spectrum sted_spectrum(const LevelScheme& scheme, const LaserDrive& pump, const StedScan& scan);

/// On-resonance n_e at S = P / P_sat for each power (strictly increasing, >= 0).
Spectrum saturation_curve(const LevelScheme& scheme, std::string_view pump_target,
                          const Eigen::Ref<const Eigen::VectorXd>& powers, double p_sat);

/// Replaces each value v with a Poisson draw of mean v * dwell_scale using a
/// generator seeded with `seed`. The result is reproducible for a given seed.
Spectrum add_noise(const Spectrum& spectrum, std::uint64_t seed, double dwell_scale);

}  // namespace vibronic
