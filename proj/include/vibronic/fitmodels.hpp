#pragma once
// Concrete fit models on top of levenberg_marquardt.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "vibronic/fitkit.hpp"
#include "vibronic/levels.hpp"
#include "vibronic/spectrum.hpp"

namespace vibronic {

struct Peak {
    double center = 0.0;
    double height = 0.0;
    double prominence = 0.0;
    double width = 0.0;  ///< full width at half prominence, axis units
};

struct PeakSearch {
    double min_prominence = 0.0;
    double min_separation = 0.0;  ///< axis units
    int smoothing_window = 3;     ///< moving-average points, odd
};

/// Local maxima of the smoothed signal, filtered by topographic prominence
/// and minimum separation (stronger peaks win). Sorted by center.
std::vector<Peak> detect_peaks(const Spectrum& spectrum, const PeakSearch& search = {});

struct LorentzianGuess {
    double center = 0.0;
    double fwhm = 0.0;
    double amplitude = 0.0;
};

/// baseline + sum_k amplitude_k / (1 + (2 (x - center_k) / fwhm_k)^2).
/// Parameters are named peak<k>.center, peak<k>.fwhm, peak<k>.amplitude and
/// baseline. Without `init`, the n_peaks most prominent detected peaks seed
/// the fit; fewer detections than n_peaks is an InputError.
FitResult fit_lorentzian_multi(const Spectrum& spectrum, int n_peaks,
                               const std::optional<std::vector<LorentzianGuess>>& init = std::nullopt,
                               const LmOptions& options = {});

/// Evaluates the multi-Lorentzian model for the parameter layout above.
Eigen::VectorXd multi_lorentzian(const Eigen::Ref<const Eigen::VectorXd>& axis,
                                 const Eigen::Ref<const Eigen::VectorXd>& params);

/// Drive configuration for rate-model fits. Unset values are read from the
/// spectrum metadata written by the simulator.
struct RateFitConfig {
    std::optional<double> pump_saturation;       ///< S_p
    std::optional<double> depletion_saturation;  ///< S_d (STED only)
    std::optional<std::string> pump_target;      ///< STED pump target; fluorex scan target
    std::optional<std::string> scan_target;      ///< STED depletion target for GHz axes
    double scale = 1.0;                          ///< signal = scale * model unless "scale" is free
    std::optional<Eigen::VectorXd> weights;
    LmOptions lm;
};

/// Fits the rate-equation forward model (fluorex or sted, chosen by the
/// spectrum kind) to the data. Free parameter names:
///   <level>.wavenumber, <level>.gamma (Gamma/2pi in GHz), <level>.fc,
///   sp, sd, baseline (sideband cross section), scale.
/// Unknown names are an InputError.
FitResult fit_rate_model(const Spectrum& spectrum, const LevelScheme& scheme_template,
                         const std::vector<std::string>& free, const RateFitConfig& config = {});

/// Copy of `scheme` with the named parameters overwritten. Names follow
/// fit_rate_model; sp, sd and scale are ignored here.
LevelScheme apply_scheme_parameters(const LevelScheme& scheme, const std::vector<std::string>& names,
                                    const Eigen::Ref<const Eigen::VectorXd>& values);

/// R_inf * (P / P_sat) / (1 + P / P_sat); parameters r_inf and p_sat.
FitResult fit_saturation(const Eigen::Ref<const Eigen::VectorXd>& powers, const Eigen::Ref<const Eigen::VectorXd>& rates,
                         const LmOptions& options = {});

}  // namespace vibronic
