#pragma once

#include <numbers>

namespace vibronic {

/// Lorentzian normalized to 1 at its center: 1 / (1 + (2 (x - x0) / fwhm)^2).
template <class Scalar>
constexpr Scalar lorentzian_peak(Scalar x, Scalar center, Scalar fwhm) {
    const Scalar u = Scalar(2) * (x - center) / fwhm;
    return Scalar(1) / (Scalar(1) + u * u);
}

/// Lorentzian of unit area; its value at the center is 2 / (pi fwhm).
template <class Scalar>
constexpr Scalar lorentzian_area(Scalar x, Scalar center, Scalar fwhm) {
    return Scalar(2) / (std::numbers::pi_v<Scalar> * fwhm) * lorentzian_peak(x, center, fwhm);
}

}  // namespace vibronic
