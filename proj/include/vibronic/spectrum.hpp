#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <string_view>

namespace vibronic {

enum class SpectrumKind {
    fluorex,     ///< normalized excited-state population vs excitation wavenumber
    sted,        ///< depletion factor vs depletion wavenumber
    saturation,  ///< signal vs laser power
    calculated,  ///< broadened stick spectrum
};

std::string_view to_string(SpectrumKind kind) noexcept;
SpectrumKind parse_spectrum_kind(std::string_view name);

/// An axis paired with signal values. `metadata` carries provenance such as
/// drive saturations and noise seeds as plain key/value strings.
struct Spectrum {
    SpectrumKind kind = SpectrumKind::fluorex;
    std::string axis_unit = "cm-1";
    std::string value_unit = "n_e";
    Eigen::VectorXd axis;
    Eigen::VectorXd values;
    std::map<std::string, std::string> metadata;

    Eigen::Index size() const noexcept { return axis.size(); }
};

/// True if every consecutive pair of axis values strictly increases.
bool strictly_increasing(const Eigen::Ref<const Eigen::VectorXd>& axis) noexcept;

/// Evenly spaced axis of `points` values from `lo` to `hi` inclusive.
Eigen::VectorXd linear_axis(double lo, double hi, Eigen::Index points);

}  // namespace vibronic
