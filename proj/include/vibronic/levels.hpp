#pragma once
// Level structure of a single dye molecule and the lasers driving it.
//
// The vibrationless levels |S0,0> and |S1,0> are implicit anchors; every
// VibronicLevel is a vibrationally excited level of one electronic state.
// Linewidths are stored as Gamma/(2 pi) in GHz, i.e. as FWHM.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vibronic {

enum class ElectronicState { S0, S1 };

enum class LevelKind { fundamental, overtone, combination, satellite, unassigned };

std::string_view to_string(ElectronicState s) noexcept;
std::string_view to_string(LevelKind k) noexcept;
LevelKind parse_level_kind(std::string_view name);

struct VibronicLevel {
    std::string id;
    ElectronicState state = ElectronicState::S1;
    double wavenumber = 0.0;      ///< cm^-1 above the vibrationless level of `state`
    double gamma_over_2pi = 0.0;  ///< FWHM of vibrational relaxation, GHz
    double relative_fc = 1.0;     ///< Omega^2 / Omega^2_max, in [0, 1]
    LevelKind kind = LevelKind::fundamental;

    friend bool operator==(const VibronicLevel&, const VibronicLevel&) = default;
};

struct LevelScheme {
    double zpl_frequency_thz = 0.0;
    double t1_ns = 0.0;
    std::vector<VibronicLevel> s0_levels;
    std::vector<VibronicLevel> s1_levels;
    /// Weight of detuning-independent stimulated emission into the phonon
    /// sidebands, relative to the resonant depletion rate.
    double baseline_sideband_cross_section = 0.0;

    /// Natural 00ZPL linewidth 1/(2 pi T1) in GHz.
    double zpl_linewidth_ghz() const;
    /// Spontaneous decay rate 1/T1 in s^-1.
    double decay_rate() const;

    const VibronicLevel* find(std::string_view id) const noexcept;
    VibronicLevel* find(std::string_view id) noexcept;
    /// Throws InputError if `id` names no level.
    const VibronicLevel& at(std::string_view id) const;

    friend bool operator==(const LevelScheme&, const LevelScheme&) = default;
};

/// Pump-target sentinel selecting resonant two-level driving of the 00ZPL.
inline constexpr std::string_view kZplTarget = "00ZPL";

enum class LaserRole { pump, depletion };

struct LaserDrive {
    LaserRole role = LaserRole::pump;
    std::string target_level;  ///< level id, or kZplTarget for the pump
    double detuning_ghz = 0.0;
    double saturation = 0.0;   ///< S = P/P_sat at line center
};

struct SchemeViolation {
    std::string level_id;  ///< empty for scheme-wide rules
    std::string rule;

    friend bool operator==(const SchemeViolation&, const SchemeViolation&) = default;
};

/// Lists every broken invariant. Never throws.
std::vector<SchemeViolation> validate_scheme(const LevelScheme& scheme);

/// FWHM (GHz) of the optical transition between the vibrationless level of the
/// other electronic state and `level_id`: level width plus the 00ZPL width.
/// kZplTarget yields the bare 00ZPL width.
double transition_linewidth(const LevelScheme& scheme, std::string_view level_id);

/// Number of vibrational normal modes: 3N-6, or 3N-5 for linear molecules.
int mode_count(int n_atoms, bool linear);

}  // namespace vibronic
