#pragma once
// File formats: spectra as CSV, structured objects as JSON.
//
// Spectrum CSV:
//   # kind=<fluorex|sted|saturation|calculated> axis_unit=<u> value_unit=<u> [key=value ...]
//   axis,value
//   ...
// Numbers are written with 17 significant digits so a write/read cycle is exact.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "vibronic/fcmodel.hpp"
#include "vibronic/fitkit.hpp"
#include "vibronic/levels.hpp"
#include "vibronic/spectrum.hpp"
#include "vibronic/stats.hpp"

namespace vibronic {

/// "%.17g" formatting.
std::string format_number(double v);

void write_spectrum(const Spectrum& spectrum, std::ostream& out);
void write_spectrum(const Spectrum& spectrum, const std::filesystem::path& path);
/// Throws InputError naming the offending line for a malformed header,
/// non-numeric cells or a non-increasing axis.
Spectrum read_spectrum(std::istream& in);
Spectrum read_spectrum(const std::filesystem::path& path);

nlohmann::json scheme_to_json(const LevelScheme& scheme);
/// Strict schema check: unknown keys, wrong types and invariant violations
/// are reported with their JSON path, e.g. `s0_levels[0].gamma_ghz`.
LevelScheme scheme_from_json(const nlohmann::json& j);
LevelScheme read_scheme(const std::filesystem::path& path);
void write_scheme(const LevelScheme& scheme, const std::filesystem::path& path);

nlohmann::json fit_result_to_json(const FitResult& result);

/// Accepts a top-level array of records or {"molecules": [...]}. Omega^2
/// values are renormalized per molecule and state on load.
std::vector<MoleculeRecord> records_from_json(const nlohmann::json& j);
nlohmann::json records_to_json(const std::vector<MoleculeRecord>& records);
std::vector<MoleculeRecord> read_records(const std::filesystem::path& path);

nlohmann::json stats_to_json(const StatsReport& report, const ModeGroups& groups);
/// One row per (mode, state, molecule) for plotting.
void write_stats_csv(const StatsReport& report, std::ostream& out);

void write_sticks_csv(const std::vector<VibronicStick>& sticks, std::ostream& out);

/// Reads the whole file or throws InputError.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace vibronic
