#pragma once
// Cross-molecule statistics of fitted vibronic modes.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vibronic/levels.hpp"

namespace vibronic {

struct ModeEntry {
    double wavenumber = 0.0;       ///< cm^-1
    double gamma_ghz = 0.0;        ///< Gamma/2pi
    double relative_omega2 = 0.0;  ///< Omega^2 / Omega^2_max within the molecule and state
};

struct MoleculeRecord {
    std::string molecule_id;
    std::string sample_id;
    std::vector<ModeEntry> s0_modes;
    std::vector<ModeEntry> s1_modes;
    std::vector<std::string> sources;
    std::map<std::string, double> powers;

    const std::vector<ModeEntry>& modes(ElectronicState s) const { return s == ElectronicState::S0 ? s0_modes : s1_modes; }
};

/// Rescales relative_omega2 so that the largest value per molecule and state is 1.
void normalize_omega2(MoleculeRecord& record);

struct ClusterMember {
    std::string molecule_id;
    ModeEntry mode;
};

struct ModeCluster {
    ElectronicState state = ElectronicState::S0;
    std::vector<ClusterMember> members;  ///< sorted by molecule_id

    double mean_wavenumber() const;
    bool contains(const std::string& molecule_id) const;
};

struct UnmatchedMode {
    ElectronicState state = ElectronicState::S0;
    std::string molecule_id;
    ModeEntry mode;
};

struct ModeGroups {
    std::vector<ModeCluster> s0;  ///< sorted by mean wavenumber
    std::vector<ModeCluster> s1;
    /// Modes within `window` of a cluster that already holds a mode of the same molecule.
    std::vector<UnmatchedMode> unmatched;
};

inline constexpr double kDefaultMatchWindow = 2.0;  // cm^-1
inline constexpr double kDefaultPairWindow = 10.0;  // cm^-1, S0 <-> S1 cluster pairing

/// Greedy nearest-wavenumber clustering, per electronic state. Clusters are
/// seeded from the record with the most modes; the other records follow in
/// molecule_id order. A mode joins the nearest cluster whose mean lies within
/// `window` and that has no mode of the same molecule yet; a mode with no
/// cluster in reach starts a new one.
ModeGroups match_modes(const std::vector<MoleculeRecord>& records, double window = kDefaultMatchWindow);

struct StateStats {
    std::vector<std::string> molecule_ids;
    double mean_wavenumber = 0.0;
    Eigen::VectorXd wavenumber_deviations;
    double mean_gamma = 0.0;
    Eigen::VectorXd gamma_deviations;
    double mean_omega2 = 0.0;
    Eigen::VectorXd omega2_deviations;
    double wavenumber_spread = 0.0;  ///< max - min
    double gamma_spread = 0.0;
    double omega2_spread = 0.0;
    /// Fewer than two members: only the means are reported.
    bool suppressed = false;
};

struct ModeStats {
    double mode_label = 0.0;  ///< S0 mean wavenumber, or S1 mean when S0 is absent
    std::optional<StateStats> s0;
    std::optional<StateStats> s1;
    std::optional<double> s0_minus_s1_wavenumber;
};

struct StateSummary {
    int clusters_used = 0;
    double mean_wavenumber_spread = 0.0;
    double mean_gamma_spread = 0.0;
};

struct StatsReport {
    std::vector<ModeStats> modes;  ///< sorted by mode_label
    StateSummary s0;
    StateSummary s1;
    std::vector<std::string> flags;
};

/// Per-cluster means, signed deviations from the mean and spreads, S0/S1
/// pairing by nearest cluster mean within `pair_window`, and cross-mode
/// averages of the spreads over clusters with at least two members.
StatsReport mode_statistics(const ModeGroups& groups, double pair_window = kDefaultPairWindow);

StateStats state_statistics(const ModeCluster& cluster);

}  // namespace vibronic
