#include "vibronic/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "vibronic/error.hpp"

namespace vibronic {

void normalize_omega2(MoleculeRecord& record) {
    for (auto* modes : {&record.s0_modes, &record.s1_modes}) {
        double largest = 0.0;
        for (const auto& m : *modes) largest = std::max(largest, m.relative_omega2);
        if (largest > 0)
            for (auto& m : *modes) m.relative_omega2 /= largest;
    }
}

double ModeCluster::mean_wavenumber() const {
    if (members.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& m : members) sum += m.mode.wavenumber;
    return sum / double(members.size());
}

bool ModeCluster::contains(const std::string& molecule_id) const {
    return std::any_of(members.begin(), members.end(),
                       [&](const ClusterMember& m) { return m.molecule_id == molecule_id; });
}

namespace {

std::vector<ModeEntry> sorted_modes(const std::vector<ModeEntry>& modes) {
    auto out = modes;
    std::stable_sort(out.begin(), out.end(),
                     [](const ModeEntry& a, const ModeEntry& b) { return a.wavenumber < b.wavenumber; });
    return out;
}

void cluster_state(const std::vector<const MoleculeRecord*>& records, ElectronicState state, double window,
                   std::vector<ModeCluster>& clusters, std::vector<UnmatchedMode>& unmatched) {
    if (records.empty()) return;
    // Seed from the record with the most modes; ties go to the smaller molecule_id.
    std::size_t seed = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i]->modes(state).size() > records[seed]->modes(state).size()) seed = i;

    for (const auto& m : sorted_modes(records[seed]->modes(state)))
        clusters.push_back({state, {{records[seed]->molecule_id, m}}});

    for (std::size_t r = 0; r < records.size(); ++r) {
        if (r == seed) continue;
        const auto& rec = *records[r];
        const auto modes = sorted_modes(rec.modes(state));
        std::vector<double> means;
        for (const auto& c : clusters) means.push_back(c.mean_wavenumber());

        // (distance, mode, cluster) candidates, assigned closest first.
        std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
        std::vector<bool> in_reach(modes.size(), false);
        for (std::size_t i = 0; i < modes.size(); ++i)
            for (std::size_t c = 0; c < clusters.size(); ++c) {
                const double d = std::abs(modes[i].wavenumber - means[c]);
                if (d > window) continue;
                in_reach[i] = true;
                if (!clusters[c].contains(rec.molecule_id)) pairs.emplace_back(d, i, c);
            }
        std::sort(pairs.begin(), pairs.end());

        std::vector<bool> mode_done(modes.size(), false);
        std::vector<bool> cluster_taken(clusters.size(), false);
        for (const auto& [d, i, c] : pairs) {
            if (mode_done[i] || cluster_taken[c]) continue;
            clusters[c].members.push_back({rec.molecule_id, modes[i]});
            mode_done[i] = true;
            cluster_taken[c] = true;
        }
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (mode_done[i]) continue;
            if (in_reach[i])
                unmatched.push_back({state, rec.molecule_id, modes[i]});
            else
                clusters.push_back({state, {{rec.molecule_id, modes[i]}}});
        }
    }

    for (auto& c : clusters)
        std::sort(c.members.begin(), c.members.end(),
                  [](const ClusterMember& a, const ClusterMember& b) { return a.molecule_id < b.molecule_id; });
    std::stable_sort(clusters.begin(), clusters.end(), [](const ModeCluster& a, const ModeCluster& b) {
        return a.mean_wavenumber() < b.mean_wavenumber();
    });
}

}  // namespace

ModeGroups match_modes(const std::vector<MoleculeRecord>& records, double window) {
    if (!(window > 0)) throw InputError("match_modes: window must be positive");
    std::vector<const MoleculeRecord*> ordered;
    for (const auto& r : records) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const MoleculeRecord* a, const MoleculeRecord* b) { return a->molecule_id < b->molecule_id; });
    for (std::size_t i = 1; i < ordered.size(); ++i)
        if (ordered[i]->molecule_id == ordered[i - 1]->molecule_id)
            throw InputError("match_modes: duplicate molecule_id '" + ordered[i]->molecule_id + "'");

    ModeGroups groups;
    cluster_state(ordered, ElectronicState::S0, window, groups.s0, groups.unmatched);
    cluster_state(ordered, ElectronicState::S1, window, groups.s1, groups.unmatched);
    return groups;
}

StateStats state_statistics(const ModeCluster& cluster) {
    StateStats s;
    const Eigen::Index n = Eigen::Index(cluster.members.size());
    if (n == 0) throw InputError("state_statistics: empty cluster");
    Eigen::VectorXd w(n), g(n), o(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = cluster.members[std::size_t(i)];
        s.molecule_ids.push_back(m.molecule_id);
        w[i] = m.mode.wavenumber;
        g[i] = m.mode.gamma_ghz;
        o[i] = m.mode.relative_omega2;
    }
    s.mean_wavenumber = w.mean();
    s.mean_gamma = g.mean();
    s.mean_omega2 = o.mean();
    if (n < 2) {
        s.suppressed = true;
        return s;
    }
    s.wavenumber_deviations = w.array() - s.mean_wavenumber;
    s.gamma_deviations = g.array() - s.mean_gamma;
    s.omega2_deviations = o.array() - s.mean_omega2;
    s.wavenumber_spread = w.maxCoeff() - w.minCoeff();
    s.gamma_spread = g.maxCoeff() - g.minCoeff();
    s.omega2_spread = o.maxCoeff() - o.minCoeff();
    return s;
}

StatsReport mode_statistics(const ModeGroups& groups, double pair_window) {
    if (!(pair_window >= 0)) throw InputError("mode_statistics: pair window must be non-negative");
    StatsReport report;

    // Pair S0 and S1 clusters, closest means first.
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < groups.s0.size(); ++i)
        for (std::size_t j = 0; j < groups.s1.size(); ++j) {
            const double d = std::abs(groups.s0[i].mean_wavenumber() - groups.s1[j].mean_wavenumber());
            if (d <= pair_window) pairs.emplace_back(d, i, j);
        }
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> partner_of_s0(groups.s0.size(), -1);
    std::vector<bool> s1_used(groups.s1.size(), false);
    for (const auto& [d, i, j] : pairs) {
        if (partner_of_s0[i] >= 0 || s1_used[j]) continue;
        partner_of_s0[i] = int(j);
        s1_used[j] = true;
    }

    auto flag_if_suppressed = [&](const StateStats& s, ElectronicState state) {
        if (s.suppressed) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%s cluster at %.3f cm-1 has a single member; deviations suppressed",
                          std::string(to_string(state)).c_str(), s.mean_wavenumber);
            report.flags.emplace_back(buf);
        }
    };

    for (std::size_t i = 0; i < groups.s0.size(); ++i) {
        ModeStats ms;
        ms.s0 = state_statistics(groups.s0[i]);
        flag_if_suppressed(*ms.s0, ElectronicState::S0);
        ms.mode_label = ms.s0->mean_wavenumber;
        if (partner_of_s0[i] >= 0) {
            ms.s1 = state_statistics(groups.s1[std::size_t(partner_of_s0[i])]);
            flag_if_suppressed(*ms.s1, ElectronicState::S1);
            ms.s0_minus_s1_wavenumber = ms.s0->mean_wavenumber - ms.s1->mean_wavenumber;
        }
        report.modes.push_back(std::move(ms));
    }
    for (std::size_t j = 0; j < groups.s1.size(); ++j) {
        if (s1_used[j]) continue;
        ModeStats ms;
        ms.s1 = state_statistics(groups.s1[j]);
        flag_if_suppressed(*ms.s1, ElectronicState::S1);
        ms.mode_label = ms.s1->mean_wavenumber;
        report.modes.push_back(std::move(ms));
    }
    std::stable_sort(report.modes.begin(), report.modes.end(),
                     [](const ModeStats& a, const ModeStats& b) { return a.mode_label < b.mode_label; });

    auto summarize = [&](auto member) {
        StateSummary sum;
        for (const auto& m : report.modes) {
            const std::optional<StateStats>& s = m.*member;
            if (!s || s->suppressed) continue;
            ++sum.clusters_used;
            sum.mean_wavenumber_spread += s->wavenumber_spread;
            sum.mean_gamma_spread += s->gamma_spread;
        }
        if (sum.clusters_used > 0) {
            sum.mean_wavenumber_spread /= sum.clusters_used;
            sum.mean_gamma_spread /= sum.clusters_used;
        }
        return sum;
    };
    report.s0 = summarize(&ModeStats::s0);
    report.s1 = summarize(&ModeStats::s1);
    return report;
}

}  // namespace vibronic
