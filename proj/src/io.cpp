#include "vibronic/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vibronic/error.hpp"

namespace vibronic {

using nlohmann::json;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string line_error(int line, const std::string& what) { return "line " + std::to_string(line) + ": " + what; }

bool parse_cell(std::string_view cell, double& out) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

void write_spectrum(const Spectrum& spectrum, std::ostream& out) {
    if (spectrum.axis.size() != spectrum.values.size()) throw InputError("write_spectrum: axis and values differ in length");
    auto token_ok = [](const std::string& s) { return !s.empty() && s.find_first_of(" \t\n=,") == std::string::npos; };
    if (!token_ok(spectrum.axis_unit) || !token_ok(spectrum.value_unit))
        throw InputError("write_spectrum: units must be single tokens");
    out << "# kind=" << to_string(spectrum.kind) << " axis_unit=" << spectrum.axis_unit
        << " value_unit=" << spectrum.value_unit;
    for (const auto& [k, v] : spectrum.metadata) {
        if (!token_ok(k) || !token_ok(v)) throw InputError("write_spectrum: metadata '" + k + "' is not a single token");
        out << ' ' << k << '=' << v;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < spectrum.axis.size(); ++i)
        out << format_number(spectrum.axis[i]) << ',' << format_number(spectrum.values[i]) << '\n';
}

void write_spectrum(const Spectrum& spectrum, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_spectrum(spectrum, out);
}

Spectrum read_spectrum(std::istream& in) {
    Spectrum s;
    std::string line;
    if (!std::getline(in, line)) throw InputError(line_error(1, "missing header"));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) != 0) throw InputError(line_error(1, "missing header '# kind=... axis_unit=... value_unit=...'"));

    std::istringstream header(line.substr(2));
    std::set<std::string> required{"kind", "axis_unit", "value_unit"};
    for (std::string tok; header >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size())
            throw InputError(line_error(1, "malformed header token '" + tok + "'"));
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        if (key == "kind") {
            try {
                s.kind = parse_spectrum_kind(value);
            } catch (const InputError& e) {
                throw InputError(line_error(1, e.what()));
            }
        } else if (key == "axis_unit") {
            s.axis_unit = value;
        } else if (key == "value_unit") {
            s.value_unit = value;
        } else {
            s.metadata[key] = value;
        }
        required.erase(key);
    }
    if (!required.empty()) throw InputError(line_error(1, "header lacks '" + *required.begin() + "'"));

    std::vector<double> axis, values;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw InputError(line_error(line_no, "expected two comma-separated cells"));
        double a = 0, v = 0;
        if (!parse_cell(std::string_view(line).substr(0, comma), a) ||
            !parse_cell(std::string_view(line).substr(comma + 1), v))
            throw InputError(line_error(line_no, "non-numeric cell"));
        if (!axis.empty() && !(a > axis.back())) throw InputError(line_error(line_no, "axis is not strictly increasing"));
        axis.push_back(a);
        values.push_back(v);
    }
    if (axis.empty()) throw InputError(line_error(line_no + 1, "no data rows"));
    s.axis = Eigen::Map<Eigen::VectorXd>(axis.data(), Eigen::Index(axis.size()));
    s.values = Eigen::Map<Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
    return s;
}

Spectrum read_spectrum(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return read_spectrum(in);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Level scheme JSON

json scheme_to_json(const LevelScheme& scheme) {
    auto levels = [](const std::vector<VibronicLevel>& ls) {
        json arr = json::array();
        for (const auto& l : ls)
            arr.push_back({{"id", l.id},
                           {"wavenumber_cm1", l.wavenumber},
                           {"gamma_ghz", l.gamma_over_2pi},
                           {"relative_fc", l.relative_fc},
                           {"kind", std::string(to_string(l.kind))}});
        return arr;
    };
    return {{"zpl_frequency_thz", scheme.zpl_frequency_thz},
            {"t1_ns", scheme.t1_ns},
            {"baseline_sideband_cross_section", scheme.baseline_sideband_cross_section},
            {"s0_levels", levels(scheme.s0_levels)},
            {"s1_levels", levels(scheme.s1_levels)}};
}

namespace {

class SchemaReader {
public:
    explicit SchemaReader(std::string path) : path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw InputError("scheme JSON: " + join(key) + ": " + what);
    }

    void only_keys(const json& obj, std::initializer_list<const char*> allowed) const {
        if (!obj.is_object()) fail("", "expected an object");
        for (const auto& [k, v] : obj.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) fail(k, "unknown key");
        }
    }

    double number(const json& obj, const char* key, bool required = true, double fallback = 0.0) const {
        if (!obj.contains(key)) {
            if (required) fail(key, "missing");
            return fallback;
        }
        const auto& v = obj.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(key, "must be finite");
        return d;
    }

    std::string string(const json& obj, const char* key, bool required = true, const char* fallback = "") const {
        if (!obj.contains(key)) {
            if (required) fail(key, "missing");
            return fallback;
        }
        const auto& v = obj.at(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    SchemaReader child(const std::string& key) const { return SchemaReader(join(key)); }

private:
    std::string join(const std::string& key) const {
        if (key.empty()) return path_.empty() ? "$" : path_;
        if (path_.empty()) return key;
        return key.front() == '[' ? path_ + key : path_ + "." + key;
    }
    std::string path_;
};

}  // namespace

LevelScheme scheme_from_json(const json& j) {
    SchemaReader root("");
    root.only_keys(j, {"zpl_frequency_thz", "t1_ns", "baseline_sideband_cross_section", "s0_levels", "s1_levels"});

    LevelScheme scheme;
    scheme.zpl_frequency_thz = root.number(j, "zpl_frequency_thz");
    if (!(scheme.zpl_frequency_thz > 0)) root.fail("zpl_frequency_thz", "must be positive");
    scheme.t1_ns = root.number(j, "t1_ns");
    if (!(scheme.t1_ns > 0)) root.fail("t1_ns", "must be positive");
    scheme.baseline_sideband_cross_section = root.number(j, "baseline_sideband_cross_section", false, 0.0);
    if (scheme.baseline_sideband_cross_section < 0) root.fail("baseline_sideband_cross_section", "must be >= 0");

    std::set<std::string> ids;
    auto read_levels = [&](const char* key, ElectronicState state, std::vector<VibronicLevel>& out) {
        if (!j.contains(key)) return;
        const auto& arr = j.at(key);
        if (!arr.is_array()) root.fail(key, "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto r = root.child(std::string(key) + "[" + std::to_string(i) + "]");
            const auto& obj = arr[i];
            r.only_keys(obj, {"id", "wavenumber_cm1", "gamma_ghz", "relative_fc", "kind"});
            VibronicLevel l;
            l.state = state;
            l.id = r.string(obj, "id");
            if (l.id.empty()) r.fail("id", "must not be empty");
            if (l.id == kZplTarget) r.fail("id", "is reserved for the 00ZPL");
            if (!ids.insert(l.id).second) r.fail("id", "duplicate level id '" + l.id + "'");
            l.wavenumber = r.number(obj, "wavenumber_cm1");
            if (!(l.wavenumber > 0)) r.fail("wavenumber_cm1", "must be positive");
            l.gamma_over_2pi = r.number(obj, "gamma_ghz");
            if (!(l.gamma_over_2pi > 0)) r.fail("gamma_ghz", "must be positive");
            l.relative_fc = r.number(obj, "relative_fc", false, 1.0);
            if (!(l.relative_fc >= 0 && l.relative_fc <= 1)) r.fail("relative_fc", "must lie in [0, 1]");
            try {
                l.kind = parse_level_kind(r.string(obj, "kind", false, "fundamental"));
            } catch (const InputError& e) {
                r.fail("kind", e.what());
            }
            out.push_back(std::move(l));
        }
    };
    read_levels("s0_levels", ElectronicState::S0, scheme.s0_levels);
    read_levels("s1_levels", ElectronicState::S1, scheme.s1_levels);
    return scheme;
}

json read_json_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": invalid JSON: " + e.what());
    }
}

LevelScheme read_scheme(const std::filesystem::path& path) {
    try {
        return scheme_from_json(read_json_file(path));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_scheme(const LevelScheme& scheme, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << scheme_to_json(scheme).dump(2) << '\n';
}

// ---------------------------------------------------------------------------

json fit_result_to_json(const FitResult& r) {
    json params = json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        const auto k = Eigen::Index(i);
        const double sigma = r.sigmas.size() > k ? r.sigmas[k] : 0.0;
        params[r.names[i]] = {{"value", r.estimates[k]}, {"sigma", std::isfinite(sigma) ? json(sigma) : json(nullptr)}};
    }
    json cov = json::array();
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) row.push_back(r.covariance(i, j));
        cov.push_back(row);
    }
    return {{"model", r.model},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"residual_norm", r.residual_norm},
            {"message", r.message},
            {"names", r.names},
            {"parameters", params},
            {"fixed", r.fixed_parameters},
            {"covariance", cov}};
}

// ---------------------------------------------------------------------------
// Molecule records

namespace {

std::vector<ModeEntry> modes_from_json(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw InputError(where + ": expected an array");
    std::vector<ModeEntry> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& m = arr[i];
        const std::string path = where + "[" + std::to_string(i) + "]";
        if (!m.is_object()) throw InputError(path + ": expected an object");
        for (const auto& [k, v] : m.items())
            if (k != "wavenumber_cm1" && k != "gamma_ghz" && k != "relative_omega2")
                throw InputError(path + "." + k + ": unknown key");
        auto num = [&](const char* key) {
            if (!m.contains(key) || !m.at(key).is_number()) throw InputError(path + "." + key + ": expected a number");
            return m.at(key).get<double>();
        };
        ModeEntry e{num("wavenumber_cm1"), num("gamma_ghz"), num("relative_omega2")};
        if (!(e.wavenumber > 0)) throw InputError(path + ".wavenumber_cm1: must be positive");
        if (!(e.gamma_ghz > 0)) throw InputError(path + ".gamma_ghz: must be positive");
        if (!(e.relative_omega2 >= 0)) throw InputError(path + ".relative_omega2: must be >= 0");
        out.push_back(e);
    }
    return out;
}

json modes_to_json(const std::vector<ModeEntry>& modes) {
    json arr = json::array();
    for (const auto& m : modes)
        arr.push_back({{"wavenumber_cm1", m.wavenumber}, {"gamma_ghz", m.gamma_ghz}, {"relative_omega2", m.relative_omega2}});
    return arr;
}

}  // namespace

std::vector<MoleculeRecord> records_from_json(const json& j) {
    const json* arr = &j;
    if (j.is_object()) {
        if (!j.contains("molecules")) throw InputError("records JSON: expected an array or {\"molecules\": [...]}");
        arr = &j.at("molecules");
    }
    if (!arr->is_array()) throw InputError("records JSON: molecules must be an array");
    std::vector<MoleculeRecord> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const auto& r = (*arr)[i];
        const std::string path = "molecules[" + std::to_string(i) + "]";
        if (!r.is_object()) throw InputError(path + ": expected an object");
        for (const auto& [k, v] : r.items())
            if (k != "molecule_id" && k != "sample_id" && k != "s0_modes" && k != "s1_modes" && k != "provenance")
                throw InputError(path + "." + k + ": unknown key");
        MoleculeRecord rec;
        if (!r.contains("molecule_id") || !r.at("molecule_id").is_string())
            throw InputError(path + ".molecule_id: expected a string");
        rec.molecule_id = r.at("molecule_id").get<std::string>();
        if (r.contains("sample_id")) {
            if (!r.at("sample_id").is_string()) throw InputError(path + ".sample_id: expected a string");
            rec.sample_id = r.at("sample_id").get<std::string>();
        }
        if (r.contains("s0_modes")) rec.s0_modes = modes_from_json(r.at("s0_modes"), path + ".s0_modes");
        if (r.contains("s1_modes")) rec.s1_modes = modes_from_json(r.at("s1_modes"), path + ".s1_modes");
        if (r.contains("provenance")) {
            const auto& p = r.at("provenance");
            try {
                if (p.contains("sources")) rec.sources = p.at("sources").get<std::vector<std::string>>();
                if (p.contains("powers")) rec.powers = p.at("powers").get<std::map<std::string, double>>();
            } catch (const json::exception&) {
                throw InputError(path + ".provenance: expected sources (strings) and powers (numbers)");
            }
        }
        normalize_omega2(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

json records_to_json(const std::vector<MoleculeRecord>& records) {
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back({{"molecule_id", r.molecule_id},
                       {"sample_id", r.sample_id},
                       {"s0_modes", modes_to_json(r.s0_modes)},
                       {"s1_modes", modes_to_json(r.s1_modes)},
                       {"provenance", {{"sources", r.sources}, {"powers", r.powers}}}});
    return {{"molecules", arr}};
}

std::vector<MoleculeRecord> read_records(const std::filesystem::path& path) {
    try {
        return records_from_json(read_json_file(path));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json state_json(const StateStats& s) {
    json out = {{"molecule_ids", s.molecule_ids},
                {"mean_wavenumber_cm1", s.mean_wavenumber},
                {"mean_gamma_ghz", s.mean_gamma},
                {"mean_relative_omega2", s.mean_omega2},
                {"suppressed", s.suppressed}};
    if (!s.suppressed) {
        out["wavenumber_deviations_cm1"] = vec_json(s.wavenumber_deviations);
        out["gamma_deviations_ghz"] = vec_json(s.gamma_deviations);
        out["omega2_deviations"] = vec_json(s.omega2_deviations);
        out["wavenumber_spread_cm1"] = s.wavenumber_spread;
        out["gamma_spread_ghz"] = s.gamma_spread;
        out["omega2_spread"] = s.omega2_spread;
    }
    return out;
}

json summary_json(const StateSummary& s) {
    return {{"clusters_used", s.clusters_used},
            {"mean_wavenumber_spread_cm1", s.mean_wavenumber_spread},
            {"mean_gamma_spread_ghz", s.mean_gamma_spread}};
}

}  // namespace

json stats_to_json(const StatsReport& report, const ModeGroups& groups) {
    json modes = json::array();
    for (const auto& m : report.modes) {
        json entry = {{"mode_label_cm1", m.mode_label}};
        entry["S0"] = m.s0 ? state_json(*m.s0) : json(nullptr);
        entry["S1"] = m.s1 ? state_json(*m.s1) : json(nullptr);
        entry["s0_minus_s1_cm1"] = m.s0_minus_s1_wavenumber ? json(*m.s0_minus_s1_wavenumber) : json(nullptr);
        modes.push_back(entry);
    }
    json unmatched = json::array();
    for (const auto& u : groups.unmatched)
        unmatched.push_back({{"state", std::string(to_string(u.state))},
                             {"molecule_id", u.molecule_id},
                             {"wavenumber_cm1", u.mode.wavenumber},
                             {"gamma_ghz", u.mode.gamma_ghz},
                             {"relative_omega2", u.mode.relative_omega2}});
    return {{"modes", modes},
            {"summary", {{"S0", summary_json(report.s0)}, {"S1", summary_json(report.s1)}}},
            {"unmatched", unmatched},
            {"flags", report.flags}};
}

void write_stats_csv(const StatsReport& report, std::ostream& out) {
    out << "mode_label_cm1,state,molecule_id,wavenumber_deviation_cm1,gamma_ghz,gamma_deviation_ghz,relative_omega2,"
           "omega2_deviation,s0_minus_s1_cm1\n";
    for (const auto& m : report.modes) {
        const std::string diff = m.s0_minus_s1_wavenumber ? format_number(*m.s0_minus_s1_wavenumber) : "";
        for (auto [state, stats] : {std::pair{ElectronicState::S0, &m.s0}, std::pair{ElectronicState::S1, &m.s1}}) {
            if (!*stats || (*stats)->suppressed) continue;
            const auto& s = **stats;
            for (std::size_t i = 0; i < s.molecule_ids.size(); ++i) {
                const auto k = Eigen::Index(i);
                out << format_number(m.mode_label) << ',' << to_string(state) << ',' << s.molecule_ids[i] << ','
                    << format_number(s.wavenumber_deviations[k]) << ','
                    << format_number(s.mean_gamma + s.gamma_deviations[k]) << ','
                    << format_number(s.gamma_deviations[k]) << ','
                    << format_number(s.mean_omega2 + s.omega2_deviations[k]) << ','
                    << format_number(s.omega2_deviations[k]) << ',' << diff << '\n';
            }
        }
    }
}

void write_sticks_csv(const std::vector<VibronicStick>& sticks, std::ostream& out) {
    out << "wavenumber_cm1,intensity,quanta\n";
    for (const auto& s : sticks) {
        std::string q;
        for (const auto& [id, n] : s.quanta) {
            if (!q.empty()) q += ';';
            q += std::to_string(id) + ":" + std::to_string(n);
        }
        out << format_number(s.wavenumber) << ',' << format_number(s.intensity) << ',' << q << '\n';
    }
}

}  // namespace vibronic
