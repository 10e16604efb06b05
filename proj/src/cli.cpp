#include "vibronic/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vibronic/error.hpp"
#include "vibronic/fcmodel.hpp"
#include "vibronic/fitmodels.hpp"
#include "vibronic/io.hpp"
#include "vibronic/ratesim.hpp"
#include "vibronic/stats.hpp"
#include "vibronic/units.hpp"

namespace vibronic {

namespace {

using nlohmann::json;

// Writes through `fn` to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    fn(f);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_numbers(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError("'" + item + "' is not a number");
        }
    }
    return out;
}

// Turns a JSON config object into command-line tokens; arrays become comma lists.
std::vector<std::string> config_tokens(const json& cfg) {
    if (!cfg.is_object()) throw InputError("config: expected a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            tokens.push_back(flag);
            tokens.push_back(joined);
        } else if (value.is_string()) {
            tokens.push_back(flag);
            tokens.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            tokens.push_back(flag);
            tokens.push_back(value.is_number_float() ? format_number(value.get<double>()) : value.dump());
        } else {
            throw InputError("config: unsupported value for '" + key + "'");
        }
    }
    return tokens;
}

// Default pump target: the S1 level with the largest relative_fc, else the 00ZPL.
std::string strongest_s1(const LevelScheme& scheme) {
    const VibronicLevel* best = nullptr;
    for (const auto& l : scheme.s1_levels)
        if (!best || l.relative_fc > best->relative_fc) best = &l;
    return best ? best->id : std::string(kZplTarget);
}

std::string strongest_s0(const LevelScheme& scheme) {
    const VibronicLevel* best = nullptr;
    for (const auto& l : scheme.s0_levels)
        if (!best || l.relative_fc > best->relative_fc) best = &l;
    if (!best) throw InputError("the scheme has no S0 levels to deplete into");
    return best->id;
}

struct ScanFlags {
    double span_ghz = 0.0;
    double from_cm1 = 0.0;
    double to_cm1 = 0.0;
    int points = 2001;
    double dwell = 0.0;
    std::uint64_t seed = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--span-ghz", span_ghz, "Full detuning span around the target, GHz");
        cmd->add_option("--from-cm1", from_cm1, "Absolute scan start, cm^-1 from the 00ZPL");
        cmd->add_option("--to-cm1", to_cm1, "Absolute scan end, cm^-1 from the 00ZPL");
        cmd->add_option("--points", points, "Number of scan points")->capture_default_str();
        cmd->add_option("--dwell", dwell, "Expected counts at unit signal; enables Poisson noise");
        cmd->add_option("--seed", seed, "Noise seed")->capture_default_str();
    }

    bool ghz() const { return span_ghz > 0; }

    Eigen::VectorXd axis() const {
        if (points < 2) throw InputError("--points must be at least 2");
        if (ghz()) return linear_axis(-0.5 * span_ghz, 0.5 * span_ghz, points);
        if (!(to_cm1 > from_cm1)) throw InputError("give --span-ghz, or --from-cm1 and --to-cm1 with from < to");
        return linear_axis(from_cm1, to_cm1, points);
    }

    Spectrum maybe_noise(Spectrum s) const {
        if (dwell > 0) return add_noise(s, seed, dwell);
        return s;
    }
};

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(std::vector<std::string> args) {
        args = expand_config(std::move(args));

        CLI::App app{"Vibronic single-molecule spectroscopy toolkit", "vibronic"};
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        app.require_subcommand(1);
        app.set_help_all_flag("--help-all", "Show help for all subcommands");
        build(app);

        if (!args.empty() && args.front().rfind('-', 0) != 0 && !app.get_subcommand_no_throw(args.front())) {
            err_ << "error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
            return exit_code::input_error;
        }
        try {
            std::reverse(args.begin(), args.end());
            app.parse(args);
        } catch (const CLI::CallForHelp&) {
            out_ << app.help();
            return exit_code::ok;
        } catch (const CLI::CallForAllHelp&) {
            out_ << app.help("", CLI::AppFormatMode::All);
            return exit_code::ok;
        } catch (const CLI::ParseError& e) {
            err_ << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
            return exit_code::input_error;
        }
        return action_();
    }

private:
    std::vector<std::string> expand_config(std::vector<std::string> args) {
        auto it = std::find(args.begin(), args.end(), "--config");
        if (it == args.end()) return args;
        if (std::next(it) == args.end()) throw InputError("--config needs a file");
        const auto tokens = config_tokens(read_json_file(*std::next(it)));
        args.erase(it, std::next(it, 2));
        // Config values go right after the subcommand names so that explicit flags win.
        const auto first_flag =
            std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind('-', 0) == 0; });
        args.insert(first_flag, tokens.begin(), tokens.end());
        return args;
    }

    void build(CLI::App& app) {
        auto* simulate = app.add_subcommand("simulate", "Simulate spectra from a level scheme");
        simulate->require_subcommand(1);
        build_simulate_fluorex(simulate);
        build_simulate_sted(simulate);
        build_simulate_saturation(simulate);

        auto* fit = app.add_subcommand("fit", "Fit spectra");
        fit->require_subcommand(1);
        build_fit_lorentzian(fit);
        build_fit_ratemodel(fit);
        build_fit_saturation(fit);

        auto* stats = app.add_subcommand("stats", "Cross-molecule statistics");
        stats->require_subcommand(1);
        build_stats_modes(stats);

        auto* fc = app.add_subcommand("fc", "Franck-Condon predictions");
        fc->require_subcommand(1);
        build_fc_predict(fc);

        build_convert(app);
    }

    void build_simulate_fluorex(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("fluorex", "Fluorescence-excitation spectrum");
        cmd->add_option("--scheme", scheme_path_, "Level scheme JSON")->required();
        cmd->add_option("--sp", sp_, "Pump saturation parameter")->capture_default_str();
        cmd->add_option("--target", target_, "Level id (or 00ZPL) the GHz span is centered on");
        scan_.add(cmd);
        cmd->add_option("--out", out_path_, "Spectrum CSV");
        cmd->callback([this] {
            action_ = [this] {
                const auto scheme = read_scheme(scheme_path_);
                FluorexScan scan;
                scan.saturation = sp_;
                scan.axis = scan_.axis();
                if (scan_.ghz()) scan.target = target_.empty() ? strongest_s1(scheme) : target_;
                const auto spectrum = scan_.maybe_noise(fluorex_spectrum(scheme, scan));
                emit(out_path_, out_, [&](std::ostream& o) { write_spectrum(spectrum, o); });
                return exit_code::ok;
            };
        });
    }

    void build_simulate_sted(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("sted", "Stimulated-emission-depletion spectrum");
        cmd->add_option("--scheme", scheme_path_, "Level scheme JSON")->required();
        cmd->add_option("--sp", sp_, "Pump saturation parameter")->capture_default_str();
        cmd->add_option("--sd", sd_, "Depletion saturation parameter")->capture_default_str();
        cmd->add_option("--pump-target", pump_target_, "S1 level id or 00ZPL; defaults to the strongest S1 level");
        cmd->add_option("--target", target_, "S0 level id the GHz span is centered on");
        scan_.add(cmd);
        cmd->add_option("--out", out_path_, "Spectrum CSV");
        cmd->callback([this] {
            action_ = [this] {
                const auto scheme = read_scheme(scheme_path_);
                const LaserDrive pump{LaserRole::pump, pump_target_.empty() ? strongest_s1(scheme) : pump_target_,
                                      0.0, sp_};
                StedScan scan;
                scan.saturation = sd_;
                scan.axis = scan_.axis();
                if (scan_.ghz()) scan.target = target_.empty() ? strongest_s0(scheme) : target_;
                const auto spectrum = scan_.maybe_noise(sted_spectrum(scheme, pump, scan));
                emit(out_path_, out_, [&](std::ostream& o) { write_spectrum(spectrum, o); });
                return exit_code::ok;
            };
        });
    }

    void build_simulate_saturation(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("saturation", "On-resonance saturation curve");
        cmd->add_option("--scheme", scheme_path_, "Level scheme JSON")->required();
        cmd->add_option("--pump-target", pump_target_, "S1 level id or 00ZPL; defaults to the strongest S1 level");
        cmd->add_option("--p-sat", p_sat_, "Saturation power (any unit)")->required();
        cmd->add_option("--powers", powers_, "Comma-separated increasing powers");
        cmd->add_option("--p-min", p_min_, "Smallest power of a log-spaced sweep");
        cmd->add_option("--p-max", p_max_, "Largest power of a log-spaced sweep");
        cmd->add_option("--points", points_, "Points of the log-spaced sweep")->capture_default_str();
        cmd->add_option("--scale", scale_, "Count rate at full saturation (R_inf)")->capture_default_str();
        cmd->add_option("--dwell", scan_.dwell, "Expected counts at unit signal; enables Poisson noise");
        cmd->add_option("--seed", scan_.seed, "Noise seed")->capture_default_str();
        cmd->add_option("--out", out_path_, "Spectrum CSV");
        cmd->callback([this] {
            action_ = [this] {
                const auto scheme = read_scheme(scheme_path_);
                Eigen::VectorXd powers;
                if (!powers_.empty()) {
                    const auto v = parse_numbers(powers_);
                    powers = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
                } else {
                    if (!(p_min_ > 0 && p_max_ > p_min_) || points_ < 2)
                        throw InputError("give --powers, or --p-min > 0, --p-max > p-min and --points >= 2");
                    powers = Eigen::VectorXd::LinSpaced(points_, std::log10(p_min_), std::log10(p_max_))
                                 .unaryExpr([](double e) { return std::pow(10.0, e); });
                }
                auto spectrum = saturation_curve(scheme, pump_target_.empty() ? strongest_s1(scheme) : pump_target_,
                                                 powers, p_sat_);
                if (scale_ != 1.0) {
                    spectrum.values *= scale_;
                    spectrum.value_unit = "rate";
                }
                spectrum = scan_.maybe_noise(spectrum);
                emit(out_path_, out_, [&](std::ostream& o) { write_spectrum(spectrum, o); });
                return exit_code::ok;
            };
        });
    }

    int finish_fit(const FitResult& result) {
        emit(out_path_, out_, [&](std::ostream& o) { o << fit_result_to_json(result).dump(2) << '\n'; });
        if (!result.converged) {
            err_ << "fit did not converge: " << result.message << '\n';
            return exit_code::not_converged;
        }
        return exit_code::ok;
    }

    void build_fit_lorentzian(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("lorentzian", "Multi-Lorentzian fit with constant baseline");
        cmd->add_option("--in", in_path_, "Spectrum CSV")->required();
        cmd->add_option("--peaks", peaks_, "Number of peaks")->capture_default_str();
        cmd->add_option("--max-iter", max_iter_, "Iteration limit")->capture_default_str();
        cmd->add_option("--out", out_path_, "FitResult JSON");
        cmd->callback([this] {
            action_ = [this] {
                LmOptions lm;
                lm.max_iter = max_iter_;
                return finish_fit(fit_lorentzian_multi(read_spectrum(in_path_), peaks_, std::nullopt, lm));
            };
        });
    }

    void build_fit_ratemodel(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("ratemodel", "Rate-equation fit of a fluorex or STED spectrum");
        cmd->add_option("--in", in_path_, "Spectrum CSV")->required();
        cmd->add_option("--scheme", scheme_path_, "Template level scheme JSON")->required();
        cmd->add_option("--free", free_, "Comma-separated free parameters, e.g. w1.gamma,w1.wavenumber,scale")
            ->required();
        cmd->add_option("--sp", sp_opt_, "Pump saturation (default: from the spectrum header)");
        cmd->add_option("--sd", sd_opt_, "Depletion saturation (default: from the spectrum header)");
        cmd->add_option("--pump-target", pump_target_, "Pump target (default: from the spectrum header)");
        cmd->add_option("--target", target_, "Scan target for GHz axes (default: from the spectrum header)");
        cmd->add_option("--scale", scale_, "Signal scale when scale is not free")->capture_default_str();
        cmd->add_option("--max-iter", max_iter_, "Iteration limit")->capture_default_str();
        cmd->add_option("--out", out_path_, "FitResult JSON");
        cmd->callback([this] {
            action_ = [this] {
                const auto spectrum = read_spectrum(in_path_);
                const auto scheme = read_scheme(scheme_path_);
                RateFitConfig cfg;
                cfg.pump_saturation = sp_opt_;
                cfg.depletion_saturation = sd_opt_;
                if (!pump_target_.empty()) cfg.pump_target = pump_target_;
                if (!target_.empty()) cfg.scan_target = target_;
                cfg.scale = scale_;
                cfg.lm.max_iter = max_iter_;
                return finish_fit(fit_rate_model(spectrum, scheme, split_list(free_), cfg));
            };
        });
    }

    void build_fit_saturation(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("saturation", "Fit R_inf * S / (1 + S) with S = P / P_sat");
        cmd->add_option("--in", in_path_, "Saturation CSV (axis = power, value = rate)")->required();
        cmd->add_option("--max-iter", max_iter_, "Iteration limit")->capture_default_str();
        cmd->add_option("--out", out_path_, "FitResult JSON");
        cmd->callback([this] {
            action_ = [this] {
                const auto s = read_spectrum(in_path_);
                LmOptions lm;
                lm.max_iter = max_iter_;
                return finish_fit(fit_saturation(s.axis, s.values, lm));
            };
        });
    }

    void build_stats_modes(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("modes", "Match modes across molecules and summarize them");
        cmd->add_option("--in", in_path_, "Molecule records JSON")->required();
        cmd->add_option("--window", window_, "Matching window, cm^-1")->capture_default_str();
        cmd->add_option("--pair-window", pair_window_, "S0/S1 pairing window, cm^-1")->capture_default_str();
        cmd->add_option("--out", out_path_, "ModeStats JSON");
        cmd->add_option("--csv", csv_path_, "Plot-ready CSV");
        cmd->callback([this] {
            action_ = [this] {
                const auto records = read_records(in_path_);
                const auto groups = match_modes(records, window_);
                const auto report = mode_statistics(groups, pair_window_);
                emit(out_path_, out_, [&](std::ostream& o) { o << stats_to_json(report, groups).dump(2) << '\n'; });
                if (!csv_path_.empty()) emit(csv_path_, out_, [&](std::ostream& o) { write_stats_csv(report, o); });
                return exit_code::ok;
            };
        });
    }

    void build_fc_predict(CLI::App* parent) {
        auto* cmd = parent->add_subcommand("predict", "Stick spectrum (and optional broadening) from a mode list");
        cmd->add_option("--in", in_path_, "Modes CSV: mode_id,wavenumber_cm1,value,alpha|intensity")->required();
        cmd->add_option("--max-quanta", max_quanta_, "Largest total number of quanta")->capture_default_str();
        cmd->add_option("--max-sticks", max_sticks_, "Enumeration budget")->capture_default_str();
        cmd->add_option("--slope", slope_, "Frequency scaling slope")->capture_default_str();
        cmd->add_option("--intercept", intercept_, "Frequency scaling intercept, cm^-1")->capture_default_str();
        cmd->add_option("--out", out_path_, "Sticks CSV");
        cmd->add_option("--broaden-ghz", broaden_ghz_, "Lorentzian FWHM for the broadened spectrum, GHz");
        cmd->add_option("--from-cm1", scan_.from_cm1, "Broadened axis start, cm^-1");
        cmd->add_option("--to-cm1", scan_.to_cm1, "Broadened axis end, cm^-1");
        cmd->add_option("--points", scan_.points, "Broadened axis points")->capture_default_str();
        cmd->add_option("--spectrum-out", spectrum_out_, "Broadened spectrum CSV");
        cmd->callback([this] {
            action_ = [this] {
                std::ifstream in(in_path_);
                if (!in) throw InputError("cannot open '" + in_path_ + "'");
                auto modes = apply_scaling(read_modes_csv(in), slope_, intercept_);
                const auto sticks = relative_intensities(modes, max_quanta_, max_sticks_);
                emit(out_path_, out_, [&](std::ostream& o) { write_sticks_csv(sticks, o); });
                if (broaden_ghz_ > 0) {
                    const double gamma[] = {broaden_ghz_};
                    const auto spectrum = stick_to_spectrum(sticks, gamma, scan_.axis());
                    emit(spectrum_out_, out_, [&](std::ostream& o) { write_spectrum(spectrum, o); });
                }
                return exit_code::ok;
            };
        });
    }

    void build_convert(CLI::App& app) {
        auto* cmd = app.add_subcommand("convert", "Convert a value between units");
        cmd->add_option("--value", value_, "Value to convert")->required();
        cmd->add_option("--from", from_unit_, "Source unit, e.g. frequency_GHz")->required();
        cmd->add_option("--to", to_unit_, "Target unit, e.g. time_ps")->required();
        cmd->add_option("--relation", relation_, "direct or lifetime")->capture_default_str();
        cmd->add_option("--out", out_path_, "Output file");
        cmd->callback([this] {
            action_ = [this] {
                const Quantity q{value_, parse_unit(from_unit_)};
                const auto r = convert(q, parse_unit(to_unit_), parse_relation(relation_));
                emit(out_path_, out_, [&](std::ostream& o) { o << format_number(r.value) << ' ' << unit_name(r.unit) << '\n'; });
                return exit_code::ok;
            };
        });
    }

    std::ostream& out_;
    std::ostream& err_;
    std::function<int()> action_ = [] { return exit_code::input_error; };

    std::string scheme_path_, in_path_, out_path_, csv_path_, spectrum_out_;
    std::string target_, pump_target_, free_, powers_;
    std::string from_unit_, to_unit_, relation_ = "direct";
    double sp_ = 1.0, sd_ = 1.0, p_sat_ = 1.0, p_min_ = 0.0, p_max_ = 0.0, scale_ = 1.0;
    std::optional<double> sp_opt_, sd_opt_;
    double window_ = kDefaultMatchWindow, pair_window_ = kDefaultPairWindow;
    double slope_ = 1.0, intercept_ = 0.0, broaden_ghz_ = 0.0, value_ = 0.0;
    int points_ = 50, peaks_ = 1, max_iter_ = 200, max_quanta_ = 2;
    std::size_t max_sticks_ = 1'000'000;
    ScanFlags scan_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        Cli cli(out, err);
        return cli.run(args);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::input_error;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::input_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_code::not_converged;
    }
}

}  // namespace vibronic
