#include "vibronic/fitmodels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vibronic/lineshape.hpp"
#include "vibronic/ratesim.hpp"
#include "vibronic/units.hpp"

namespace vibronic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd moving_average(const Eigen::VectorXd& y, int window) {
    if (window <= 1) return y;
    const int half = window / 2;
    const Eigen::Index n = y.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        out[i] = y.segment(lo, hi - lo + 1).mean();
    }
    return out;
}

// Axis position where the segment [i, j] crosses `level`, by linear interpolation.
double crossing(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::Index i, Eigen::Index j, double level) {
    const double dy = y[j] - y[i];
    if (dy == 0) return x[i];
    return x[i] + (level - y[i]) * (x[j] - x[i]) / dy;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("cannot read " + what + " from '" + s + "'");
    }
}

}  // namespace

std::vector<Peak> detect_peaks(const Spectrum& spectrum, const PeakSearch& search) {
    const Eigen::Index n = spectrum.values.size();
    if (n == 0 || spectrum.axis.size() != n) throw InputError("detect_peaks: empty or inconsistent spectrum");
    int window = std::max(search.smoothing_window, 1);
    if (window % 2 == 0) ++window;
    const Eigen::VectorXd y = moving_average(spectrum.values, window);
    const Eigen::VectorXd& x = spectrum.axis;

    std::vector<Peak> candidates;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        // Plateau: the peak must actually fall off on the right.
        Eigen::Index right_edge = i;
        while (right_edge + 1 < n && y[right_edge + 1] == y[i]) ++right_edge;
        if (right_edge + 1 >= n) continue;

        Eigen::Index l = i;
        double left_min = y[i];
        while (l > 0 && y[l - 1] <= y[i]) left_min = std::min(left_min, y[--l]);
        Eigen::Index r = right_edge;
        double right_min = y[i];
        while (r + 1 < n && y[r + 1] <= y[i]) right_min = std::min(right_min, y[++r]);

        Peak p;
        p.center = x[i];
        p.height = y[i];
        p.prominence = y[i] - std::max(left_min, right_min);
        if (!(p.prominence > 0) || p.prominence < search.min_prominence) continue;

        const double half = y[i] - 0.5 * p.prominence;
        double left_x = x[l];
        for (Eigen::Index k = i; k > l; --k)
            if (y[k - 1] <= half) {
                left_x = crossing(x, y, k - 1, k, half);
                break;
            }
        double right_x = x[r];
        for (Eigen::Index k = right_edge; k < r; ++k)
            if (y[k + 1] <= half) {
                right_x = crossing(x, y, k, k + 1, half);
                break;
            }
        p.width = right_x - left_x;
        candidates.push_back(p);
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
    std::vector<Peak> kept;
    for (const auto& c : candidates) {
        const bool clear = std::all_of(kept.begin(), kept.end(), [&](const Peak& k) {
            return std::abs(k.center - c.center) >= search.min_separation;
        });
        if (clear) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.center < b.center; });
    return kept;
}

Eigen::VectorXd multi_lorentzian(const Eigen::Ref<const Eigen::VectorXd>& axis,
                                 const Eigen::Ref<const Eigen::VectorXd>& params) {
    const Eigen::Index peaks = (params.size() - 1) / 3;
    Eigen::VectorXd out = Eigen::VectorXd::Constant(axis.size(), params[params.size() - 1]);
    for (Eigen::Index k = 0; k < peaks; ++k) {
        const double c = params[3 * k], w = params[3 * k + 1], a = params[3 * k + 2];
        out += axis.unaryExpr([&](double x) { return a * lorentzian_peak(x, c, w); });
    }
    return out;
}

FitResult fit_lorentzian_multi(const Spectrum& spectrum, int n_peaks,
                               const std::optional<std::vector<LorentzianGuess>>& init, const LmOptions& options) {
    if (n_peaks < 1) throw InputError("fit_lorentzian_multi: need at least one peak");
    const Eigen::Index n = spectrum.values.size();
    if (n < 3 * n_peaks + 1 || spectrum.axis.size() != n)
        throw InputError("fit_lorentzian_multi: not enough data points for the requested peaks");
    if (!strictly_increasing(spectrum.axis)) throw InputError("fit_lorentzian_multi: axis must be strictly increasing");

    const double lo = spectrum.axis[0];
    const double hi = spectrum.axis[n - 1];
    const double span = hi - lo;
    const double step = span / double(n - 1);
    const double baseline0 = spectrum.values.minCoeff();

    std::vector<LorentzianGuess> guesses;
    if (init) {
        if (int(init->size()) != n_peaks) throw InputError("fit_lorentzian_multi: init must hold one guess per peak");
        guesses = *init;
    } else {
        const double range = spectrum.values.maxCoeff() - baseline0;
        auto peaks = detect_peaks(spectrum, {0.02 * range, 0.0, 3});
        if (int(peaks.size()) < n_peaks)
            throw InputError("fit_lorentzian_multi: detected " + std::to_string(peaks.size()) + " peaks, need " +
                             std::to_string(n_peaks));
        std::stable_sort(peaks.begin(), peaks.end(),
                         [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
        peaks.resize(std::size_t(n_peaks));
        std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.center < b.center; });
        for (const auto& p : peaks) guesses.push_back({p.center, p.width, p.height - baseline0});
    }

    FitProblem problem;
    problem.model = "multi_lorentzian";
    for (int k = 0; k < n_peaks; ++k) {
        const auto& g = guesses[std::size_t(k)];
        const std::string prefix = "peak" + std::to_string(k) + ".";
        const double fwhm = g.fwhm > 0 ? g.fwhm : 5 * step;
        problem.free_parameters.push_back({prefix + "center", std::clamp(g.center, lo, hi), lo, hi});
        problem.free_parameters.push_back({prefix + "fwhm", std::clamp(fwhm, 1e-3 * step, 10 * span), 1e-3 * step,
                                           10 * span});
        problem.free_parameters.push_back({prefix + "amplitude", g.amplitude, -kInf, kInf});
    }
    problem.free_parameters.push_back({"baseline", baseline0, -kInf, kInf});
    problem.data = spectrum.values;
    const Eigen::VectorXd axis = spectrum.axis;
    problem.model_fn = [axis](const Eigen::VectorXd& p) { return multi_lorentzian(axis, p); };
    return levenberg_marquardt(problem, options);
}

LevelScheme apply_scheme_parameters(const LevelScheme& scheme, const std::vector<std::string>& names,
                                    const Eigen::Ref<const Eigen::VectorXd>& values) {
    LevelScheme out = scheme;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& name = names[i];
        const double v = values[Eigen::Index(i)];
        if (name == "baseline") {
            out.baseline_sideband_cross_section = v;
            continue;
        }
        if (name == "sp" || name == "sd" || name == "scale") continue;
        const auto dot = name.rfind('.');
        if (dot == std::string::npos) throw InputError("unknown fit parameter '" + name + "'");
        VibronicLevel* level = out.find(name.substr(0, dot));
        const std::string field = name.substr(dot + 1);
        if (!level) throw InputError("fit parameter '" + name + "' names no level of the template");
        if (field == "wavenumber")
            level->wavenumber = v;
        else if (field == "gamma")
            level->gamma_over_2pi = v;
        else if (field == "fc")
            level->relative_fc = v;
        else
            throw InputError("unknown fit parameter '" + name + "'");
    }
    return out;
}

FitResult fit_rate_model(const Spectrum& spectrum, const LevelScheme& scheme_template,
                         const std::vector<std::string>& free, const RateFitConfig& config) {
    const bool sted = spectrum.kind == SpectrumKind::sted;
    if (!sted && spectrum.kind != SpectrumKind::fluorex)
        throw InputError("fit_rate_model: spectrum kind must be fluorex or sted");
    if (const auto v = validate_scheme(scheme_template); !v.empty())
        throw InputError("fit_rate_model: template scheme is invalid (" + v.front().level_id + ": " + v.front().rule + ")");
    if (free.empty()) throw InputError("fit_rate_model: no free parameters");
    const Eigen::Index n = spectrum.values.size();
    if (n == 0 || spectrum.axis.size() != n) throw InputError("fit_rate_model: empty or inconsistent spectrum");

    auto meta = [&](const char* key) -> std::optional<std::string> {
        if (auto it = spectrum.metadata.find(key); it != spectrum.metadata.end()) return it->second;
        return std::nullopt;
    };
    auto require_number = [&](const std::optional<double>& given, const char* key) {
        if (given) return *given;
        if (auto m = meta(key)) return parse_double(*m, key);
        throw InputError(std::string("fit_rate_model: ") + key + " is neither configured nor in the spectrum metadata");
    };

    const double sp = require_number(config.pump_saturation, "sp");
    const double sd = sted ? require_number(config.depletion_saturation, "sd") : 0.0;
    std::string pump_target;
    std::string scan_target;
    if (sted) {
        pump_target = config.pump_target ? *config.pump_target : meta("pump_target").value_or("");
        if (pump_target.empty()) throw InputError("fit_rate_model: STED fit needs a pump target");
        scan_target = config.scan_target ? *config.scan_target : meta("target").value_or("");
    } else {
        scan_target = config.pump_target ? *config.pump_target : meta("target").value_or("");
    }
    const bool ghz_axis = !scan_target.empty();
    const double span_cm1 = (spectrum.axis[n - 1] - spectrum.axis[0]) /
                            (ghz_axis ? constants::ghz_per_wavenumber : 1.0);

    FitProblem problem;
    problem.model = sted ? "rate_sted" : "rate_fluorex";
    for (const auto& name : free) {
        FreeParameter p{name, 0.0, -kInf, kInf};
        if (name == "sp") {
            p.initial = sp;
            p.lower = 0.0;
        } else if (name == "sd") {
            if (!sted) throw InputError("fit_rate_model: sd is only free in STED fits");
            p.initial = sd;
            p.lower = 0.0;
        } else if (name == "baseline") {
            p.initial = scheme_template.baseline_sideband_cross_section;
            p.lower = 0.0;
        } else if (name == "scale") {
            p.initial = config.scale;
            p.lower = 0.0;
        } else {
            const auto dot = name.rfind('.');
            const VibronicLevel* level = dot == std::string::npos ? nullptr : scheme_template.find(name.substr(0, dot));
            if (!level) throw InputError("fit_rate_model: free parameter '" + name + "' is not in the template");
            const std::string field = name.substr(dot + 1);
            if (field == "wavenumber") {
                p.initial = level->wavenumber;
                p.lower = std::max(level->wavenumber - std::max(span_cm1, 1.0), 1e-6);
                p.upper = level->wavenumber + std::max(span_cm1, 1.0);
            } else if (field == "gamma") {
                p.initial = level->gamma_over_2pi;
                p.lower = 1e-6;
            } else if (field == "fc") {
                p.initial = level->relative_fc;
                p.lower = 0.0;
                p.upper = 1.0;
            } else {
                throw InputError("fit_rate_model: unknown parameter field in '" + name + "'");
            }
        }
        problem.free_parameters.push_back(p);
    }

    const auto index_of = [&](const char* key) -> std::optional<Eigen::Index> {
        for (std::size_t i = 0; i < free.size(); ++i)
            if (free[i] == key) return Eigen::Index(i);
        return std::nullopt;
    };
    const auto sp_idx = index_of("sp");
    const auto sd_idx = index_of("sd");
    const auto scale_idx = index_of("scale");
    if (!sp_idx) problem.fixed_parameters["sp"] = sp;
    if (sted && !sd_idx) problem.fixed_parameters["sd"] = sd;
    if (!scale_idx) problem.fixed_parameters["scale"] = config.scale;

    const Eigen::VectorXd axis = spectrum.axis;
    auto forward = [=, &scheme_template](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        try {
            const LevelScheme scheme = apply_scheme_parameters(scheme_template, free, x);
            const double sp_now = sp_idx ? x[*sp_idx] : sp;
            const double scale = scale_idx ? x[*scale_idx] : config.scale;
            if (sted) {
                const double sd_now = sd_idx ? x[*sd_idx] : sd;
                const LaserDrive pump{LaserRole::pump, pump_target, 0.0, sp_now};
                return scale * sted_spectrum(scheme, pump, {scan_target, axis, sd_now}).values;
            }
            return scale * fluorex_spectrum(scheme, {scan_target, axis, sp_now}).values;
        } catch (const Error&) {
            return Eigen::VectorXd::Constant(axis.size(), std::numeric_limits<double>::quiet_NaN());
        }
    };

    // A free scale starts from the ratio of data to model peaks.
    if (scale_idx) {
        Eigen::VectorXd x0(problem.free_parameters.size());
        for (std::size_t i = 0; i < problem.free_parameters.size(); ++i) x0[Eigen::Index(i)] = problem.free_parameters[i].initial;
        x0[*scale_idx] = 1.0;
        const Eigen::VectorXd model0 = forward(x0);
        const double peak = model0.allFinite() ? model0.maxCoeff() : 0.0;
        if (peak > 0 && spectrum.values.maxCoeff() > 0)
            problem.free_parameters[std::size_t(*scale_idx)].initial = spectrum.values.maxCoeff() / peak;
    }

    problem.model_fn = forward;
    problem.data = spectrum.values;
    if (config.weights) problem.weights = *config.weights;
    return levenberg_marquardt(problem, config.lm);
}

FitResult fit_saturation(const Eigen::Ref<const Eigen::VectorXd>& powers, const Eigen::Ref<const Eigen::VectorXd>& rates,
                         const LmOptions& options) {
    const Eigen::Index n = powers.size();
    if (rates.size() != n) throw InputError("fit_saturation: powers and rates differ in length");
    if (n < 3) throw InputError("fit_saturation: need at least three points");
    if (powers.maxCoeff() == powers.minCoeff()) throw InputError("fit_saturation: degenerate data, all powers equal");
    if ((powers.array() < 0).any()) throw InputError("fit_saturation: powers must be non-negative");

    // Start from the double-reciprocal line 1/R = 1/R_inf + (P_sat/R_inf) / P.
    double r_inf0 = 1.2 * rates.maxCoeff();
    double p_sat0 = 0.5 * (powers.minCoeff() + powers.maxCoeff());
    {
        std::vector<std::pair<double, double>> pts;
        for (Eigen::Index i = 0; i < n; ++i)
            if (powers[i] > 0 && rates[i] > 0) pts.emplace_back(1.0 / powers[i], 1.0 / rates[i]);
        if (pts.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (auto [u, v] : pts) {
                sx += u;
                sy += v;
                sxx += u * u;
                sxy += u * v;
            }
            const double m = double(pts.size());
            const double det = m * sxx - sx * sx;
            if (det != 0) {
                const double slope = (m * sxy - sx * sy) / det;
                const double intercept = (sy - slope * sx) / m;
                if (intercept > 0 && slope > 0) {
                    r_inf0 = 1.0 / intercept;
                    p_sat0 = slope * r_inf0;
                }
            }
        }
    }
    if (!(r_inf0 > 0)) r_inf0 = 1.0;
    if (!(p_sat0 > 0)) p_sat0 = powers.maxCoeff();

    FitProblem problem;
    problem.model = "saturation";
    problem.free_parameters = {{"r_inf", r_inf0, 0.0, kInf}, {"p_sat", p_sat0, 0.0, kInf}};
    problem.data = rates;
    const Eigen::VectorXd p = powers;
    problem.model_fn = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const double r_inf = x[0], p_sat = x[1];
        if (!(p_sat > 0)) return Eigen::VectorXd::Constant(p.size(), std::numeric_limits<double>::quiet_NaN());
        return p.unaryExpr([&](double pw) { return r_inf * (pw / p_sat) / (1.0 + pw / p_sat); });
    };
    return levenberg_marquardt(problem, options);
}

}  // namespace vibronic
