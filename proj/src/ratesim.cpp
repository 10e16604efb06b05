#include "vibronic/ratesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "vibronic/error.hpp"
#include "vibronic/lineshape.hpp"
#include "vibronic/units.hpp"

namespace vibronic {

Eigen::Index RateSystem::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < state_labels.size(); ++i)
        if (state_labels[i] == label) return Eigen::Index(i);
    throw InputError("rate system has no state '" + std::string(label) + "'");
}

Eigen::MatrixXd RateSystem::generator() const {
    const Eigen::Index n = size();
    Eigen::MatrixXd g = rates.transpose();
    g.diagonal().setZero();
    for (Eigen::Index i = 0; i < n; ++i) g(i, i) = -g.col(i).sum();
    return g;
}

double RateSystem::min_rate() const {
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < size(); ++i)
        for (Eigen::Index j = 0; j < size(); ++j)
            if (i != j && rates(i, j) > 0) lo = std::min(lo, rates(i, j));
    if (!std::isfinite(lo)) throw InputError("rate system has no positive rates");
    return lo;
}

namespace {

// Laser placement in GHz relative to the 00ZPL: above it for the pump,
// below it for the depletion laser.
struct PumpPlacement {
    bool zpl = false;
    double position_ghz = 0.0;
    double saturation = 0.0;
};

struct DepletionPlacement {
    double position_ghz = 0.0;
    double saturation = 0.0;
};

void require_valid(const LevelScheme& scheme) {
    const auto violations = validate_scheme(scheme);
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << "invalid level scheme:";
    for (const auto& v : violations) msg << " [" << (v.level_id.empty() ? "scheme" : v.level_id) << ": " << v.rule << "]";
    throw InputError(msg.str());
}

void require_saturation(double s, const char* what) {
    if (!(s >= 0) || !std::isfinite(s)) throw InputError(std::string(what) + ": saturation must be finite and >= 0");
}

double angular_rate(double fwhm_ghz) { return 2.0 * std::numbers::pi * fwhm_ghz * 1e9; }

RateSystem assemble(const LevelScheme& scheme, const PumpPlacement& pump,
                    const std::optional<DepletionPlacement>& depletion) {
    const double gamma_e = scheme.decay_rate();
    const double zpl_width = scheme.zpl_linewidth_ghz();

    RateSystem sys;
    sys.state_labels = {"g", "e"};
    if (!pump.zpl)
        for (const auto& l : scheme.s1_levels) sys.state_labels.push_back("p_" + l.id);
    if (depletion)
        for (const auto& l : scheme.s0_levels) sys.state_labels.push_back("d_" + l.id);

    const Eigen::Index n = Eigen::Index(sys.state_labels.size());
    sys.rates = Eigen::MatrixXd::Zero(n, n);
    constexpr Eigen::Index g = 0;
    constexpr Eigen::Index e = 1;

    sys.rates(e, g) += gamma_e;

    Eigen::Index next = 2;
    if (pump.zpl) {
        const double w = 0.5 * pump.saturation * gamma_e * lorentzian_peak(pump.position_ghz, 0.0, zpl_width);
        sys.rates(g, e) += w;
        sys.rates(e, g) += w;
    } else {
        for (const auto& l : scheme.s1_levels) {
            const Eigen::Index p = next++;
            const double center = l.wavenumber * constants::ghz_per_wavenumber;
            const double w = pump.saturation * l.relative_fc * gamma_e *
                             lorentzian_peak(pump.position_ghz, center, l.gamma_over_2pi + zpl_width);
            sys.rates(g, p) = w;
            sys.rates(p, g) = w;
            sys.rates(p, e) = angular_rate(l.gamma_over_2pi);
        }
    }
    if (depletion) {
        for (const auto& l : scheme.s0_levels) {
            const Eigen::Index d = next++;
            const double center = l.wavenumber * constants::ghz_per_wavenumber;
            const double w = depletion->saturation * l.relative_fc * gamma_e *
                             lorentzian_peak(depletion->position_ghz, center, l.gamma_over_2pi + zpl_width);
            sys.rates(e, d) = w;
            sys.rates(d, e) = w;
            sys.rates(d, g) = angular_rate(l.gamma_over_2pi);
        }
        sys.rates(e, g) += depletion->saturation * gamma_e * scheme.baseline_sideband_cross_section;
    }
    return sys;
}

PumpPlacement place_pump(const LevelScheme& scheme, const LaserDrive& pump) {
    if (pump.role != LaserRole::pump) throw InputError("pump drive must have the pump role");
    require_saturation(pump.saturation, "pump");
    if (pump.target_level == kZplTarget) return {true, pump.detuning_ghz, pump.saturation};
    const auto& level = scheme.at(pump.target_level);
    if (level.state != ElectronicState::S1)
        throw InputError("pump target '" + level.id + "' is not an S1 level or the 00ZPL");
    return {false, level.wavenumber * constants::ghz_per_wavenumber + pump.detuning_ghz, pump.saturation};
}

DepletionPlacement place_depletion(const LevelScheme& scheme, const LaserDrive& depletion) {
    if (depletion.role != LaserRole::depletion) throw InputError("depletion drive must have the depletion role");
    require_saturation(depletion.saturation, "depletion");
    const auto& level = scheme.at(depletion.target_level);
    if (level.state != ElectronicState::S0)
        throw InputError("depletion target '" + level.id + "' is not an S0 level");
    return {level.wavenumber * constants::ghz_per_wavenumber + depletion.detuning_ghz, depletion.saturation};
}

double excited_of(const RateSystem& sys) { return steady_state(sys)[1]; }

}  // namespace

RateSystem build_rate_matrix(const LevelScheme& scheme, const LaserDrive& pump,
                             const std::optional<LaserDrive>& depletion) {
    require_valid(scheme);
    const auto p = place_pump(scheme, pump);
    std::optional<DepletionPlacement> d;
    if (depletion) d = place_depletion(scheme, *depletion);
    return assemble(scheme, p, d);
}

Eigen::VectorXd steady_state(const RateSystem& system) {
    const Eigen::Index n = system.size();
    if (n == 0) throw InputError("steady_state: empty rate system");
    if ((system.rates.array() < 0).any() || !system.rates.allFinite())
        throw InputError("steady_state: rates must be finite and non-negative");
    if (n == 1) return Eigen::VectorXd::Ones(1);

    Eigen::MatrixXd a = system.generator();
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0) throw NumericalError("steady_state: all rates vanish, the stationary state is not unique");
    a /= scale;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-13);
    if (lu.rank() != n - 1)
        throw NumericalError("steady_state: generator has rank " + std::to_string(lu.rank()) + ", expected " +
                             std::to_string(n - 1) + "; the stationary state is not unique");

    // Rows of the generator sum to zero, so any one of them may be traded for normalization.
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    Eigen::VectorXd pop = a.fullPivLu().solve(rhs);

    for (Eigen::Index i = 0; i < n; ++i) {
        if (pop[i] < -1e-14)
            throw NumericalError("steady_state: negative population " + std::to_string(pop[i]) + " in state " +
                                 system.state_labels[std::size_t(i)]);
        pop[i] = std::max(pop[i], 0.0);
    }
    return pop / pop.sum();
}

EvolutionReport time_evolve_report(const RateSystem& system, const Eigen::Ref<const Eigen::VectorXd>& initial,
                                   double t_seconds, const IntegratorOptions& options) {
    if (initial.size() != system.size()) throw InputError("time_evolve: initial populations have the wrong size");
    if (std::abs(initial.sum() - 1.0) > 1e-12) throw InputError("time_evolve: initial populations must sum to 1");
    if (!(t_seconds >= 0) || !std::isfinite(t_seconds)) throw InputError("time_evolve: time must be finite and >= 0");

    // Dormand-Prince 5(4) tableau.
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const Eigen::MatrixXd gen = system.generator();
    EvolutionReport report;
    Eigen::VectorXd y = initial;
    const double total0 = y.sum();
    if (t_seconds == 0) {
        report.populations = y;
        return report;
    }

    const double fastest = gen.diagonal().cwiseAbs().maxCoeff();
    double h = fastest > 0 ? std::min(t_seconds, 0.01 / fastest) : t_seconds;
    double t = 0.0;

    Eigen::VectorXd k1 = gen * y, k2, k3, k4, k5, k6, k7, y_new, err;
    while (t < t_seconds) {
        if (report.accepted_steps + report.rejected_steps > options.max_steps)
            throw NumericalError("time_evolve: step budget exhausted");
        h = std::min(h, t_seconds - t);
        k2 = gen * (y + h * (a21 * k1));
        k3 = gen * (y + h * (a31 * k1 + a32 * k2));
        k4 = gen * (y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = gen * (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = gen * (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = gen * y_new;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const Eigen::ArrayXd tol = options.atol + options.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array();
        const double err_norm = (err.array().abs() / tol).maxCoeff();

        if (err_norm <= 1.0) {
            t += h;
            y = y_new;
            k1 = k7;
            ++report.accepted_steps;
            report.max_population_drift = std::max(report.max_population_drift, std::abs(y.sum() - total0));
        } else {
            ++report.rejected_steps;
        }
        const double factor = err_norm == 0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h *= factor;
        if (h < options.min_step && t < t_seconds) throw NumericalError("time_evolve: step size underflow");
    }
    report.populations = y;
    return report;
}

Eigen::VectorXd time_evolve(const RateSystem& system, const Eigen::Ref<const Eigen::VectorXd>& initial,
                            double t_seconds, const IntegratorOptions& options) {
    return time_evolve_report(system, initial, t_seconds, options).populations;
}

double excited_population(const LevelScheme& scheme, const LaserDrive& pump,
                          const std::optional<LaserDrive>& depletion) {
    return excited_of(build_rate_matrix(scheme, pump, depletion));
}

Spectrum fluorex_spectrum(const LevelScheme& scheme, const FluorexScan& scan) {
    require_valid(scheme);
    require_saturation(scan.saturation, "fluorex");
    if (scan.axis.size() == 0) throw InputError("fluorex_spectrum: empty axis");
    if (!strictly_increasing(scan.axis)) throw InputError("fluorex_spectrum: axis must be strictly increasing");

    PumpPlacement pump{false, 0.0, scan.saturation};
    double offset_ghz = 0.0;
    double axis_to_ghz = constants::ghz_per_wavenumber;
    if (!scan.target.empty()) {
        LaserDrive d{LaserRole::pump, scan.target, 0.0, scan.saturation};
        pump = place_pump(scheme, d);
        offset_ghz = pump.position_ghz;
        axis_to_ghz = 1.0;
    } else if (scheme.s1_levels.empty()) {
        throw InputError("fluorex_spectrum: the scheme has no S1 levels to scan");
    }

    Spectrum out;
    out.kind = SpectrumKind::fluorex;
    out.axis_unit = scan.target.empty() ? "cm-1" : "GHz";
    out.value_unit = "n_e";
    out.axis = scan.axis;
    out.values.resize(scan.axis.size());
    for (Eigen::Index i = 0; i < scan.axis.size(); ++i) {
        pump.position_ghz = offset_ghz + scan.axis[i] * axis_to_ghz;
        out.values[i] = excited_of(assemble(scheme, pump, std::nullopt));
    }
    std::ostringstream sp;
    sp.precision(17);
    sp << scan.saturation;
    out.metadata["sp"] = sp.str();
    if (!scan.target.empty()) out.metadata["target"] = scan.target;
    return out;
}

Spectrum sted_spectrum(const LevelScheme& scheme, const LaserDrive& pump, const StedScan& scan) {
    require_valid(scheme);
    require_saturation(scan.saturation, "depletion");
    if (scan.axis.size() == 0) throw InputError("sted_spectrum: empty axis");
    if (!strictly_increasing(scan.axis)) throw InputError("sted_spectrum: axis must be strictly increasing");

    const PumpPlacement pump_at = place_pump(scheme, pump);
    double offset_ghz = 0.0;
    double axis_to_ghz = constants::ghz_per_wavenumber;
    if (!scan.target.empty()) {
        offset_ghz = place_depletion(scheme, {LaserRole::depletion, scan.target, 0.0, scan.saturation}).position_ghz;
        axis_to_ghz = 1.0;
    }

    // Same state space with the depletion laser dark, so S_d = 0 gives D = 0 exactly.
    const double reference = excited_of(assemble(scheme, pump_at, DepletionPlacement{offset_ghz, 0.0}));
    if (!(reference > 0)) throw InputError("sted_spectrum: the pump leaves the excited state empty");

    Spectrum out;
    out.kind = SpectrumKind::sted;
    out.axis_unit = scan.target.empty() ? "cm-1" : "GHz";
    out.value_unit = "D";
    out.axis = scan.axis;
    out.values.resize(scan.axis.size());
    for (Eigen::Index i = 0; i < scan.axis.size(); ++i) {
        const DepletionPlacement dep{offset_ghz + scan.axis[i] * axis_to_ghz, scan.saturation};
        const double n_e = excited_of(assemble(scheme, pump_at, dep));
        out.values[i] = std::max(0.0, (reference - n_e) / reference);
    }
    std::ostringstream sp, sd;
    sp.precision(17);
    sd.precision(17);
    sp << pump.saturation;
    sd << scan.saturation;
    out.metadata["sp"] = sp.str();
    out.metadata["sd"] = sd.str();
    out.metadata["pump_target"] = pump.target_level;
    if (!scan.target.empty()) out.metadata["target"] = scan.target;
    return out;
}

Spectrum saturation_curve(const LevelScheme& scheme, std::string_view pump_target,
                          const Eigen::Ref<const Eigen::VectorXd>& powers, double p_sat) {
    require_valid(scheme);
    if (!(p_sat > 0) || !std::isfinite(p_sat)) throw InputError("saturation_curve: p_sat must be positive");
    if (powers.size() == 0) throw InputError("saturation_curve: no powers given");
    if ((powers.array() < 0).any()) throw InputError("saturation_curve: powers must be non-negative");
    if (!strictly_increasing(powers)) throw InputError("saturation_curve: powers must be strictly increasing");

    LaserDrive drive{LaserRole::pump, std::string(pump_target), 0.0, 0.0};
    PumpPlacement pump = place_pump(scheme, drive);

    Spectrum out;
    out.kind = SpectrumKind::saturation;
    out.axis_unit = "power";
    out.value_unit = "n_e";
    out.axis = powers;
    out.values.resize(powers.size());
    for (Eigen::Index i = 0; i < powers.size(); ++i) {
        pump.saturation = powers[i] / p_sat;
        out.values[i] = excited_of(assemble(scheme, pump, std::nullopt));
    }
    std::ostringstream ps;
    ps.precision(17);
    ps << p_sat;
    out.metadata["p_sat"] = ps.str();
    out.metadata["pump_target"] = std::string(pump_target);
    return out;
}

Spectrum add_noise(const Spectrum& spectrum, std::uint64_t seed, double dwell_scale) {
    if (!(dwell_scale > 0) || !std::isfinite(dwell_scale)) throw InputError("add_noise: dwell_scale must be positive");
    std::mt19937_64 rng(seed);
    Spectrum out = spectrum;
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        const double mean = spectrum.values[i] * dwell_scale;
        if (!(mean > 0)) {
            out.values[i] = 0.0;
            continue;
        }
        std::poisson_distribution<long long> draw(mean);
        out.values[i] = double(draw(rng));
    }
    out.value_unit = "counts";
    out.metadata["seed"] = std::to_string(seed);
    std::ostringstream dw;
    dw.precision(17);
    dw << dwell_scale;
    out.metadata["dwell_scale"] = dw.str();
    return out;
}

}  // namespace vibronic
