#include "vibronic/fcmodel.hpp"

#include <algorithm>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

#include "vibronic/lineshape.hpp"
#include "vibronic/units.hpp"

namespace vibronic {

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw InputError("gauss_hermite: need at least one node");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigen decomposition failed");

    GaussHermiteRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights = std::sqrt(std::numbers::pi) * solver.eigenvectors().row(0).transpose().array().square();
    return rule;
}

namespace {

// Hermite function of order n without its Gaussian factor: psi_n(x) = h(x) exp(-x^2/2).
double hermite_polynomial_normalized(int n, double x) {
    double prev = 0.0;
    double cur = std::pow(std::numbers::pi, -0.25);
    for (int k = 0; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(double(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// <n | m(d)> with psi_m shifted by d in dimensionless coordinates. After
// completing the square the Gaussian factor becomes exp(-u^2) exp(-d^2/4).
double overlap_amplitude(const GaussHermiteRule& rule, double shift, int n, int m) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double u = rule.nodes[i];
        sum += rule.weights[i] * hermite_polynomial_normalized(n, u + 0.5 * shift) *
               hermite_polynomial_normalized(m, u - 0.5 * shift);
    }
    return sum * std::exp(-0.25 * shift * shift);
}

}  // namespace

double fc_overlap_numeric(double alpha, int n, int m, const OverlapQuadrature& quad) {
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw InputError("fc_overlap_numeric: alpha must be non-negative");
    if (n < 0 || m < 0 || n > 20 || m > 20) throw InputError("fc_overlap_numeric: quanta must lie in [0, 20]");

    // dQ = 2 alpha dQ_zpm and dQ_zpm = 1/sqrt(2) in oscillator length units.
    const double shift = std::numbers::sqrt2 * alpha;
    const int step = std::max(quad.initial_nodes, 2);
    int nodes = step;
    double previous = overlap_amplitude(gauss_hermite(nodes), shift, n, m);
    while (nodes + step <= quad.max_nodes) {
        nodes += step;
        const double current = overlap_amplitude(gauss_hermite(nodes), shift, n, m);
        if (std::abs(current * current - previous * previous) < quad.tolerance) return current * current;
        previous = current;
    }
    throw NumericalError("fc_overlap_numeric: quadrature did not converge with " + std::to_string(quad.max_nodes) +
                         " nodes");
}

double huang_rhys_from_ratio(double ratio) {
    if (!(ratio >= 0) || !std::isfinite(ratio)) throw InputError("huang_rhys_from_ratio: ratio must be non-negative");
    return std::sqrt(ratio);
}

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void enumerate_sticks(std::span<const ModeDisplacement> modes, std::size_t index, int remaining,
                      VibronicStick& current, std::vector<VibronicStick>& out) {
    if (index == modes.size()) {
        if (current.intensity > 0) out.push_back(current);
        return;
    }
    const auto& mode = modes[index];
    const double base_intensity = current.intensity;
    const double base_wavenumber = current.wavenumber;
    for (int q = 0; q <= remaining; ++q) {
        current.intensity = base_intensity * fc_factor_poisson(mode.huang_rhys(), q);
        current.wavenumber = base_wavenumber + q * mode.wavenumber;
        if (q > 0) current.quanta[mode.mode_id] = q;
        enumerate_sticks(modes, index + 1, remaining - q, current, out);
    }
    current.quanta.erase(mode.mode_id);
    current.intensity = base_intensity;
    current.wavenumber = base_wavenumber;
}

}  // namespace

std::vector<VibronicStick> relative_intensities(std::span<const ModeDisplacement> modes, int max_total_quanta,
                                                std::size_t max_sticks) {
    if (max_total_quanta < 1) throw InputError("relative_intensities: max_total_quanta must be at least 1");
    for (const auto& m : modes) {
        if (!(m.wavenumber > 0)) throw InputError("mode " + std::to_string(m.mode_id) + ": wavenumber must be positive");
        if (!(m.alpha >= 0)) throw InputError("mode " + std::to_string(m.mode_id) + ": alpha must be non-negative");
    }
    // Number of assignments with sum <= N over M modes is C(M + N, N).
    const double count = binomial(int(modes.size()) + max_total_quanta, max_total_quanta);
    if (count > double(max_sticks))
        throw InputError("relative_intensities: " + std::to_string(std::llround(count)) +
                         " quanta assignments exceed the budget of " + std::to_string(max_sticks));

    std::vector<VibronicStick> sticks;
    sticks.reserve(std::size_t(count));
    VibronicStick seed;
    seed.intensity = 1.0;
    enumerate_sticks(modes, 0, max_total_quanta, seed, sticks);

    double strongest = 0.0;
    for (const auto& s : sticks) strongest = std::max(strongest, s.intensity);
    for (auto& s : sticks) s.intensity /= strongest;
    std::stable_sort(sticks.begin(), sticks.end(),
                     [](const VibronicStick& a, const VibronicStick& b) { return a.wavenumber < b.wavenumber; });
    return sticks;
}

Spectrum stick_to_spectrum(std::span<const VibronicStick> sticks, std::span<const double> gamma_ghz,
                           const Eigen::Ref<const Eigen::VectorXd>& axis_cm1) {
    if (axis_cm1.size() == 0) throw InputError("stick_to_spectrum: empty axis");
    if (!strictly_increasing(axis_cm1)) throw InputError("stick_to_spectrum: axis must be strictly increasing");
    if (gamma_ghz.size() != 1 && gamma_ghz.size() != sticks.size())
        throw InputError("stick_to_spectrum: give one linewidth or one per stick");
    for (double g : gamma_ghz)
        if (!(g > 0)) throw InputError("stick_to_spectrum: linewidths must be positive");

    Spectrum out;
    out.kind = SpectrumKind::calculated;
    out.axis_unit = "cm-1";
    out.value_unit = "per_cm-1";
    out.axis = axis_cm1;
    out.values = Eigen::VectorXd::Zero(axis_cm1.size());
    for (std::size_t k = 0; k < sticks.size(); ++k) {
        const double fwhm_cm1 = (gamma_ghz.size() == 1 ? gamma_ghz[0] : gamma_ghz[k]) / constants::ghz_per_wavenumber;
        const double center = sticks[k].wavenumber;
        const double weight = sticks[k].intensity;
        out.values += axis_cm1.unaryExpr([&](double x) { return weight * lorentzian_area(x, center, fwhm_cm1); });
    }
    return out;
}

double anharmonicity_defect(double nu_combination, double nu_a, double nu_b) {
    return nu_combination - (nu_a + nu_b);
}

std::vector<ModeDisplacement> apply_scaling(std::span<const ModeDisplacement> modes, double slope, double intercept) {
    if (!(slope > 0)) throw InputError("apply_scaling: slope must be positive");
    std::vector<ModeDisplacement> out(modes.begin(), modes.end());
    for (auto& m : out) {
        m.wavenumber = slope * m.wavenumber + intercept;
        if (!(m.wavenumber > 0))
            throw InputError("apply_scaling: mode " + std::to_string(m.mode_id) + " maps to a non-positive wavenumber");
    }
    return out;
}

std::vector<ModeDisplacement> read_modes_csv(std::istream& in) {
    std::vector<ModeDisplacement> modes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#' || line.rfind("mode_id", 0) == 0) continue;

        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != 4)
            throw InputError("modes CSV line " + std::to_string(line_no) + ": expected 4 columns");

        ModeDisplacement mode;
        double value = 0.0;
        try {
            std::size_t used = 0;
            mode.mode_id = std::stoi(cells[0], &used);
            mode.wavenumber = std::stod(cells[1]);
            value = std::stod(cells[2]);
        } catch (const std::exception&) {
            throw InputError("modes CSV line " + std::to_string(line_no) + ": non-numeric cell");
        }
        std::string flag = cells[3];
        flag.erase(0, flag.find_first_not_of(" \t"));
        flag.erase(flag.find_last_not_of(" \t") + 1);
        if (!(value >= 0)) throw InputError("modes CSV line " + std::to_string(line_no) + ": value must be >= 0");
        if (flag == "alpha")
            mode.alpha = value;
        else if (flag == "intensity")
            mode.alpha = std::sqrt(value);
        else
            throw InputError("modes CSV line " + std::to_string(line_no) + ": flag must be alpha or intensity");
        if (!(mode.wavenumber > 0))
            throw InputError("modes CSV line " + std::to_string(line_no) + ": wavenumber must be positive");
        modes.push_back(mode);
    }
    return modes;
}

}  // namespace vibronic
