#include "vibronic/spectrum.hpp"

#include "vibronic/error.hpp"

namespace vibronic {

std::string_view to_string(SpectrumKind kind) noexcept {
    switch (kind) {
    case SpectrumKind::fluorex: return "fluorex";
    case SpectrumKind::sted: return "sted";
    case SpectrumKind::saturation: return "saturation";
    case SpectrumKind::calculated: return "calculated";
    }
    return "fluorex";
}

SpectrumKind parse_spectrum_kind(std::string_view name) {
    for (auto k : {SpectrumKind::fluorex, SpectrumKind::sted, SpectrumKind::saturation, SpectrumKind::calculated})
        if (to_string(k) == name) return k;
    throw InputError("unknown spectrum kind '" + std::string(name) + "'");
}

bool strictly_increasing(const Eigen::Ref<const Eigen::VectorXd>& axis) noexcept {
    for (Eigen::Index i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1])) return false;
    return true;
}

Eigen::VectorXd linear_axis(double lo, double hi, Eigen::Index points) {
    if (points < 2 || !(hi > lo)) throw InputError("linear_axis: need hi > lo and at least two points");
    return Eigen::VectorXd::LinSpaced(points, lo, hi);
}

}  // namespace vibronic
