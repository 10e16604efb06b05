#include "vibronic/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace vibronic {

double FitResult::value(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return estimates[Eigen::Index(i)];
    if (auto it = fixed_parameters.find(std::string(name)); it != fixed_parameters.end()) return it->second;
    throw InputError("fit result has no parameter '" + std::string(name) + "'");
}

double FitResult::sigma(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[Eigen::Index(i)];
    throw InputError("fit result has no free parameter '" + std::string(name) + "'");
}

namespace {

// Maps an unconstrained internal coordinate onto [lower, upper].
struct BoundTransform {
    double lower;
    double upper;

    bool has_lower() const { return std::isfinite(lower); }
    bool has_upper() const { return std::isfinite(upper); }

    double external(double t) const {
        if (has_lower() && has_upper()) return lower + 0.5 * (upper - lower) * (std::sin(t) + 1.0);
        if (has_lower()) return lower - 1.0 + std::sqrt(t * t + 1.0);
        if (has_upper()) return upper + 1.0 - std::sqrt(t * t + 1.0);
        return t;
    }

    double internal(double x) const {
        if (has_lower() && has_upper()) {
            // Exactly on a bound the sine is stationary; step inside.
            const double margin = 1e-8 * (upper - lower);
            x = std::clamp(x, lower + margin, upper - margin);
            return std::asin(std::clamp(2.0 * (x - lower) / (upper - lower) - 1.0, -1.0, 1.0));
        }
        if (has_lower()) {
            const double u = std::max(x - lower, 1e-8) + 1.0;
            return std::sqrt(u * u - 1.0);
        }
        if (has_upper()) {
            const double u = std::max(upper - x, 1e-8) + 1.0;
            return std::sqrt(u * u - 1.0);
        }
        return x;
    }
};

double weighted_sse(const Eigen::VectorXd& residual, const Eigen::VectorXd& weights) {
    return (weights.array() * residual.array().square()).sum();
}

}  // namespace

Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, double step_scale) {
    Eigen::MatrixXd jac;
    Eigen::VectorXd probe = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = step_scale * std::max(1e-6 * std::abs(x[j]), 1e-9);
        probe[j] = x[j] + h;
        const Eigen::VectorXd plus = fn(probe);
        probe[j] = x[j] - h;
        const Eigen::VectorXd minus = fn(probe);
        probe[j] = x[j];
        if (j == 0) jac.resize(plus.size(), x.size());
        jac.col(j) = (plus - minus) / (2.0 * h);
    }
    return jac;
}

Uncertainties estimate_uncertainties(const Eigen::Ref<const Eigen::MatrixXd>& jacobian,
                                     const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                     const Eigen::Ref<const Eigen::VectorXd>& weights,
                                     const std::vector<std::string>& names) {
    const Eigen::Index n = jacobian.rows();
    const Eigen::Index k = jacobian.cols();
    if (residuals.size() != n || weights.size() != n || Eigen::Index(names.size()) != k)
        throw InputError("estimate_uncertainties: inconsistent dimensions");

    const Eigen::VectorXd sqrt_w = weights.cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd jw = sqrt_w.asDiagonal() * jacobian;

    // Walk the columns; a column that does not raise the rank depends on earlier ones.
    const double tol = 1e-10;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jw.leftCols(j + 1));
        qr.setThreshold(tol);
        if (qr.rank() == j + 1) continue;
        std::vector<std::string> involved;
        if (jw.col(j).norm() == 0 || j == 0) {
            involved.push_back(names[std::size_t(j)]);
        } else {
            const Eigen::VectorXd coef = jw.leftCols(j).colPivHouseholderQr().solve(jw.col(j));
            const double big = coef.cwiseAbs().maxCoeff();
            for (Eigen::Index i = 0; i < j; ++i)
                if (std::abs(coef[i]) > 1e-6 * big) involved.push_back(names[std::size_t(i)]);
            involved.push_back(names[std::size_t(j)]);
        }
        std::string msg = "rank-deficient Jacobian; parameters not separately determined:";
        for (const auto& p : involved) msg += " " + p;
        throw RankDeficiencyError(msg, involved);
    }

    const double sse = (weights.array() * residuals.array().square()).sum();
    const double s2 = n > k ? sse / double(n - k) : sse;
    const Eigen::MatrixXd normal = jw.transpose() * jw;
    Eigen::MatrixXd cov = s2 * normal.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    cov = 0.5 * (cov + cov.transpose()).eval();

    Uncertainties out;
    out.covariance = cov;
    out.sigmas = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return out;
}

FitResult levenberg_marquardt(const FitProblem& problem, const LmOptions& options) {
    const Eigen::Index k = Eigen::Index(problem.free_parameters.size());
    const Eigen::Index n = problem.data.size();
    if (n == 0) throw InputError("fit: no data");
    if (k == 0) throw InputError("fit: no free parameters");
    if (!problem.model_fn) throw InputError("fit: no model");
    {
        std::set<std::string> names;
        for (const auto& p : problem.free_parameters) {
            if (!names.insert(p.name).second) throw InputError("fit: duplicate parameter '" + p.name + "'");
            if (problem.fixed_parameters.count(p.name))
                throw InputError("fit: parameter '" + p.name + "' is both free and fixed");
            if (!(p.lower < p.upper)) throw InputError("fit: parameter '" + p.name + "' has empty bounds");
            if (!(p.initial >= p.lower && p.initial <= p.upper) || !std::isfinite(p.initial))
                throw InputError("fit: initial value of '" + p.name + "' lies outside its bounds");
        }
    }
    Eigen::VectorXd weights = problem.weights;
    if (weights.size() == 0)
        weights = problem.data.unaryExpr([](double y) { return 1.0 / std::max(y, 1.0); });
    if (weights.size() != n) throw InputError("fit: weights and data differ in length");
    if (!weights.allFinite() || (weights.array() < 0).any()) throw InputError("fit: weights must be finite and >= 0");

    std::vector<BoundTransform> transforms;
    Eigen::VectorXd theta(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& p = problem.free_parameters[std::size_t(j)];
        transforms.push_back({p.lower, p.upper});
        theta[j] = transforms.back().internal(p.initial);
    }
    auto external = [&](const Eigen::VectorXd& t) {
        Eigen::VectorXd x(k);
        for (Eigen::Index j = 0; j < k; ++j) x[j] = transforms[std::size_t(j)].external(t[j]);
        return x;
    };
    auto residual_internal = [&](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        Eigen::VectorXd f = problem.model_fn(external(t));
        if (f.size() != n) throw InputError("fit: model returned the wrong number of points");
        return f - problem.data;
    };

    FitResult result;
    result.model = problem.model;
    result.fixed_parameters = problem.fixed_parameters;
    for (const auto& p : problem.free_parameters) result.names.push_back(p.name);

    Eigen::VectorXd r = residual_internal(theta);
    if (!r.allFinite()) throw InputError("fit: model is not finite at the initial point");
    double sse = weighted_sse(r, weights);
    result.sse_history.push_back(sse);
    const double data_scale = std::max((weights.array() * problem.data.array().square()).sum(), sse);
    auto negligible = [&](double s) { return s <= 1e-28 * std::max(data_scale, 1e-300); };

    const Eigen::VectorXd sqrt_w = weights.cwiseSqrt();
    double lambda = options.initial_lambda;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
    bool finished = false;
    bool small_step = false;
    int iter = 0;

    for (; iter < options.max_iter && !finished; ++iter) {
        if (negligible(sse)) {
            result.converged = true;
            result.message = "residual vanished";
            break;
        }
        const Eigen::MatrixXd jw = sqrt_w.asDiagonal() * numeric_jacobian(residual_internal, theta);
        if (!jw.allFinite()) {
            result.message = "non-finite Jacobian";
            break;
        }
        if (iter == 0) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jw);
            qr.setThreshold(1e-12);
            if (qr.rank() < k) throw NumericalError("fit: singular normal equations at the initial point");
        }
        const Eigen::VectorXd rw = sqrt_w.cwiseProduct(r);
        const Eigen::MatrixXd a = jw.transpose() * jw;
        const Eigen::VectorXd g = jw.transpose() * rw;

        // Damping scale is the running maximum of diag(A), as in MINPACK.
        diag = diag.cwiseMax(a.diagonal()).cwiseMax(1e-15 * a.diagonal().maxCoeff());

        // Scaled gradient against the same column scale, so a parameter resting
        // on a bound (whose internal column has vanished) reads as stationary.
        const double rnorm = rw.norm();
        double cosine = 0.0;
        if (rnorm > 0)
            for (Eigen::Index j = 0; j < k; ++j)
                cosine = std::max(cosine, std::abs(g[j]) / (std::sqrt(diag[j]) * rnorm));
        // Also stationary when the Gauss-Newton step cannot lower the SSE by more
        // than the rounding noise of evaluating it.
        const Eigen::VectorXd gn = jw.colPivHouseholderQr().solve(-rw);
        const double predicted = (jw * gn).squaredNorm();
        const double sse_noise = 2.0 * std::numeric_limits<double>::epsilon() *
                                 (weights.array() * r.array().abs() * ((r + problem.data).array().abs() + problem.data.array().abs())).sum();
        const bool gradient_ok = cosine < options.tol_grad || predicted <= sse_noise;
        if (small_step && gradient_ok) {
            finished = true;
            result.converged = true;
            result.message = "step and gradient tolerances met";
            break;
        }
        Eigen::MatrixXd aug(n + k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        bool accepted = false;
        while (!accepted) {
            // Damped step as the least-squares solution of [Jw; sqrt(lambda D)] delta = [-rw; 0].
            aug.topRows(n) = jw;
            aug.bottomRows(k) = (lambda * diag).cwiseSqrt().asDiagonal();
            rhs.head(n) = -rw;
            const Eigen::VectorXd delta = aug.colPivHouseholderQr().solve(rhs);
            const Eigen::VectorXd trial = theta + delta;
            const bool step_ok =
                (delta.array().abs() <= options.tol_step * (theta.array().abs() + 1.0)).all();

            Eigen::VectorXd r_trial = residual_internal(trial);
            const double sse_trial = r_trial.allFinite() ? weighted_sse(r_trial, weights) : INFINITY;
            if (delta.allFinite() && sse_trial < sse) {
                accepted = true;
                theta = trial;
                r = std::move(r_trial);
                sse = sse_trial;
                result.sse_history.push_back(sse);
                lambda = std::max(lambda / 10.0, 1e-12);
                // Judged on the next pass, once the gradient is known at the new point.
                small_step = step_ok;
            } else {
                lambda *= 10.0;
                if (step_ok || lambda > 1e16) {
                    finished = true;
                    result.converged = gradient_ok || negligible(sse);
                    result.message = result.converged ? "no further decrease possible at a stationary point"
                                                      : "stalled away from a stationary point";
                    break;
                }
            }
        }
    }
    if (!finished && !result.converged) result.message = "maximum iterations reached";
    result.iterations = iter;
    result.residual_norm = sse;
    result.estimates = external(theta);

    // Uncertainties in external coordinates, one-sided differences at bounds.
    const auto ext_model = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return problem.model_fn(x); };
    Eigen::MatrixXd jac(n, k);
    Eigen::VectorXd probe = result.estimates;
    const Eigen::VectorXd f0 = ext_model(probe);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& p = problem.free_parameters[std::size_t(j)];
        const double x = probe[j];
        const double h = std::max(1e-6 * std::abs(x), 1e-9);
        const bool up = x + h <= p.upper;
        const bool down = x - h >= p.lower;
        if (up && down) {
            probe[j] = x + h;
            const Eigen::VectorXd plus = ext_model(probe);
            probe[j] = x - h;
            jac.col(j) = (plus - ext_model(probe)) / (2 * h);
        } else if (up) {
            probe[j] = x + h;
            jac.col(j) = (ext_model(probe) - f0) / h;
        } else {
            probe[j] = x - h;
            jac.col(j) = (f0 - ext_model(probe)) / h;
        }
        probe[j] = x;
    }
    try {
        auto unc = estimate_uncertainties(jac, f0 - problem.data, weights, result.names);
        result.covariance = std::move(unc.covariance);
        result.sigmas = std::move(unc.sigmas);
    } catch (const RankDeficiencyError& e) {
        result.covariance = Eigen::MatrixXd::Zero(k, k);
        result.sigmas = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
        result.message += "; " + std::string(e.what());
    }
    return result;
}

}  // namespace vibronic
