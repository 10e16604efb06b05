#pragma once
// Bounded nonlinear least squares (Levenberg-Marquardt with numerical
// Jacobians) and covariance-based uncertainties.

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vibronic/error.hpp"

namespace vibronic {

struct FreeParameter {
    std::string name;
    double initial = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

/// Least-squares problem: minimize sum_i w_i (model_i(x) - data_i)^2.
struct FitProblem {
    std::string model;  ///< label, e.g. "multi_lorentzian"
    std::vector<FreeParameter> free_parameters;
    std::map<std::string, double> fixed_parameters;
    /// Model predictions at the data points for the given free parameter values.
    /// Non-finite entries mark the point as unusable and make the step fail.
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> model_fn;
    Eigen::VectorXd data;
    /// Empty means Poisson weights 1 / max(data_i, 1).
    Eigen::VectorXd weights;
};

struct LmOptions {
    double tol_grad = 1e-6;
    double tol_step = 1e-10;
    int max_iter = 200;
    double initial_lambda = 1e-3;
};

struct FitResult {
    std::string model;
    std::vector<std::string> names;
    Eigen::VectorXd estimates;
    Eigen::VectorXd sigmas;
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;  ///< weighted SSE
    int iterations = 0;
    bool converged = false;
    std::string message;
    /// Weighted SSE after every accepted step, starting with the initial point.
    std::vector<double> sse_history;
    std::map<std::string, double> fixed_parameters;

    double value(std::string_view name) const;
    double sigma(std::string_view name) const;
};

/// Thrown when J^T W J is singular; lists the parameters involved.
class RankDeficiencyError : public NumericalError {
public:
    RankDeficiencyError(const std::string& what, std::vector<std::string> parameters)
        : NumericalError(what), parameters_(std::move(parameters)) {}
    const std::vector<std::string>& parameters() const noexcept { return parameters_; }

private:
    std::vector<std::string> parameters_;
};

struct Uncertainties {
    Eigen::MatrixXd covariance;
    Eigen::VectorXd sigmas;
};

/// covariance = s^2 (J^T W J)^-1 with s^2 = weighted SSE / (N - k). `jacobian`
/// holds d model / d parameter; `residuals` are model - data.
Uncertainties estimate_uncertainties(const Eigen::Ref<const Eigen::MatrixXd>& jacobian,
                                     const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                     const Eigen::Ref<const Eigen::VectorXd>& weights,
                                     const std::vector<std::string>& names);

/// Central-difference Jacobian of `fn` at `x`, step max(1e-6 |x_j|, 1e-9)
/// scaled by `step_scale`.
Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, double step_scale = 1.0);

/// Damped Gauss-Newton iteration. Bounds are enforced through a smooth
/// reparameterization (sine for two-sided, square root for one-sided).
/// Running out of iterations yields converged = false rather than an error.
/// Throws InputError for an invalid problem or non-finite model at the
/// initial point and NumericalError when the initial Jacobian is singular.
FitResult levenberg_marquardt(const FitProblem& problem, const LmOptions& options = {});

}  // namespace vibronic
