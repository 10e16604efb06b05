#include <cmath>

#include "doctest.h"
#include "vibronic/error.hpp"
#include "vibronic/fitkit.hpp"

using namespace vibronic;

namespace {

FitProblem linear_problem(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    FitProblem p;
    p.model = "line";
    p.free_parameters = {{"a", 0.5}, {"b", 0.5}};
    p.data = y;
    p.weights = w;
    p.model_fn = [x](const Eigen::VectorXd& q) -> Eigen::VectorXd { return (q[0] + q[1] * x.array()).matrix(); };
    return p;
}

}  // namespace

TEST_CASE("one-parameter quadratic") {
    FitProblem p;
    p.model = "toy";
    p.free_parameters = {{"x", 0.0}};
    p.data = Eigen::VectorXd::Zero(1);
    p.weights = Eigen::VectorXd::Ones(1);
    p.model_fn = [](const Eigen::VectorXd& q) { return Eigen::VectorXd::Constant(1, q[0] - 3.0); };
    const auto r = levenberg_marquardt(p);
    CHECK(r.converged);
    CHECK(std::abs(r.value("x") - 3.0) < 1e-10);
}

TEST_CASE("rosenbrock") {
    FitProblem p;
    p.model = "rosenbrock";
    p.free_parameters = {{"x", -1.2}, {"y", 1.0}};
    p.data = Eigen::VectorXd::Zero(2);
    p.weights = Eigen::VectorXd::Ones(2);
    p.model_fn = [](const Eigen::VectorXd& q) {
        return Eigen::Vector2d(10.0 * (q[1] - q[0] * q[0]), 1.0 - q[0]).eval();
    };
    const auto r = levenberg_marquardt(p);
    CHECK(r.converged);
    CHECK(std::abs(r.value("x") - 1.0) < 1e-6);
    CHECK(std::abs(r.value("y") - 1.0) < 1e-6);
    for (std::size_t i = 1; i < r.sse_history.size(); ++i) CHECK(r.sse_history[i] <= r.sse_history[i - 1]);
}

TEST_CASE("non-finite start is an input error") {
    FitProblem p;
    p.model = "nan";
    p.free_parameters = {{"x", 0.0}};
    p.data = Eigen::VectorXd::Zero(1);
    p.model_fn = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, NAN); };
    CHECK_THROWS_AS(levenberg_marquardt(p), InputError);
}

TEST_CASE("problem validation") {
    FitProblem p;
    p.model = "bad";
    p.data = Eigen::VectorXd::Zero(3);
    p.model_fn = [](const Eigen::VectorXd& q) { return Eigen::VectorXd::Constant(3, q[0]); };
    p.free_parameters = {{"x", 0.0}, {"x", 1.0}};
    CHECK_THROWS_AS(levenberg_marquardt(p), InputError);
    p.free_parameters = {{"x", 5.0, 0.0, 1.0}};
    CHECK_THROWS_AS(levenberg_marquardt(p), InputError);
    p.free_parameters = {{"x", 0.5}};
    p.fixed_parameters = {{"x", 1.0}};
    CHECK_THROWS_AS(levenberg_marquardt(p), InputError);
    p.fixed_parameters.clear();
    p.data = Eigen::VectorXd();
    CHECK_THROWS_AS(levenberg_marquardt(p), InputError);
}

TEST_CASE("bounds hold and an active bound is reachable") {
    FitProblem p;
    p.model = "bounded";
    p.free_parameters = {{"x", 0.5, 0.0, 1.0}, {"y", 2.0, 1.0, std::numeric_limits<double>::infinity()}};
    p.data = Eigen::VectorXd::Zero(2);
    p.weights = Eigen::VectorXd::Ones(2);
    p.model_fn = [](const Eigen::VectorXd& q) { return Eigen::Vector2d(q[0] - 3.0, q[1] - 4.0).eval(); };
    const auto r = levenberg_marquardt(p);
    CHECK(r.value("x") <= 1.0);
    CHECK(r.value("x") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.value("y") == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("iteration limit gives converged = false") {
    FitProblem p;
    p.model = "rosenbrock";
    p.free_parameters = {{"x", -1.2}, {"y", 1.0}};
    p.data = Eigen::VectorXd::Zero(2);
    p.weights = Eigen::VectorXd::Ones(2);
    p.model_fn = [](const Eigen::VectorXd& q) {
        return Eigen::Vector2d(10.0 * (q[1] - q[0] * q[0]), 1.0 - q[0]).eval();
    };
    LmOptions o;
    o.max_iter = 2;
    const auto r = levenberg_marquardt(p, o);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
}

TEST_CASE("singular jacobian at start") {
    FitProblem p;
    p.model = "sum";
    p.free_parameters = {{"a", 1.0}, {"b", 1.0}};
    p.data = Eigen::VectorXd::LinSpaced(5, 0, 4);
    p.weights = Eigen::VectorXd::Ones(5);
    p.model_fn = [](const Eigen::VectorXd& q) { return Eigen::VectorXd::Constant(5, q[0] + q[1]); };
    CHECK_THROWS_AS(levenberg_marquardt(p), NumericalError);
}

TEST_CASE("covariance") {
    SUBCASE("orthonormal jacobian") {
        const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(4, 2);
        const Eigen::Vector4d res(0.0, 0.0, 1.0, 1.0);
        const auto u = estimate_uncertainties(j, res, Eigen::VectorXd::Ones(4), {"a", "b"});
        CHECK((u.covariance - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(u.sigmas.isApprox(Eigen::Vector2d::Ones()));
    }
    SUBCASE("duplicated column") {
        Eigen::MatrixXd j(4, 3);
        j << 1, 2, 1, 1, 3, 1, 1, 4, 1, 1, 5, 1;
        try {
            estimate_uncertainties(j, Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(4), {"a", "b", "c"});
            FAIL("expected a rank deficiency");
        } catch (const RankDeficiencyError& e) {
            CHECK(e.parameters() == std::vector<std::string>{"a", "c"});
        }
    }
    SUBCASE("weighted straight line") {
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, 0, 11);
        const Eigen::VectorXd noise = (Eigen::VectorXd(12) << 0.3, -0.2, 0.1, 0.4, -0.5, 0.2, -0.1, 0.0, 0.3, -0.3, 0.1, -0.2).finished();
        const Eigen::VectorXd y = (1.5 + 0.7 * x.array()).matrix() + noise;
        const Eigen::VectorXd w = (1.0 + 0.1 * x.array()).matrix();
        const auto r = levenberg_marquardt(linear_problem(x, y, w));

        Eigen::MatrixXd a(12, 2);
        a.col(0).setOnes();
        a.col(1) = x;
        const Eigen::MatrixXd ata = a.transpose() * w.asDiagonal() * a;
        const Eigen::Vector2d beta = ata.ldlt().solve(a.transpose() * w.asDiagonal() * y);
        const Eigen::VectorXd res = a * beta - y;
        const double s2 = res.dot(w.asDiagonal() * res) / 10.0;
        const Eigen::MatrixXd cov = s2 * ata.inverse();
        CHECK(std::abs(r.value("a") - beta[0]) < 1e-9);
        CHECK(std::abs(r.value("b") - beta[1]) < 1e-9);
        CHECK((r.covariance - cov).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((r.covariance - r.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.covariance);
        CHECK((es.eigenvalues().array() >= 0).all());
    }
}

TEST_CASE("jacobian step halving agrees") {
    const auto fn = [](const Eigen::VectorXd& q) -> Eigen::VectorXd {
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, -3, 3);
        return (q[0] * (-(x.array() - q[1]).square() / q[2]).exp()).matrix();
    };
    const Eigen::Vector3d q(2.0, 0.4, 1.7);
    const auto j1 = numeric_jacobian(fn, q);
    const auto j2 = numeric_jacobian(fn, q, 0.5);
    CHECK((j1 - j2).cwiseAbs().maxCoeff() <= 1e-5 * j1.cwiseAbs().maxCoeff());
}

TEST_CASE("default weights are poisson") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, 0, 5);
    const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0.0, 3.0, 5.0, 9.0, 11.0, 14.0).finished();
    auto p = linear_problem(x, y, Eigen::VectorXd());
    const auto r = levenberg_marquardt(p);
    const Eigen::VectorXd w = y.cwiseMax(1.0).cwiseInverse();
    p.weights = w;
    const auto r2 = levenberg_marquardt(p);
    CHECK(r.value("a") == doctest::Approx(r2.value("a")).epsilon(1e-12));
    CHECK(r.residual_norm == doctest::Approx(r2.residual_norm).epsilon(1e-12));
}

TEST_CASE("repeated fits are bitwise identical") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(20, 0, 5);
    const Eigen::VectorXd y = (3.0 * (-0.7 * x.array()).exp() + 0.01 * (5 * x.array()).sin()).matrix();
    FitProblem p;
    p.model = "exp";
    p.free_parameters = {{"a", 1.0, 0.0, 10.0}, {"k", 0.3}};
    p.data = y;
    p.weights = Eigen::VectorXd::Ones(20);
    p.model_fn = [x](const Eigen::VectorXd& q) -> Eigen::VectorXd { return (q[0] * (-q[1] * x.array()).exp()).matrix(); };
    const auto a = levenberg_marquardt(p);
    const auto b = levenberg_marquardt(p);
    CHECK(a.estimates == b.estimates);
    CHECK(a.covariance == b.covariance);
    CHECK(a.residual_norm == b.residual_norm);
}
