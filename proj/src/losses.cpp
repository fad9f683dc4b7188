#include "crosspred/losses.hpp"

#include <cmath>
#include <string>

#include "crosspred/errors.hpp"

namespace crosspred {

double psi_logistic(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

Eigen::MatrixXd design_matrix(const EstimandSpec& spec, const Eigen::MatrixXd& X) {
    if (spec.family != Family::LinearRegression && spec.family != Family::Glm) {
        throw UnsupportedOperationError("design_matrix: only regression families have a design");
    }
    const Eigen::Index m = X.rows();
    const int d = spec.dim();
    Eigen::MatrixXd A(m, d);
    A.col(0).setOnes();
    for (std::size_t j = 0; j < spec.regressor_indices.size(); ++j) {
        const int idx = spec.regressor_indices[j];
        if (idx < 0 || idx >= X.cols()) {
            throw DimensionMismatchError("design_matrix: regressor column " + std::to_string(idx) +
                                         " out of range for " + std::to_string(X.cols()) +
                                         " features");
        }
        A.col(static_cast<Eigen::Index>(j) + 1) = X.col(idx);
    }
    return A;
}

namespace {

void check_theta(const EstimandSpec& spec, const Eigen::VectorXd& theta) {
    if (theta.size() != spec.dim()) {
        throw DimensionMismatchError("loss: theta has dimension " + std::to_string(theta.size()) +
                                     ", estimand needs " + std::to_string(spec.dim()));
    }
}

// psi'(s) for the GLM link.
double glm_mean(GlmFamily fam, double s) {
    return fam == GlmFamily::Gaussian ? s : sigmoid(s);
}

// psi(s).
double glm_psi(GlmFamily fam, double s) {
    return fam == GlmFamily::Gaussian ? 0.5 * s * s : psi_logistic(s);
}

// psi''(s).
double glm_curv(GlmFamily fam, double s) {
    if (fam == GlmFamily::Gaussian) return 1.0;
    const double p = sigmoid(s);
    return p * (1.0 - p);
}

Eigen::VectorXd design_row(const EstimandSpec& spec, const Eigen::RowVectorXd& x) {
    const int d = spec.dim();
    Eigen::VectorXd xs(d);
    xs(0) = 1.0;
    for (std::size_t j = 0; j < spec.regressor_indices.size(); ++j) {
        const int idx = spec.regressor_indices[j];
        if (idx < 0 || idx >= x.size()) {
            throw DimensionMismatchError("loss: regressor column " + std::to_string(idx) +
                                         " out of range for " + std::to_string(x.size()) +
                                         " features");
        }
        xs(static_cast<Eigen::Index>(j) + 1) = x(idx);
    }
    return xs;
}

}  // namespace

double loss_value(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                  const Eigen::RowVectorXd& x, double y) {
    check_theta(spec, theta);
    switch (spec.family) {
        case Family::Mean: {
            const double r = theta(0) - y;
            return 0.5 * r * r;
        }
        case Family::Quantile: {
            const double t = theta(0);
            return y > t ? spec.q * (y - t) : (1.0 - spec.q) * (t - y);
        }
        case Family::LinearRegression: {
            const double s = design_row(spec, x).dot(theta);
            const double r = s - y;
            return 0.5 * r * r;
        }
        case Family::Glm: {
            const double s = design_row(spec, x).dot(theta);
            return glm_psi(spec.glm_family, s) - y * s;
        }
    }
    throw UnsupportedOperationError("loss_value: unknown family");
}

Eigen::VectorXd loss_gradient(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                              const Eigen::RowVectorXd& x, double y) {
    check_theta(spec, theta);
    switch (spec.family) {
        case Family::Mean: {
            Eigen::VectorXd g(1);
            g(0) = theta(0) - y;
            return g;
        }
        case Family::Quantile: {
            Eigen::VectorXd g(1);
            g(0) = -spec.q + (y <= theta(0) ? 1.0 : 0.0);
            return g;
        }
        case Family::LinearRegression: {
            const Eigen::VectorXd xs = design_row(spec, x);
            return (xs.dot(theta) - y) * xs;
        }
        case Family::Glm: {
            const Eigen::VectorXd xs = design_row(spec, x);
            return (glm_mean(spec.glm_family, xs.dot(theta)) - y) * xs;
        }
    }
    throw UnsupportedOperationError("loss_gradient: unknown family");
}

LossEval loss_eval(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                   const Eigen::RowVectorXd& x, double y) {
    return LossEval{loss_value(spec, theta, x, y), loss_gradient(spec, theta, x, y)};
}

Eigen::MatrixXd loss_gradient_rows(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    check_theta(spec, theta);
    const Eigen::Index m = X.rows();
    if (y.size() != m) {
        throw DimensionMismatchError("loss_gradient_rows: " + std::to_string(m) +
                                     " feature rows but " + std::to_string(y.size()) + " labels");
    }
    switch (spec.family) {
        case Family::Mean:
            return (theta(0) - y.array()).matrix();
        case Family::Quantile: {
            Eigen::MatrixXd g(m, 1);
            for (Eigen::Index i = 0; i < m; ++i) g(i, 0) = -spec.q + (y(i) <= theta(0) ? 1.0 : 0.0);
            return g;
        }
        case Family::LinearRegression: {
            const Eigen::MatrixXd A = design_matrix(spec, X);
            const Eigen::VectorXd resid = A * theta - y;
            return A.array().colwise() * resid.array();
        }
        case Family::Glm: {
            const Eigen::MatrixXd A = design_matrix(spec, X);
            const Eigen::VectorXd s = A * theta;
            Eigen::VectorXd resid(m);
            for (Eigen::Index i = 0; i < m; ++i) resid(i) = glm_mean(spec.glm_family, s(i)) - y(i);
            return A.array().colwise() * resid.array();
        }
    }
    throw UnsupportedOperationError("loss_gradient_rows: unknown family");
}

Eigen::MatrixXd hessian_plugin(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& features) {
    if (features.rows() == 0) throw InvalidConfigError("hessian_plugin: empty feature matrix");
    switch (spec.family) {
        case Family::Mean:
            return Eigen::MatrixXd::Identity(1, 1);
        case Family::Quantile:
            throw UnsupportedOperationError(
                "hessian_plugin: quantile inference uses the gradient-test set, not a sandwich");
        case Family::LinearRegression: {
            const Eigen::MatrixXd A = design_matrix(spec, features);
            return A.transpose() * A / static_cast<double>(A.rows());
        }
        case Family::Glm: {
            check_theta(spec, theta);
            const Eigen::MatrixXd A = design_matrix(spec, features);
            const Eigen::VectorXd s = A * theta;
            Eigen::VectorXd w(s.size());
            for (Eigen::Index i = 0; i < s.size(); ++i) w(i) = glm_curv(spec.glm_family, s(i));
            return A.transpose() * w.asDiagonal() * A / static_cast<double>(A.rows());
        }
    }
    throw UnsupportedOperationError("hessian_plugin: unknown family");
}

}  // namespace crosspred
