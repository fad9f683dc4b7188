#pragma once

#include <Eigen/Dense>

#include "crosspred/data.hpp"

namespace crosspred {

struct LossEval {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

// Stable log(1 + e^s) and its first two derivatives.
double psi_logistic(double s);
double sigmoid(double s);

// Design row/matrix for regression families: intercept 1 followed by the
// selected regressor columns. Throws UnsupportedOperationError for
// mean/quantile, which have no design.
Eigen::MatrixXd design_matrix(const EstimandSpec& spec, const Eigen::MatrixXd& X);

double loss_value(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                  const Eigen::RowVectorXd& x, double y);

// Mean: theta - y. Quantile(q): -q + 1{y <= theta}. Regression families:
// (psi'(x_S^T theta) - y) x_S with x_S the intercept-augmented design row.
Eigen::VectorXd loss_gradient(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                              const Eigen::RowVectorXd& x, double y);

LossEval loss_eval(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                   const Eigen::RowVectorXd& x, double y);

// One gradient per row of X, stacked as an m x d matrix. Equivalent to
// looping loss_gradient but vectorized over the batch.
Eigen::MatrixXd loss_gradient_rows(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Plug-in Hessian averaged over the feature rows. Quantile is not supported
// (its inference path never forms a sandwich).
Eigen::MatrixXd hessian_plugin(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& features);

}  // namespace crosspred
