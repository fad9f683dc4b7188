#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crosspred/data.hpp"
#include "crosspred/trainers.hpp"

namespace crosspred {

// All predictions any estimator or variance routine needs, computed once.
// unlabeled_preds row j holds fold model j's predictions on the unlabeled
// features; oof_preds is indexed by partition slot, so oof_preds[r] is the
// prediction on retained row r by the one model that never saw it.
struct CrossFitBundle {
    FoldPartition folds;
    std::vector<PredictorPtr> fold_models;
    Eigen::MatrixXd unlabeled_preds;  // K x N
    Eigen::VectorXd oof_preds;        // length n_used

    int K() const { return folds.K; }
    Eigen::Index N() const { return unlabeled_preds.cols(); }
    int n_used() const { return folds.n_used(); }
};

CrossFitBundle build_bundle(std::vector<PredictorPtr> models, const LabeledDataset& labeled,
                            const UnlabeledDataset& unlabeled, const FoldPartition& folds);

// Labels of the retained rows in partition slot order (aligned with oof_preds).
Eigen::VectorXd retained_labels(const FoldPartition& folds, const Eigen::VectorXd& y);

// Labeled-data-only M-estimator for each family.
Eigen::VectorXd estimate_classical(const EstimandSpec& spec, const LabeledDataset& labeled);

// Smallest order statistic whose ECDF reaches q.
double empirical_quantile(const Eigen::VectorXd& y, double q);

// Imputed mean of all K*N predictions minus the out-of-fold debiasing term.
double estimate_cross_mean(const CrossFitBundle& bundle, const Eigen::VectorXd& y);

// Minimizer of the debiased imputed objective; per-family dispatch
// (closed forms for mean and least squares, damped Newton for GLMs,
// debiased-CDF crossing for quantiles).
Eigen::VectorXd estimate_cross_general(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                       const LabeledDataset& labeled,
                                       const UnlabeledDataset& unlabeled);

// Same objective solved by damped Newton for every smooth family, including
// the ones that have closed forms. Exists so the closed forms can be checked
// against an independent route.
Eigen::VectorXd estimate_cross_newton(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                      const LabeledDataset& labeled,
                                      const UnlabeledDataset& unlabeled);

// Gradient of the debiased imputed objective at theta (smooth families).
Eigen::VectorXd cross_objective_gradient(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                                         const CrossFitBundle& bundle,
                                         const LabeledDataset& labeled,
                                         const UnlabeledDataset& unlabeled);

// Step functions driving the quantile paths: the averaged prediction ECDF
// and the out-of-fold correction, evaluated on the sorted union of every
// prediction and label that can move either curve.
struct QuantileCurves {
    std::vector<double> grid;
    Eigen::VectorXd f_plus;      // averaged ECDF of unlabeled predictions
    Eigen::VectorXd delta_plus;  // (count(oof <= t) - count(y <= t)) / n_used
};

QuantileCurves quantile_curves(const CrossFitBundle& bundle, const Eigen::VectorXd& y);

struct QuantilePointEstimate {
    double value = 0.0;
    bool crossing_found = false;
};

// Smallest grid point where f_plus - delta_plus reaches q; falls back to the
// top of the grid with crossing_found=false (cannot happen for q in (0,1)
// since the curve ends at exactly 1, but never silently misreports).
QuantilePointEstimate quantile_point_estimate(const QuantileCurves& curves, double q);

// Single-split estimator: model trained on a seeded prefix, debiasing
// evaluated on the rest.
struct PpiFit {
    Eigen::VectorXd theta;
    PredictorPtr model;
    std::vector<int> train_rows;
    std::vector<int> holdout_rows;
};

PpiFit estimate_ppi(const EstimandSpec& spec, const LabeledDataset& labeled,
                    const UnlabeledDataset& unlabeled, double train_fraction,
                    const TrainerSpec& trainer, std::uint64_t seed);

// Prediction-only objective: no debiasing term at all. Regression families
// need the unlabeled features to form their design.
Eigen::VectorXd estimate_nodebias(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                  const UnlabeledDataset& unlabeled);

// Single model trained on all labeled rows and reused in the debiasing term,
// which is exactly what the debiasing argument forbids.
struct NoFoldsFit {
    Eigen::VectorXd theta;
    PredictorPtr model;
};

NoFoldsFit estimate_nofolds(const EstimandSpec& spec, const LabeledDataset& labeled,
                            const UnlabeledDataset& unlabeled, const TrainerSpec& trainer,
                            std::uint64_t seed);

// Split-style estimate given an already-trained model and an evaluation
// subset of the labeled data; shared by the PPI and no-folds paths.
Eigen::VectorXd split_estimate(const EstimandSpec& spec, const Predictor& model,
                               const Eigen::MatrixXd& eval_X, const Eigen::VectorXd& eval_y,
                               const UnlabeledDataset& unlabeled);

}  // namespace crosspred
