#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crosspred/data.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/trainers.hpp"

namespace crosspred {

enum class Method { CrossPrediction, Classical, Ppi, NoDebias, NoFolds };

std::string method_name(Method m);

struct BootstrapConfig {
    int B = 30;
    int resample_size = 0;  // 0 = fill with n_used - n_used/K before training
    std::uint64_t seed = 0;
    bool with_replacement = false;
};

// B retrained models plus everything downstream variance formulas read:
// complements[b] lists the slot positions (rows of the retained dataset)
// model b never saw; prediction matrices are cached so no consumer has to
// re-run predict.
struct BootstrapModels {
    std::vector<PredictorPtr> models;
    std::vector<std::vector<int>> complements;
    Eigen::MatrixXd unlabeled_preds;  // B x N
    Eigen::MatrixXd labeled_preds;    // B x n_used
    Eigen::VectorXd fbar_unlabeled;   // per-column mean of unlabeled_preds
};

// `retained` must be the slot-ordered labeled data (folds.retained order).
BootstrapModels bootstrap_models(const TrainerSpec& trainer, const LabeledDataset& retained,
                                 const UnlabeledDataset& unlabeled, const BootstrapConfig& config);

struct VarianceReport {
    Family family = Family::Mean;
    double r = 0.0;              // n_used / N
    double sigma2 = 0.0;         // mean/quantile scalar variances
    double sigma2_delta = 0.0;
    Eigen::MatrixXd Sigma_theta; // d x d gradient covariance on unlabeled rows
    Eigen::MatrixXd Sigma_delta; // d x d pooled debiasing-gradient covariance
    Eigen::MatrixXd H;           // plug-in Hessian (empty for quantile)
    Eigen::MatrixXd Sigma;       // H^-1 (r Sigma_theta + Sigma_delta) H^-1
};

// Variance of the averaged-model predictions over the unlabeled rows, and
// of the pooled out-of-resample residuals.
std::pair<double, double> estimate_variance_mean(const BootstrapModels& boot,
                                                 const Eigen::VectorXd& y_retained);

VarianceReport estimate_variance_general(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                                         const BootstrapModels& boot,
                                         const LabeledDataset& retained,
                                         const UnlabeledDataset& unlabeled);

struct IntervalReport {
    Method method = Method::CrossPrediction;
    double alpha = 0.1;
    std::vector<int> coords;     // reported parameter coordinates
    Eigen::VectorXd estimate;    // one entry per reported coordinate
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::VectorXd se;          // standard error scale (half-width / z); 0 when not CLT-shaped
    Eigen::VectorXd theta_full;  // full parameter vector
    bool quantile_noncontiguous = false;
    std::vector<std::pair<std::string, double>> variance_details;  // echoed into CLI JSON
};

// CLT interval: mean gets the two-term variance, regression families get
// coordinate-wise sandwich bounds with Bonferroni z_{1-alpha/(2d)} over the
// requested coordinates.
IntervalReport confint_clt(const EstimandSpec& spec, const Eigen::VectorXd& theta_hat,
                           const VarianceReport& report, int n_used, Eigen::Index N, double alpha,
                           const std::vector<int>& coords);

struct QuantileConfSet {
    double lower = 0.0;
    double upper = 0.0;
    bool empty = false;
    bool noncontiguous = false;
    QuantilePointEstimate point;
    double sigma2_at_point = 0.0;
    double sigma2_delta_at_point = 0.0;
};

// Gradient-test acceptance region for the quantile: grid points where the
// debiased CDF sits within z standard errors of q.
QuantileConfSet confset_quantile(double q, const CrossFitBundle& bundle,
                                 const LabeledDataset& labeled, const BootstrapModels& boot,
                                 double alpha);

IntervalReport confint_cross(const EstimandSpec& spec, const CrossFitBundle& bundle,
                             const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                             const BootstrapModels& boot, double alpha);

IntervalReport confint_classical(const EstimandSpec& spec, const LabeledDataset& labeled,
                                 double alpha);

IntervalReport confint_ppi(const EstimandSpec& spec, const PpiFit& fit,
                           const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                           double alpha);

IntervalReport confint_nodebias(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                const UnlabeledDataset& unlabeled, double alpha);

IntervalReport confint_nofolds(const EstimandSpec& spec, const NoFoldsFit& fit,
                               const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                               double alpha);

// One trial's worth of knobs for a full method run.
struct MethodRunConfig {
    EstimandSpec estimand;
    TrainerSpec trainer;
    int K = 10;
    BootstrapConfig boot;
    double alpha = 0.1;
    double ppi_train_fraction = 0.5;
    std::uint64_t fold_seed = 0;
    std::uint64_t train_seed = 0;
    std::uint64_t ppi_seed = 0;
    std::uint64_t nofolds_seed = 0;
};

// Derives the per-stage seeds from one base seed.
void assign_seeds(MethodRunConfig& cfg, std::uint64_t base_seed);

// Cross-fit and bootstrap artifacts shared by the methods that need them,
// so one trial fits each model family once.
struct TrialCache {
    bool has_bundle = false;
    CrossFitBundle bundle;
    LabeledDataset retained;
    bool has_boot = false;
    BootstrapModels boot;
};

IntervalReport run_method(Method method, const MethodRunConfig& cfg, const LabeledDataset& labeled,
                          const UnlabeledDataset& unlabeled, TrialCache* cache = nullptr);

}  // namespace crosspred
