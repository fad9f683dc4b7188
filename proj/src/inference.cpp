#include "crosspred/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crosspred/errors.hpp"
#include "crosspred/losses.hpp"
#include "crosspred/rng.hpp"
#include "crosspred/stats.hpp"

namespace crosspred {

namespace {

constexpr double kCrossingSlack = 1e-12;

std::vector<double> sorted_of(const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end());
    return out;
}

inline double count_leq(const std::vector<double>& sorted, double t) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidConfigError("alpha must lie in (0,1), got " + std::to_string(alpha));
    }
}

Eigen::MatrixXd subset_features(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
    return out;
}

// Inverse through an eigendecomposition so singularity can be reported with
// the smallest eigenvalue.
Eigen::MatrixXd invert_hessian(const Eigen::MatrixXd& H, const std::string& context) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    const double largest = vals.cwiseAbs().maxCoeff();
    const double smallest = vals.minCoeff();
    if (!(smallest > 1e-12 * std::max(1.0, largest))) {
        throw SingularSystemError(context + ": Hessian singular, smallest eigenvalue " +
                                  std::to_string(smallest));
    }
    return eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

void append_grid(std::vector<double>& grid, const std::vector<double>& vals) {
    grid.insert(grid.end(), vals.begin(), vals.end());
}

void finish_grid(std::vector<double>& grid) {
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

struct SweepResult {
    double lower = 0.0;
    double upper = 0.0;
    bool empty = true;
    bool noncontiguous = false;
};

// Tracks the accepted region of a left-to-right grid sweep.
struct SweepTracker {
    SweepResult result;
    bool in_gap_after_accept = false;

    void visit(double t, bool accepted) {
        if (accepted) {
            if (result.empty) {
                result.lower = t;
                result.empty = false;
            } else if (in_gap_after_accept) {
                result.noncontiguous = true;
            }
            result.upper = t;
        } else if (!result.empty) {
            in_gap_after_accept = true;
        }
    }
};

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::CrossPrediction: return "cross";
        case Method::Classical: return "classical";
        case Method::Ppi: return "ppi";
        case Method::NoDebias: return "nodebias";
        case Method::NoFolds: return "nofolds";
    }
    return "?";
}

BootstrapModels bootstrap_models(const TrainerSpec& trainer, const LabeledDataset& retained,
                                 const UnlabeledDataset& unlabeled, const BootstrapConfig& config) {
    const int n = static_cast<int>(retained.n());
    if (config.B < 1) throw InvalidConfigError("bootstrap B must be positive");
    if (config.resample_size < 1 || config.resample_size > n) {
        throw InvalidConfigError("bootstrap resample_size " + std::to_string(config.resample_size) +
                                 " outside [1, " + std::to_string(n) + "]");
    }
    BootstrapModels boot;
    boot.models.reserve(config.B);
    boot.complements.resize(config.B);
    boot.unlabeled_preds.resize(config.B, unlabeled.n());
    boot.labeled_preds.resize(config.B, n);
    for (int b = 0; b < config.B; ++b) {
        Rng rng(derive_seed(config.seed, 2 * static_cast<std::uint64_t>(b)));
        std::vector<int> sample;
        std::vector<char> drawn(static_cast<std::size_t>(n), 0);
        if (config.with_replacement) {
            sample.reserve(config.resample_size);
            for (int i = 0; i < config.resample_size; ++i) {
                const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                sample.push_back(idx);
                drawn[static_cast<std::size_t>(idx)] = 1;
            }
        } else {
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            sample.assign(perm.begin(), perm.begin() + config.resample_size);
            for (int idx : sample) drawn[static_cast<std::size_t>(idx)] = 1;
        }
        for (int i = 0; i < n; ++i) {
            if (!drawn[static_cast<std::size_t>(i)]) boot.complements[b].push_back(i);
        }
        const PredictorPtr model =
            train(trainer, subset_rows(retained, sample),
                  derive_seed(config.seed, 2 * static_cast<std::uint64_t>(b) + 1));
        boot.unlabeled_preds.row(b) = model->predict(unlabeled.X).transpose();
        boot.labeled_preds.row(b) = model->predict(retained.X).transpose();
        boot.models.push_back(model);
    }
    boot.fbar_unlabeled = boot.unlabeled_preds.colwise().mean().transpose();
    return boot;
}

namespace {

// Pooled (replicate, out-of-resample row) pairs; errors if a replicate has
// nothing out of resample to evaluate on.
std::vector<std::pair<int, int>> pooled_pairs(const BootstrapModels& boot) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t b = 0; b < boot.complements.size(); ++b) {
        if (boot.complements[b].empty()) {
            throw Error("bootstrap replicate " + std::to_string(b) +
                        " has an empty complement; shrink resample_size");
        }
        for (int i : boot.complements[b]) pairs.emplace_back(static_cast<int>(b), i);
    }
    if (pairs.size() < 2) throw Error("fewer than 2 pooled out-of-resample residuals");
    return pairs;
}

}  // namespace

std::pair<double, double> estimate_variance_mean(const BootstrapModels& boot,
                                                 const Eigen::VectorXd& y_retained) {
    const double sigma2 = sample_variance(boot.fbar_unlabeled);
    const auto pairs = pooled_pairs(boot);
    Eigen::VectorXd residuals(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [b, i] = pairs[k];
        residuals(static_cast<Eigen::Index>(k)) = boot.labeled_preds(b, i) - y_retained(i);
    }
    return {sigma2, sample_variance(residuals)};
}

VarianceReport estimate_variance_general(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                                         const BootstrapModels& boot,
                                         const LabeledDataset& retained,
                                         const UnlabeledDataset& unlabeled) {
    VarianceReport report;
    report.family = spec.family;
    report.r = static_cast<double>(retained.n()) / static_cast<double>(unlabeled.n());

    report.Sigma_theta = sample_covariance(
        loss_gradient_rows(spec, theta, unlabeled.X, boot.fbar_unlabeled));

    const auto pairs = pooled_pairs(boot);
    const int d = spec.dim();
    Eigen::MatrixXd pooled(static_cast<Eigen::Index>(pairs.size()), d);
    Eigen::Index row = 0;
    for (std::size_t b = 0; b < boot.complements.size(); ++b) {
        const auto& comp = boot.complements[b];
        const Eigen::MatrixXd X_comp = subset_features(retained.X, comp);
        Eigen::VectorXd preds(static_cast<Eigen::Index>(comp.size()));
        Eigen::VectorXd labels(static_cast<Eigen::Index>(comp.size()));
        for (std::size_t k = 0; k < comp.size(); ++k) {
            preds(static_cast<Eigen::Index>(k)) = boot.labeled_preds(static_cast<int>(b), comp[k]);
            labels(static_cast<Eigen::Index>(k)) = retained.y(comp[k]);
        }
        pooled.middleRows(row, static_cast<Eigen::Index>(comp.size())) =
            loss_gradient_rows(spec, theta, X_comp, preds) -
            loss_gradient_rows(spec, theta, X_comp, labels);
        row += static_cast<Eigen::Index>(comp.size());
    }
    report.Sigma_delta = sample_covariance(pooled);

    if (spec.family == Family::Mean || spec.family == Family::Quantile) {
        report.sigma2 = report.Sigma_theta(0, 0);
        report.sigma2_delta = report.Sigma_delta(0, 0);
    }
    if (spec.family != Family::Quantile) {
        report.H = hessian_plugin(spec, theta, unlabeled.X);
        const Eigen::MatrixXd Hinv = invert_hessian(report.H, "variance estimation");
        report.Sigma =
            Hinv * (report.r * report.Sigma_theta + report.Sigma_delta) * Hinv;
    }
    return report;
}

IntervalReport confint_clt(const EstimandSpec& spec, const Eigen::VectorXd& theta_hat,
                           const VarianceReport& report, int n_used, Eigen::Index N, double alpha,
                           const std::vector<int>& coords) {
    check_alpha(alpha);
    if (coords.empty()) throw InvalidConfigError("confint_clt: no coordinates requested");
    if (spec.family == Family::Quantile) {
        throw UnsupportedOperationError("confint_clt: quantile uses the gradient-test set");
    }
    IntervalReport out;
    out.alpha = alpha;
    out.coords = coords;
    out.theta_full = theta_hat;
    const auto dcount = static_cast<Eigen::Index>(coords.size());
    out.estimate.resize(dcount);
    out.lower.resize(dcount);
    out.upper.resize(dcount);
    out.se.resize(dcount);
    const double z = normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(coords.size())));
    for (Eigen::Index k = 0; k < dcount; ++k) {
        const int c = coords[static_cast<std::size_t>(k)];
        if (c < 0 || c >= theta_hat.size()) {
            throw InvalidConfigError("confint_clt: coordinate " + std::to_string(c) +
                                     " out of range");
        }
        double var_total = 0.0;
        if (spec.family == Family::Mean) {
            var_total = (report.r * report.sigma2 + report.sigma2_delta) /
                        static_cast<double>(n_used);
        } else {
            var_total = report.Sigma(c, c) / static_cast<double>(n_used);
        }
        const double se = std::sqrt(std::max(var_total, 0.0));
        out.estimate(k) = theta_hat(c);
        out.se(k) = se;
        out.lower(k) = theta_hat(c) - z * se;
        out.upper(k) = theta_hat(c) + z * se;
    }
    if (spec.family == Family::Mean) {
        out.variance_details = {{"sigma2", report.sigma2},
                                {"sigma2_delta", report.sigma2_delta},
                                {"r", report.r}};
    } else {
        out.variance_details = {
            {"Sigma_cc", report.Sigma(coords[0], coords[0])}, {"r", report.r}};
    }
    (void)N;
    return out;
}

QuantileConfSet confset_quantile(double q, const CrossFitBundle& bundle,
                                 const LabeledDataset& labeled, const BootstrapModels& boot,
                                 double alpha) {
    check_alpha(alpha);
    const Eigen::VectorXd y_ret = retained_labels(bundle.folds, labeled.y);
    const double n_used = bundle.n_used();
    const double N = static_cast<double>(bundle.N());
    const double KN = static_cast<double>(bundle.K()) * N;

    std::vector<double> preds;
    preds.reserve(static_cast<std::size_t>(bundle.unlabeled_preds.size()));
    for (int j = 0; j < bundle.K(); ++j) {
        for (Eigen::Index i = 0; i < bundle.N(); ++i) preds.push_back(bundle.unlabeled_preds(j, i));
    }
    std::sort(preds.begin(), preds.end());
    const std::vector<double> oof = sorted_of(bundle.oof_preds);
    const std::vector<double> labels = sorted_of(y_ret);
    const std::vector<double> fbar = sorted_of(boot.fbar_unlabeled);

    const auto pairs = pooled_pairs(boot);
    const double M = static_cast<double>(pairs.size());
    std::vector<double> boot_pred(pairs.size()), boot_label(pairs.size()), boot_both(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [b, i] = pairs[k];
        boot_pred[k] = boot.labeled_preds(b, i);
        boot_label[k] = y_ret(i);
        boot_both[k] = std::max(boot_pred[k], boot_label[k]);
    }
    std::sort(boot_pred.begin(), boot_pred.end());
    std::sort(boot_label.begin(), boot_label.end());
    std::sort(boot_both.begin(), boot_both.end());

    std::vector<double> grid;
    grid.reserve(preds.size() + oof.size() + labels.size() + fbar.size() + boot_pred.size());
    append_grid(grid, preds);
    append_grid(grid, oof);
    append_grid(grid, labels);
    append_grid(grid, fbar);
    append_grid(grid, boot_pred);
    finish_grid(grid);

    const double z = normal_quantile(1.0 - alpha / 2.0);
    QuantileConfSet set;
    SweepTracker tracker;
    bool point_found = false;
    for (double t : grid) {
        const double value =
            count_leq(preds, t) / KN - (count_leq(oof, t) - count_leq(labels, t)) / n_used;
        const double p_hat = count_leq(fbar, t) / N;
        const double sigma2_theta = p_hat * (1.0 - p_hat) * N / (N - 1.0);
        const double a = count_leq(boot_pred, t);
        const double c = count_leq(boot_label, t);
        const double e = count_leq(boot_both, t);
        const double sum = a - c;
        const double sumsq = a + c - 2.0 * e;
        const double sigma2_delta = std::max(0.0, (sumsq - sum * sum / M) / (M - 1.0));
        const double se = std::sqrt(sigma2_theta / N + sigma2_delta / n_used);
        tracker.visit(t, std::abs(value - q) <= z * se);
        if (!point_found && value >= q - kCrossingSlack) {
            set.point = {t, true};
            set.sigma2_at_point = sigma2_theta;
            set.sigma2_delta_at_point = sigma2_delta;
            point_found = true;
        }
    }
    if (!point_found && !grid.empty()) {
        set.point = {grid.back(), false};
    }
    set.lower = tracker.result.lower;
    set.upper = tracker.result.upper;
    set.empty = tracker.result.empty;
    set.noncontiguous = tracker.result.noncontiguous;
    return set;
}

namespace {

IntervalReport quantile_set_to_report(const QuantileConfSet& set, double q, double n_used,
                                      double N, double alpha, const std::string& what) {
    if (set.empty) {
        throw Error(what + ": quantile confidence set is empty (point estimate " +
                    std::to_string(set.point.value) + ", level " + std::to_string(q) + ")");
    }
    if (!set.point.crossing_found) {
        throw Error(what + ": debiased CDF never reaches q=" + std::to_string(q));
    }
    IntervalReport out;
    out.alpha = alpha;
    out.coords = {0};
    out.estimate = Eigen::VectorXd::Constant(1, set.point.value);
    out.lower = Eigen::VectorXd::Constant(1, set.lower);
    out.upper = Eigen::VectorXd::Constant(1, set.upper);
    out.se = Eigen::VectorXd::Constant(
        1, std::sqrt(set.sigma2_at_point / N + set.sigma2_delta_at_point / n_used));
    out.theta_full = out.estimate;
    out.quantile_noncontiguous = set.noncontiguous;
    out.variance_details = {{"sigma2_theta", set.sigma2_at_point},
                            {"sigma2_delta", set.sigma2_delta_at_point}};
    return out;
}

}  // namespace

IntervalReport confint_cross(const EstimandSpec& spec, const CrossFitBundle& bundle,
                             const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                             const BootstrapModels& boot, double alpha) {
    check_alpha(alpha);
    IntervalReport out;
    if (spec.family == Family::Quantile) {
        const QuantileConfSet set = confset_quantile(spec.q, bundle, labeled, boot, alpha);
        out = quantile_set_to_report(set, spec.q, bundle.n_used(),
                                     static_cast<double>(bundle.N()), alpha,
                                     "cross-prediction quantile");
    } else {
        const LabeledDataset retained = subset_rows(labeled, bundle.folds.retained);
        const Eigen::VectorXd theta = estimate_cross_general(spec, bundle, labeled, unlabeled);
        if (spec.family == Family::Mean) {
            const auto [sigma2, sigma2_delta] = estimate_variance_mean(boot, retained.y);
            VarianceReport report;
            report.family = Family::Mean;
            report.r = static_cast<double>(bundle.n_used()) / static_cast<double>(bundle.N());
            report.sigma2 = sigma2;
            report.sigma2_delta = sigma2_delta;
            out = confint_clt(spec, theta, report, bundle.n_used(), bundle.N(), alpha, {0});
        } else {
            const VarianceReport report =
                estimate_variance_general(spec, theta, boot, retained, unlabeled);
            out = confint_clt(spec, theta, report, bundle.n_used(), bundle.N(), alpha,
                              {spec.report_coordinate});
        }
    }
    out.method = Method::CrossPrediction;
    return out;
}

IntervalReport confint_classical(const EstimandSpec& spec, const LabeledDataset& labeled,
                                 double alpha) {
    check_alpha(alpha);
    validate_labeled(labeled);
    spec.validate(labeled.p());
    const auto n = static_cast<double>(labeled.n());
    IntervalReport out;
    out.method = Method::Classical;
    out.alpha = alpha;
    out.coords = {0};
    switch (spec.family) {
        case Family::Mean: {
            const double est = labeled.y.mean();
            const double se = sample_sd(labeled.y) / std::sqrt(n);
            const double z = normal_quantile(1.0 - alpha / 2.0);
            out.estimate = Eigen::VectorXd::Constant(1, est);
            out.se = Eigen::VectorXd::Constant(1, se);
            out.lower = Eigen::VectorXd::Constant(1, est - z * se);
            out.upper = Eigen::VectorXd::Constant(1, est + z * se);
            out.theta_full = out.estimate;
            out.variance_details = {{"sd", sample_sd(labeled.y)}};
            return out;
        }
        case Family::Quantile: {
            // Order-statistic interval from binomial tail bounds.
            const std::vector<double> sorted = sorted_of(labeled.y);
            const int ni = static_cast<int>(labeled.n());
            int r = 0;
            for (int lo = 1, hi = ni; lo <= hi;) {
                const int mid = lo + (hi - lo) / 2;
                if (binomial_cdf(mid - 1, ni, spec.q) <= alpha / 2.0) {
                    r = mid;
                    lo = mid + 1;
                } else {
                    hi = mid - 1;
                }
            }
            int s = ni + 1;
            for (int lo = 1, hi = ni; lo <= hi;) {
                const int mid = lo + (hi - lo) / 2;
                if (binomial_cdf(mid - 1, ni, spec.q) >= 1.0 - alpha / 2.0) {
                    s = mid;
                    hi = mid - 1;
                } else {
                    lo = mid + 1;
                }
            }
            const double inf = std::numeric_limits<double>::infinity();
            out.estimate = Eigen::VectorXd::Constant(1, empirical_quantile(labeled.y, spec.q));
            out.lower = Eigen::VectorXd::Constant(
                1, r >= 1 ? sorted[static_cast<std::size_t>(r - 1)] : -inf);
            out.upper = Eigen::VectorXd::Constant(
                1, s <= ni ? sorted[static_cast<std::size_t>(s - 1)] : inf);
            out.se = Eigen::VectorXd::Zero(1);
            out.theta_full = out.estimate;
            out.variance_details = {{"order_stat_lower", static_cast<double>(r)},
                                    {"order_stat_upper", static_cast<double>(s)}};
            return out;
        }
        case Family::LinearRegression:
        case Family::Glm: {
            const Eigen::VectorXd theta = estimate_classical(spec, labeled);
            const Eigen::MatrixXd G = loss_gradient_rows(spec, theta, labeled.X, labeled.y);
            const Eigen::MatrixXd V = sample_covariance(G);
            const Eigen::MatrixXd H = hessian_plugin(spec, theta, labeled.X);
            const Eigen::MatrixXd Hinv = invert_hessian(H, "classical sandwich");
            const Eigen::MatrixXd Sigma = Hinv * V * Hinv;
            const int c = spec.report_coordinate;
            const double se = std::sqrt(std::max(Sigma(c, c), 0.0) / n);
            const double z = normal_quantile(1.0 - alpha / 2.0);
            out.coords = {c};
            out.estimate = Eigen::VectorXd::Constant(1, theta(c));
            out.se = Eigen::VectorXd::Constant(1, se);
            out.lower = Eigen::VectorXd::Constant(1, theta(c) - z * se);
            out.upper = Eigen::VectorXd::Constant(1, theta(c) + z * se);
            out.theta_full = theta;
            out.variance_details = {{"Sigma_cc", Sigma(c, c)}};
            return out;
        }
    }
    throw UnsupportedOperationError("confint_classical: unknown family");
}

namespace {

// Interval for the split-style estimators (PPI and no-folds), which treat
// the single trained model as fixed: two independent sums, one over the
// unlabeled pool and one over the evaluation rows.
IntervalReport confint_split(Method method, const EstimandSpec& spec, const Predictor& model,
                             const Eigen::MatrixXd& eval_X, const Eigen::VectorXd& eval_y,
                             const UnlabeledDataset& unlabeled, const Eigen::VectorXd& theta,
                             double alpha) {
    check_alpha(alpha);
    const Eigen::VectorXd preds_unlab = model.predict(unlabeled.X);
    const Eigen::VectorXd preds_eval = model.predict(eval_X);
    const double m = static_cast<double>(eval_y.size());
    const double N = static_cast<double>(unlabeled.n());
    IntervalReport out;
    out.method = method;
    out.alpha = alpha;
    out.coords = {0};
    const double z = normal_quantile(1.0 - alpha / 2.0);
    switch (spec.family) {
        case Family::Mean: {
            const double var_pred = sample_variance(preds_unlab);
            const double var_resid = sample_variance(preds_eval - eval_y);
            const double se = std::sqrt(var_pred / N + var_resid / m);
            out.estimate = Eigen::VectorXd::Constant(1, theta(0));
            out.se = Eigen::VectorXd::Constant(1, se);
            out.lower = Eigen::VectorXd::Constant(1, theta(0) - z * se);
            out.upper = Eigen::VectorXd::Constant(1, theta(0) + z * se);
            out.theta_full = out.estimate;
            out.variance_details = {{"var_pred", var_pred}, {"var_resid", var_resid}};
            return out;
        }
        case Family::Quantile: {
            const std::vector<double> P = sorted_of(preds_unlab);
            const std::vector<double> A = sorted_of(preds_eval);
            const std::vector<double> L = sorted_of(eval_y);
            std::vector<double> both(static_cast<std::size_t>(eval_y.size()));
            for (Eigen::Index i = 0; i < eval_y.size(); ++i) {
                both[static_cast<std::size_t>(i)] = std::max(preds_eval(i), eval_y(i));
            }
            std::sort(both.begin(), both.end());
            std::vector<double> grid;
            grid.reserve(P.size() + A.size() + L.size());
            append_grid(grid, P);
            append_grid(grid, A);
            append_grid(grid, L);
            finish_grid(grid);
            SweepTracker tracker;
            bool point_found = false;
            double point = grid.back(), s2_pred = 0.0, s2_delta = 0.0;
            for (double t : grid) {
                const double p_hat = count_leq(P, t) / N;
                const double a = count_leq(A, t);
                const double c = count_leq(L, t);
                const double e = count_leq(both, t);
                const double value = p_hat - (a - c) / m;
                const double sigma2_pred = p_hat * (1.0 - p_hat) * N / (N - 1.0);
                const double sum = a - c;
                const double sigma2_delta =
                    std::max(0.0, (a + c - 2.0 * e - sum * sum / m) / (m - 1.0));
                const double se = std::sqrt(sigma2_pred / N + sigma2_delta / m);
                tracker.visit(t, std::abs(value - spec.q) <= z * se);
                if (!point_found && value >= spec.q - kCrossingSlack) {
                    point = t;
                    s2_pred = sigma2_pred;
                    s2_delta = sigma2_delta;
                    point_found = true;
                }
            }
            if (tracker.result.empty) {
                throw Error(method_name(method) +
                            ": quantile confidence set is empty (point estimate " +
                            std::to_string(point) + ")");
            }
            out.estimate = Eigen::VectorXd::Constant(1, point);
            out.lower = Eigen::VectorXd::Constant(1, tracker.result.lower);
            out.upper = Eigen::VectorXd::Constant(1, tracker.result.upper);
            out.se = Eigen::VectorXd::Constant(1, std::sqrt(s2_pred / N + s2_delta / m));
            out.theta_full = out.estimate;
            out.quantile_noncontiguous = tracker.result.noncontiguous;
            out.variance_details = {{"sigma2_pred", s2_pred}, {"sigma2_delta", s2_delta}};
            return out;
        }
        case Family::LinearRegression:
        case Family::Glm: {
            const Eigen::MatrixXd G_unlab = loss_gradient_rows(spec, theta, unlabeled.X, preds_unlab);
            const Eigen::MatrixXd G_pred = loss_gradient_rows(spec, theta, eval_X, preds_eval);
            const Eigen::MatrixXd G_lab = loss_gradient_rows(spec, theta, eval_X, eval_y);
            const Eigen::MatrixXd V =
                (m / N) * sample_covariance(G_unlab) + sample_covariance(G_pred - G_lab);
            const Eigen::MatrixXd H = hessian_plugin(spec, theta, unlabeled.X);
            const Eigen::MatrixXd Hinv = invert_hessian(H, method_name(method) + " sandwich");
            const Eigen::MatrixXd Sigma = Hinv * V * Hinv;
            const int c = spec.report_coordinate;
            const double se = std::sqrt(std::max(Sigma(c, c), 0.0) / m);
            out.coords = {c};
            out.estimate = Eigen::VectorXd::Constant(1, theta(c));
            out.se = Eigen::VectorXd::Constant(1, se);
            out.lower = Eigen::VectorXd::Constant(1, theta(c) - z * se);
            out.upper = Eigen::VectorXd::Constant(1, theta(c) + z * se);
            out.theta_full = theta;
            out.variance_details = {{"Sigma_cc", Sigma(c, c)}};
            return out;
        }
    }
    throw UnsupportedOperationError("confint_split: unknown family");
}

}  // namespace

IntervalReport confint_ppi(const EstimandSpec& spec, const PpiFit& fit,
                           const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                           double alpha) {
    const Eigen::MatrixXd hold_X = subset_features(labeled.X, fit.holdout_rows);
    Eigen::VectorXd hold_y(static_cast<Eigen::Index>(fit.holdout_rows.size()));
    for (std::size_t i = 0; i < fit.holdout_rows.size(); ++i) {
        hold_y(static_cast<Eigen::Index>(i)) = labeled.y(fit.holdout_rows[i]);
    }
    return confint_split(Method::Ppi, spec, *fit.model, hold_X, hold_y, unlabeled, fit.theta,
                         alpha);
}

IntervalReport confint_nofolds(const EstimandSpec& spec, const NoFoldsFit& fit,
                               const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                               double alpha) {
    return confint_split(Method::NoFolds, spec, *fit.model, labeled.X, labeled.y, unlabeled,
                         fit.theta, alpha);
}

IntervalReport confint_nodebias(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                const UnlabeledDataset& unlabeled, double alpha) {
    check_alpha(alpha);
    const Eigen::VectorXd theta = estimate_nodebias(spec, bundle, unlabeled);
    const double N = static_cast<double>(bundle.N());
    IntervalReport out;
    out.method = Method::NoDebias;
    out.alpha = alpha;
    out.coords = {0};
    const double z = normal_quantile(1.0 - alpha / 2.0);
    switch (spec.family) {
        case Family::Mean: {
            const Eigen::VectorXd f_avg = bundle.unlabeled_preds.colwise().mean().transpose();
            const double var_avg = sample_variance(f_avg);
            const double se = std::sqrt(var_avg / N);
            out.estimate = Eigen::VectorXd::Constant(1, theta(0));
            out.se = Eigen::VectorXd::Constant(1, se);
            out.lower = Eigen::VectorXd::Constant(1, theta(0) - z * se);
            out.upper = Eigen::VectorXd::Constant(1, theta(0) + z * se);
            out.theta_full = out.estimate;
            out.variance_details = {{"var_avg_pred", var_avg}};
            return out;
        }
        case Family::Quantile: {
            // Per-row averaged prediction indicators: sweep the K*N prediction
            // values in order, maintaining each unlabeled row's indicator mean.
            const Eigen::Index Ni = bundle.N();
            const int K = bundle.K();
            std::vector<std::pair<double, int>> events;
            events.reserve(static_cast<std::size_t>(K) * static_cast<std::size_t>(Ni));
            for (int j = 0; j < K; ++j) {
                for (Eigen::Index i = 0; i < Ni; ++i) {
                    events.emplace_back(bundle.unlabeled_preds(j, i), static_cast<int>(i));
                }
            }
            std::sort(events.begin(), events.end());
            std::vector<double> rowmean(static_cast<std::size_t>(Ni), 0.0);
            double sum1 = 0.0, sum2 = 0.0;
            SweepTracker tracker;
            bool point_found = false;
            double point = events.back().first, var_at_point = 0.0;
            std::size_t k = 0;
            while (k < events.size()) {
                const double t = events[k].first;
                while (k < events.size() && events[k].first == t) {
                    double& mval = rowmean[static_cast<std::size_t>(events[k].second)];
                    sum1 -= mval;
                    sum2 -= mval * mval;
                    mval += 1.0 / K;
                    sum1 += mval;
                    sum2 += mval * mval;
                    ++k;
                }
                const double f_plus = sum1 / N;
                const double var_rows = std::max(0.0, (sum2 - sum1 * sum1 / N) / (N - 1.0));
                const double se = std::sqrt(var_rows / N);
                tracker.visit(t, std::abs(f_plus - spec.q) <= z * se);
                if (!point_found && f_plus >= spec.q - kCrossingSlack) {
                    point = t;
                    var_at_point = var_rows;
                    point_found = true;
                }
            }
            if (tracker.result.empty) {
                throw Error("nodebias: quantile confidence set is empty (point estimate " +
                            std::to_string(point) + ")");
            }
            out.estimate = Eigen::VectorXd::Constant(1, point);
            out.lower = Eigen::VectorXd::Constant(1, tracker.result.lower);
            out.upper = Eigen::VectorXd::Constant(1, tracker.result.upper);
            out.se = Eigen::VectorXd::Constant(1, std::sqrt(var_at_point / N));
            out.theta_full = out.estimate;
            out.quantile_noncontiguous = tracker.result.noncontiguous;
            out.variance_details = {{"var_avg_indicator", var_at_point}};
            return out;
        }
        case Family::LinearRegression:
        case Family::Glm: {
            const Eigen::VectorXd f_avg = bundle.unlabeled_preds.colwise().mean().transpose();
            const Eigen::MatrixXd G = loss_gradient_rows(spec, theta, unlabeled.X, f_avg);
            const Eigen::MatrixXd V = sample_covariance(G);
            const Eigen::MatrixXd H = hessian_plugin(spec, theta, unlabeled.X);
            const Eigen::MatrixXd Hinv = invert_hessian(H, "nodebias sandwich");
            const Eigen::MatrixXd Sigma = Hinv * V * Hinv;
            const int c = spec.report_coordinate;
            const double se = std::sqrt(std::max(Sigma(c, c), 0.0) / N);
            out.coords = {c};
            out.estimate = Eigen::VectorXd::Constant(1, theta(c));
            out.se = Eigen::VectorXd::Constant(1, se);
            out.lower = Eigen::VectorXd::Constant(1, theta(c) - z * se);
            out.upper = Eigen::VectorXd::Constant(1, theta(c) + z * se);
            out.theta_full = theta;
            out.variance_details = {{"Sigma_cc", Sigma(c, c)}};
            return out;
        }
    }
    throw UnsupportedOperationError("confint_nodebias: unknown family");
}

void assign_seeds(MethodRunConfig& cfg, std::uint64_t base_seed) {
    cfg.fold_seed = derive_seed(base_seed, 11);
    cfg.train_seed = derive_seed(base_seed, 12);
    cfg.boot.seed = derive_seed(base_seed, 13);
    cfg.ppi_seed = derive_seed(base_seed, 14);
    cfg.nofolds_seed = derive_seed(base_seed, 15);
}

namespace {

void ensure_bundle(const MethodRunConfig& cfg, const LabeledDataset& labeled,
                   const UnlabeledDataset& unlabeled, TrialCache& cache) {
    if (cache.has_bundle) return;
    const FoldPartition folds =
        make_folds(static_cast<int>(labeled.n()), cfg.K, cfg.fold_seed);
    auto models = train_fold_models(cfg.trainer, labeled, folds, cfg.train_seed);
    cache.bundle = build_bundle(std::move(models), labeled, unlabeled, folds);
    cache.retained = subset_rows(labeled, folds.retained);
    cache.has_bundle = true;
}

void ensure_boot(const MethodRunConfig& cfg, const UnlabeledDataset& unlabeled,
                 TrialCache& cache) {
    if (cache.has_boot) return;
    BootstrapConfig bc = cfg.boot;
    if (bc.resample_size == 0) {
        const int n_used = cache.bundle.n_used();
        bc.resample_size = n_used - n_used / cfg.K;
    }
    cache.boot = bootstrap_models(cfg.trainer, cache.retained, unlabeled, bc);
    cache.has_boot = true;
}

}  // namespace

IntervalReport run_method(Method method, const MethodRunConfig& cfg, const LabeledDataset& labeled,
                          const UnlabeledDataset& unlabeled, TrialCache* cache) {
    validate_pair(labeled, unlabeled);
    cfg.estimand.validate(labeled.p());
    cfg.trainer.validate();
    check_alpha(cfg.alpha);
    TrialCache local;
    TrialCache& c = cache ? *cache : local;
    switch (method) {
        case Method::Classical:
            return confint_classical(cfg.estimand, labeled, cfg.alpha);
        case Method::CrossPrediction: {
            ensure_bundle(cfg, labeled, unlabeled, c);
            ensure_boot(cfg, unlabeled, c);
            return confint_cross(cfg.estimand, c.bundle, labeled, unlabeled, c.boot, cfg.alpha);
        }
        case Method::NoDebias: {
            ensure_bundle(cfg, labeled, unlabeled, c);
            return confint_nodebias(cfg.estimand, c.bundle, unlabeled, cfg.alpha);
        }
        case Method::Ppi: {
            const PpiFit fit = estimate_ppi(cfg.estimand, labeled, unlabeled,
                                            cfg.ppi_train_fraction, cfg.trainer, cfg.ppi_seed);
            return confint_ppi(cfg.estimand, fit, labeled, unlabeled, cfg.alpha);
        }
        case Method::NoFolds: {
            const NoFoldsFit fit =
                estimate_nofolds(cfg.estimand, labeled, unlabeled, cfg.trainer, cfg.nofolds_seed);
            return confint_nofolds(cfg.estimand, fit, labeled, unlabeled, cfg.alpha);
        }
    }
    throw UnsupportedOperationError("run_method: unknown method");
}

}  // namespace crosspred
