#include "crosspred/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "crosspred/errors.hpp"
#include "crosspred/losses.hpp"
#include "crosspred/rng.hpp"

namespace crosspred {

namespace {

constexpr double kGradTol = 1e-10;
constexpr int kNewtonMaxIter = 100;
constexpr double kCrossingSlack = 1e-12;

// Seed streams inside estimate_ppi.
constexpr std::uint64_t kPpiShuffleStream = 0;
constexpr std::uint64_t kPpiTrainStream = 1;

Eigen::VectorXd solve_checked(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                              const std::string& context) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    if (qr.rank() < M.cols()) {
        throw SingularSystemError(context + ": system matrix has rank " +
                                  std::to_string(qr.rank()) + " < " + std::to_string(M.cols()));
    }
    return qr.solve(b);
}

// Damped Newton on grad(theta) = 0 with step halving whenever the gradient
// norm fails to decrease.
Eigen::VectorXd newton_solve(int d, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_fn,
                             const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& hess_fn,
                             const std::string& context) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd g = grad_fn(theta);
    for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
        const double gnorm = g.lpNorm<Eigen::Infinity>();
        if (gnorm <= kGradTol) return theta;
        const Eigen::VectorXd step = solve_checked(hess_fn(theta), g, context + " (Newton step)");
        double t = 1.0;
        Eigen::VectorXd candidate = theta - step;
        Eigen::VectorXd g_new = grad_fn(candidate);
        for (int h = 0; h < 60 && !(g_new.lpNorm<Eigen::Infinity>() < gnorm); ++h) {
            t *= 0.5;
            candidate = theta - t * step;
            g_new = grad_fn(candidate);
        }
        theta = candidate;
        g = g_new;
    }
    if (g.lpNorm<Eigen::Infinity>() <= kGradTol) return theta;
    throw NonConvergenceError(context + ": Newton did not reach |grad|_inf <= " +
                              std::to_string(kGradTol) + " within " +
                              std::to_string(kNewtonMaxIter) + " iterations");
}

Eigen::MatrixXd subset_features(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
    return out;
}

// Count of values <= t in a sorted vector.
inline std::ptrdiff_t count_leq(const std::vector<double>& sorted, double t) {
    return std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
}

std::vector<double> sorted_of(const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

CrossFitBundle build_bundle(std::vector<PredictorPtr> models, const LabeledDataset& labeled,
                            const UnlabeledDataset& unlabeled, const FoldPartition& folds) {
    if (static_cast<int>(models.size()) != folds.K) {
        throw DimensionMismatchError("build_bundle: " + std::to_string(models.size()) +
                                     " models for K=" + std::to_string(folds.K) + " folds");
    }
    if (folds.n_used() > labeled.n()) {
        throw DimensionMismatchError("build_bundle: partition covers more rows than the dataset has");
    }
    CrossFitBundle bundle;
    bundle.folds = folds;
    bundle.unlabeled_preds.resize(folds.K, unlabeled.n());
    bundle.oof_preds.resize(folds.n_used());
    for (int j = 0; j < folds.K; ++j) {
        bundle.unlabeled_preds.row(j) = models[j]->predict(unlabeled.X).transpose();
        const int fs = folds.fold_size();
        const Eigen::MatrixXd fold_X =
            subset_features(labeled.X, std::vector<int>(folds.retained.begin() + j * fs,
                                                        folds.retained.begin() + (j + 1) * fs));
        bundle.oof_preds.segment(j * fs, fs) = models[j]->predict(fold_X);
    }
    bundle.fold_models = std::move(models);
    return bundle;
}

Eigen::VectorXd retained_labels(const FoldPartition& folds, const Eigen::VectorXd& y) {
    Eigen::VectorXd out(folds.n_used());
    for (int r = 0; r < folds.n_used(); ++r) {
        if (folds.retained[r] >= y.size()) {
            throw DimensionMismatchError("retained row index out of range of labels");
        }
        out(r) = y(folds.retained[r]);
    }
    return out;
}

double empirical_quantile(const Eigen::VectorXd& y, double q) {
    if (y.size() == 0) throw InvalidConfigError("empirical_quantile: no data");
    if (!(q > 0.0 && q < 1.0)) throw InvalidConfigError("empirical_quantile: q outside (0,1)");
    std::vector<double> sorted = sorted_of(y);
    const double target = q * static_cast<double>(sorted.size()) - 1e-9;
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(target)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(idx)];
}

Eigen::VectorXd estimate_classical(const EstimandSpec& spec, const LabeledDataset& labeled) {
    validate_labeled(labeled);
    spec.validate(labeled.p());
    switch (spec.family) {
        case Family::Mean: {
            Eigen::VectorXd out(1);
            out(0) = labeled.y.mean();
            return out;
        }
        case Family::Quantile: {
            Eigen::VectorXd out(1);
            out(0) = empirical_quantile(labeled.y, spec.q);
            return out;
        }
        case Family::LinearRegression: {
            const Eigen::MatrixXd A = design_matrix(spec, labeled.X);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
            if (qr.rank() < A.cols()) {
                throw SingularSystemError("classical least squares: design has rank " +
                                          std::to_string(qr.rank()) + " < " +
                                          std::to_string(A.cols()));
            }
            return qr.solve(labeled.y);
        }
        case Family::Glm: {
            auto grad = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
                return loss_gradient_rows(spec, th, labeled.X, labeled.y).colwise().mean();
            };
            auto hess = [&](const Eigen::VectorXd& th) {
                return hessian_plugin(spec, th, labeled.X);
            };
            return newton_solve(spec.dim(), grad, hess, "classical GLM");
        }
    }
    throw UnsupportedOperationError("estimate_classical: unknown family");
}

double estimate_cross_mean(const CrossFitBundle& bundle, const Eigen::VectorXd& y) {
    const Eigen::VectorXd y_ret = retained_labels(bundle.folds, y);
    const double imputed = bundle.unlabeled_preds.mean();
    const double debias = (bundle.oof_preds - y_ret).mean();
    return imputed - debias;
}

Eigen::VectorXd cross_objective_gradient(const EstimandSpec& spec, const Eigen::VectorXd& theta,
                                         const CrossFitBundle& bundle,
                                         const LabeledDataset& labeled,
                                         const UnlabeledDataset& unlabeled) {
    const int d = spec.dim();
    Eigen::VectorXd imputed = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < bundle.K(); ++j) {
        imputed +=
            loss_gradient_rows(spec, theta, unlabeled.X, bundle.unlabeled_preds.row(j).transpose())
                .colwise()
                .sum()
                .transpose();
    }
    imputed /= static_cast<double>(bundle.K()) * static_cast<double>(bundle.N());

    const Eigen::MatrixXd X_ret = subset_features(labeled.X, bundle.folds.retained);
    const Eigen::VectorXd y_ret = retained_labels(bundle.folds, labeled.y);
    const Eigen::VectorXd on_preds =
        loss_gradient_rows(spec, theta, X_ret, bundle.oof_preds).colwise().mean();
    const Eigen::VectorXd on_labels =
        loss_gradient_rows(spec, theta, X_ret, y_ret).colwise().mean();
    return imputed - (on_preds - on_labels);
}

Eigen::VectorXd estimate_cross_newton(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                      const LabeledDataset& labeled,
                                      const UnlabeledDataset& unlabeled) {
    if (spec.family == Family::Quantile) {
        throw UnsupportedOperationError("estimate_cross_newton: quantile objective is not smooth");
    }
    auto grad = [&](const Eigen::VectorXd& th) {
        return cross_objective_gradient(spec, th, bundle, labeled, unlabeled);
    };
    auto hess = [&](const Eigen::VectorXd& th) { return hessian_plugin(spec, th, unlabeled.X); };
    return newton_solve(spec.dim(), grad, hess, "debiased imputed objective");
}

QuantileCurves quantile_curves(const CrossFitBundle& bundle, const Eigen::VectorXd& y) {
    const Eigen::VectorXd y_ret = retained_labels(bundle.folds, y);
    std::vector<double> preds;
    preds.reserve(static_cast<std::size_t>(bundle.unlabeled_preds.size()));
    for (int j = 0; j < bundle.K(); ++j) {
        for (Eigen::Index i = 0; i < bundle.N(); ++i) preds.push_back(bundle.unlabeled_preds(j, i));
    }
    std::sort(preds.begin(), preds.end());
    const std::vector<double> oof = sorted_of(bundle.oof_preds);
    const std::vector<double> labels = sorted_of(y_ret);

    QuantileCurves curves;
    curves.grid.reserve(preds.size() + oof.size() + labels.size());
    curves.grid.insert(curves.grid.end(), preds.begin(), preds.end());
    curves.grid.insert(curves.grid.end(), oof.begin(), oof.end());
    curves.grid.insert(curves.grid.end(), labels.begin(), labels.end());
    std::sort(curves.grid.begin(), curves.grid.end());
    curves.grid.erase(std::unique(curves.grid.begin(), curves.grid.end()), curves.grid.end());

    const auto G = static_cast<Eigen::Index>(curves.grid.size());
    curves.f_plus.resize(G);
    curves.delta_plus.resize(G);
    const double total_preds = static_cast<double>(preds.size());
    const double n_used = static_cast<double>(bundle.n_used());
    for (Eigen::Index g = 0; g < G; ++g) {
        const double t = curves.grid[static_cast<std::size_t>(g)];
        curves.f_plus(g) = static_cast<double>(count_leq(preds, t)) / total_preds;
        curves.delta_plus(g) =
            (static_cast<double>(count_leq(oof, t)) - static_cast<double>(count_leq(labels, t))) /
            n_used;
    }
    return curves;
}

QuantilePointEstimate quantile_point_estimate(const QuantileCurves& curves, double q) {
    for (Eigen::Index g = 0; g < curves.f_plus.size(); ++g) {
        if (curves.f_plus(g) - curves.delta_plus(g) >= q - kCrossingSlack) {
            return {curves.grid[static_cast<std::size_t>(g)], true};
        }
    }
    return {curves.grid.empty() ? 0.0 : curves.grid.back(), false};
}

Eigen::VectorXd estimate_cross_general(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                       const LabeledDataset& labeled,
                                       const UnlabeledDataset& unlabeled) {
    spec.validate(labeled.p());
    switch (spec.family) {
        case Family::Mean: {
            Eigen::VectorXd out(1);
            out(0) = estimate_cross_mean(bundle, labeled.y);
            return out;
        }
        case Family::Quantile: {
            const QuantileCurves curves = quantile_curves(bundle, labeled.y);
            Eigen::VectorXd out(1);
            out(0) = quantile_point_estimate(curves, spec.q).value;
            return out;
        }
        case Family::LinearRegression: {
            const Eigen::MatrixXd A_unlab = design_matrix(spec, unlabeled.X);
            const Eigen::MatrixXd A_ret =
                design_matrix(spec, subset_features(labeled.X, bundle.folds.retained));
            const Eigen::VectorXd y_ret = retained_labels(bundle.folds, labeled.y);
            const Eigen::VectorXd f_avg = bundle.unlabeled_preds.colwise().mean().transpose();
            const double ratio =
                static_cast<double>(bundle.N()) / static_cast<double>(bundle.n_used());
            const Eigen::VectorXd rhs = A_unlab.transpose() * f_avg -
                                        ratio * (A_ret.transpose() * (bundle.oof_preds - y_ret));
            return solve_checked(A_unlab.transpose() * A_unlab, rhs,
                                 "cross-prediction least squares");
        }
        case Family::Glm:
            return estimate_cross_newton(spec, bundle, labeled, unlabeled);
    }
    throw UnsupportedOperationError("estimate_cross_general: unknown family");
}

Eigen::VectorXd split_estimate(const EstimandSpec& spec, const Predictor& model,
                               const Eigen::MatrixXd& eval_X, const Eigen::VectorXd& eval_y,
                               const UnlabeledDataset& unlabeled) {
    const Eigen::VectorXd preds_unlab = model.predict(unlabeled.X);
    const Eigen::VectorXd preds_eval = model.predict(eval_X);
    const auto m = static_cast<double>(eval_y.size());
    switch (spec.family) {
        case Family::Mean: {
            Eigen::VectorXd out(1);
            out(0) = preds_unlab.mean() - (preds_eval - eval_y).mean();
            return out;
        }
        case Family::Quantile: {
            const std::vector<double> P = sorted_of(preds_unlab);
            const std::vector<double> A = sorted_of(preds_eval);
            const std::vector<double> L = sorted_of(eval_y);
            std::vector<double> grid;
            grid.reserve(P.size() + A.size() + L.size());
            grid.insert(grid.end(), P.begin(), P.end());
            grid.insert(grid.end(), A.begin(), A.end());
            grid.insert(grid.end(), L.begin(), L.end());
            std::sort(grid.begin(), grid.end());
            grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
            Eigen::VectorXd out(1);
            for (double t : grid) {
                const double value =
                    static_cast<double>(count_leq(P, t)) / static_cast<double>(P.size()) -
                    (static_cast<double>(count_leq(A, t)) - static_cast<double>(count_leq(L, t))) /
                        m;
                if (value >= spec.q - kCrossingSlack) {
                    out(0) = t;
                    return out;
                }
            }
            out(0) = grid.back();
            return out;
        }
        case Family::LinearRegression: {
            const Eigen::MatrixXd A_unlab = design_matrix(spec, unlabeled.X);
            const Eigen::MatrixXd A_eval = design_matrix(spec, eval_X);
            const double ratio = static_cast<double>(unlabeled.n()) / m;
            const Eigen::VectorXd rhs = A_unlab.transpose() * preds_unlab -
                                        ratio * (A_eval.transpose() * (preds_eval - eval_y));
            return solve_checked(A_unlab.transpose() * A_unlab, rhs, "split least squares");
        }
        case Family::Glm: {
            auto grad = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
                const Eigen::VectorXd imputed =
                    loss_gradient_rows(spec, th, unlabeled.X, preds_unlab).colwise().mean();
                const Eigen::VectorXd on_preds =
                    loss_gradient_rows(spec, th, eval_X, preds_eval).colwise().mean();
                const Eigen::VectorXd on_labels =
                    loss_gradient_rows(spec, th, eval_X, eval_y).colwise().mean();
                return imputed - (on_preds - on_labels);
            };
            auto hess = [&](const Eigen::VectorXd& th) {
                return hessian_plugin(spec, th, unlabeled.X);
            };
            return newton_solve(spec.dim(), grad, hess, "split GLM");
        }
    }
    throw UnsupportedOperationError("split_estimate: unknown family");
}

PpiFit estimate_ppi(const EstimandSpec& spec, const LabeledDataset& labeled,
                    const UnlabeledDataset& unlabeled, double train_fraction,
                    const TrainerSpec& trainer, std::uint64_t seed) {
    validate_pair(labeled, unlabeled);
    spec.validate(labeled.p());
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidConfigError("ppi train fraction must lie in (0,1), got " +
                                 std::to_string(train_fraction));
    }
    const int n = static_cast<int>(labeled.n());
    const int n_tr = static_cast<int>(std::floor(train_fraction * n));
    const int m = n - n_tr;
    if (n_tr < 1) throw InvalidConfigError("ppi training split is empty");
    if (m < 2) {
        throw InvalidConfigError("ppi holdout has " + std::to_string(m) + " rows, need at least 2");
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, kPpiShuffleStream));
    rng.shuffle(perm);

    PpiFit fit;
    fit.train_rows.assign(perm.begin(), perm.begin() + n_tr);
    fit.holdout_rows.assign(perm.begin() + n_tr, perm.end());
    fit.model = train(trainer, subset_rows(labeled, fit.train_rows),
                      derive_seed(seed, kPpiTrainStream));
    const Eigen::MatrixXd hold_X = subset_features(labeled.X, fit.holdout_rows);
    Eigen::VectorXd hold_y(m);
    for (int i = 0; i < m; ++i) hold_y(i) = labeled.y(fit.holdout_rows[static_cast<std::size_t>(i)]);
    fit.theta = split_estimate(spec, *fit.model, hold_X, hold_y, unlabeled);
    return fit;
}

Eigen::VectorXd estimate_nodebias(const EstimandSpec& spec, const CrossFitBundle& bundle,
                                  const UnlabeledDataset& unlabeled) {
    switch (spec.family) {
        case Family::Mean: {
            Eigen::VectorXd out(1);
            out(0) = bundle.unlabeled_preds.mean();
            return out;
        }
        case Family::Quantile: {
            std::vector<double> preds;
            preds.reserve(static_cast<std::size_t>(bundle.unlabeled_preds.size()));
            for (int j = 0; j < bundle.K(); ++j) {
                for (Eigen::Index i = 0; i < bundle.N(); ++i)
                    preds.push_back(bundle.unlabeled_preds(j, i));
            }
            std::sort(preds.begin(), preds.end());
            Eigen::VectorXd out(1);
            out(0) = empirical_quantile(
                Eigen::Map<const Eigen::VectorXd>(preds.data(),
                                                  static_cast<Eigen::Index>(preds.size())),
                spec.q);
            return out;
        }
        case Family::LinearRegression: {
            const Eigen::MatrixXd A_unlab = design_matrix(spec, unlabeled.X);
            const Eigen::VectorXd f_avg = bundle.unlabeled_preds.colwise().mean().transpose();
            return solve_checked(A_unlab.transpose() * A_unlab, A_unlab.transpose() * f_avg,
                                 "prediction-only least squares");
        }
        case Family::Glm: {
            const Eigen::VectorXd f_avg = bundle.unlabeled_preds.colwise().mean().transpose();
            auto grad = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
                return loss_gradient_rows(spec, th, unlabeled.X, f_avg).colwise().mean();
            };
            auto hess = [&](const Eigen::VectorXd& th) {
                return hessian_plugin(spec, th, unlabeled.X);
            };
            return newton_solve(spec.dim(), grad, hess, "prediction-only GLM");
        }
    }
    throw UnsupportedOperationError("estimate_nodebias: unknown family");
}

NoFoldsFit estimate_nofolds(const EstimandSpec& spec, const LabeledDataset& labeled,
                            const UnlabeledDataset& unlabeled, const TrainerSpec& trainer,
                            std::uint64_t seed) {
    validate_pair(labeled, unlabeled);
    spec.validate(labeled.p());
    NoFoldsFit fit;
    fit.model = train(trainer, labeled, seed);
    fit.theta = split_estimate(spec, *fit.model, labeled.X, labeled.y, unlabeled);
    return fit;
}

}  // namespace crosspred
