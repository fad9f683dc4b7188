#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "crosspred/data.hpp"
#include "crosspred/errors.hpp"
#include "crosspred/estimators.hpp"
#include "crosspred/losses.hpp"
#include "crosspred/rng.hpp"
#include "crosspred/trainers.hpp"

using namespace crosspred;

namespace {

EstimandSpec mean_spec() { return EstimandSpec{}; }

EstimandSpec quantile_spec(double q) {
    EstimandSpec s;
    s.family = Family::Quantile;
    s.q = q;
    return s;
}

EstimandSpec ols_spec(std::vector<int> cols, int coord = 0) {
    EstimandSpec s;
    s.family = Family::LinearRegression;
    s.regressor_indices = std::move(cols);
    s.report_coordinate = coord;
    return s;
}

EstimandSpec glm_gaussian_spec(std::vector<int> cols) {
    EstimandSpec s;
    s.family = Family::Glm;
    s.glm_family = GlmFamily::Gaussian;
    s.regressor_indices = std::move(cols);
    return s;
}

EstimandSpec logit_spec(std::vector<int> cols) {
    EstimandSpec s;
    s.family = Family::Glm;
    s.glm_family = GlmFamily::Logistic;
    s.regressor_indices = std::move(cols);
    return s;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Identity partition: slot r = row r, fold_of[r] = r / fold_size.
FoldPartition manual_folds(int K, int n_used) {
    FoldPartition f;
    f.K = K;
    f.retained.resize(n_used);
    for (int r = 0; r < n_used; ++r) f.retained[r] = r;
    f.fold_of.resize(n_used);
    for (int r = 0; r < n_used; ++r) f.fold_of[r] = r / (n_used / K);
    return f;
}

// Predictor that returns the first feature column unchanged.
class FirstColumnPredictor : public Predictor {
public:
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return X.col(0); }
};

struct Synth {
    LabeledDataset labeled;
    UnlabeledDataset unlabeled;
};

// y = 4 + x1 - 0.5 x2 + noise_sd * xi
Synth synth_linear(int n, int N, double noise_sd, std::uint64_t seed) {
    Rng rng(seed);
    Synth s;
    s.labeled.X.resize(n, 2);
    s.labeled.y.resize(n);
    for (int i = 0; i < n; ++i) {
        s.labeled.X(i, 0) = rng.normal();
        s.labeled.X(i, 1) = rng.normal();
        s.labeled.y(i) =
            4.0 + s.labeled.X(i, 0) - 0.5 * s.labeled.X(i, 1) + noise_sd * rng.normal();
    }
    s.unlabeled.X.resize(N, 2);
    for (int i = 0; i < N; ++i) {
        s.unlabeled.X(i, 0) = rng.normal();
        s.unlabeled.X(i, 1) = rng.normal();
    }
    return s;
}

CrossFitBundle fit_bundle(const Synth& s, const TrainerSpec& trainer, int K, std::uint64_t seed) {
    const FoldPartition folds = make_folds(static_cast<int>(s.labeled.n()), K, seed);
    auto models = train_fold_models(trainer, s.labeled, folds, seed + 1);
    return build_bundle(std::move(models), s.labeled, s.unlabeled, folds);
}

}  // namespace

TEST_CASE("classical estimators at hand values") {
    LabeledDataset d;
    d.X = Eigen::MatrixXd::Zero(3, 1);
    d.y = vec({1, 2, 3});
    CHECK(estimate_classical(mean_spec(), d)(0) == doctest::Approx(2.0).epsilon(1e-15));

    LabeledDataset d4;
    d4.X = Eigen::MatrixXd::Zero(4, 1);
    d4.y = vec({4, 2, 1, 3});
    CHECK(estimate_classical(quantile_spec(0.75), d4)(0) == 3.0);
    CHECK(estimate_classical(quantile_spec(0.5), d4)(0) == 2.0);
    CHECK(empirical_quantile(vec({1, 2, 3, 4}), 0.25) == 1.0);
    CHECK(empirical_quantile(vec({5}), 0.9) == 5.0);
}

TEST_CASE("empirical quantile agrees with a brute-force ecdf scan") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 1 + static_cast<int>(rng.below(40));
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = std::round(rng.normal() * 4.0) / 2.0;  // force ties
        const double q = 0.05 + 0.9 * rng.uniform();
        std::vector<double> sorted(y.data(), y.data() + n);
        std::sort(sorted.begin(), sorted.end());
        double oracle = sorted.back();
        for (double t : sorted) {
            const double ecdf =
                static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) -
                                    sorted.begin()) /
                n;
            if (ecdf >= q - 1e-12) {
                oracle = t;
                break;
            }
        }
        CHECK(empirical_quantile(y, q) == oracle);
    }
}

TEST_CASE("classical regression recovers exact linear and logistic truths") {
    Rng rng(7);
    LabeledDataset d;
    d.X.resize(12, 2);
    d.y.resize(12);
    for (int i = 0; i < 12; ++i) {
        d.X(i, 0) = rng.normal();
        d.X(i, 1) = rng.normal();
        d.y(i) = 3.0 - 2.0 * d.X(i, 0) + 0.5 * d.X(i, 1);
    }
    const Eigen::VectorXd beta = estimate_classical(ols_spec({0, 1}), d);
    CHECK(beta(0) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(beta(1) == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(beta(2) == doctest::Approx(0.5).epsilon(1e-8));

    // gaussian GLM shares the OLS objective
    const Eigen::VectorXd bg = estimate_classical(glm_gaussian_spec({0, 1}), d);
    CHECK((bg - beta).cwiseAbs().maxCoeff() < 1e-6);

    // logistic: check stationarity of the mean gradient at the solution
    LabeledDataset db;
    db.X.resize(80, 1);
    db.y.resize(80);
    for (int i = 0; i < 80; ++i) {
        db.X(i, 0) = rng.normal();
        db.y(i) = rng.uniform() < sigmoid(0.8 * db.X(i, 0) - 0.2) ? 1.0 : 0.0;
    }
    const EstimandSpec lg = logit_spec({0});
    const Eigen::VectorXd bl = estimate_classical(lg, db);
    const Eigen::VectorXd g = loss_gradient_rows(lg, bl, db.X, db.y).colwise().mean();
    CHECK(g.lpNorm<Eigen::Infinity>() <= 1e-8);

    // collinear design is a hard error
    LabeledDataset sing;
    sing.X.resize(4, 2);
    sing.X << 1, 2, 2, 4, 3, 6, 4, 8;
    sing.y = vec({1, 2, 3, 4});
    CHECK_THROWS_AS(estimate_classical(ols_spec({0, 1}), sing), SingularSystemError);
}

TEST_CASE("bundle construction caches the right predictions") {
    const Synth s = synth_linear(10, 3, 0.1, 2);
    const FoldPartition folds = make_folds(10, 2, 5);
    auto models = train_fold_models(make_ridge(0.01), s.labeled, folds, 6);
    const CrossFitBundle bundle = build_bundle(models, s.labeled, s.unlabeled, folds);

    CHECK(bundle.K() == 2);
    CHECK(bundle.N() == 3);
    CHECK(bundle.unlabeled_preds.rows() == 2);
    CHECK(bundle.unlabeled_preds.cols() == 3);
    CHECK(bundle.oof_preds.size() == 10);

    // each cached value matches a direct model call
    for (int j = 0; j < 2; ++j) {
        const Eigen::VectorXd direct = models[j]->predict(s.unlabeled.X);
        CHECK(bundle.unlabeled_preds.row(j).transpose() == direct);
        for (int r : folds.fold_rows(j)) {
            // find the slot of original row r
            for (int slot = 0; slot < folds.n_used(); ++slot) {
                if (folds.retained[slot] == r) {
                    Eigen::MatrixXd one = s.labeled.X.row(r);
                    CHECK(bundle.oof_preds(slot) == models[j]->predict(one)(0));
                }
            }
        }
    }

    const CrossFitBundle again = build_bundle(models, s.labeled, s.unlabeled, folds);
    CHECK(bundle.unlabeled_preds == again.unlabeled_preds);
    CHECK(bundle.oof_preds == again.oof_preds);

    auto short_models = models;
    short_models.pop_back();
    CHECK_THROWS_AS(build_bundle(short_models, s.labeled, s.unlabeled, folds),
                    DimensionMismatchError);
}

TEST_CASE("debiased mean matches the hand-evaluated worked example") {
    CrossFitBundle bundle;
    bundle.folds = manual_folds(2, 2);
    bundle.unlabeled_preds.resize(2, 2);
    bundle.unlabeled_preds << 1, 3, 2, 4;
    bundle.oof_preds = vec({2, 5});
    const Eigen::VectorXd y = vec({1, 4});
    // imputed mean (1+3+2+4)/4 = 2.5; debias ((2-1)+(5-4))/2 = 1.0
    CHECK(estimate_cross_mean(bundle, y) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("constant fold models cancel and return the retained-label mean") {
    // knn with k = complement size predicts the training-label mean everywhere
    const Synth s = synth_linear(12, 40, 1.0, 3);
    const FoldPartition folds = make_folds(12, 3, 4);
    auto models = train_fold_models(make_knn(8), s.labeled, folds, 1);
    const CrossFitBundle bundle = build_bundle(models, s.labeled, s.unlabeled, folds);
    const double expected = retained_labels(folds, s.labeled.y).mean();
    CHECK(estimate_cross_mean(bundle, s.labeled.y) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("perfect out-of-fold predictions leave only the imputed term") {
    CrossFitBundle bundle;
    bundle.folds = manual_folds(2, 4);
    bundle.unlabeled_preds.resize(2, 3);
    bundle.unlabeled_preds << 1, 2, 3, 4, 5, 6;
    const Eigen::VectorXd y = vec({7, 8, 9, 10});
    bundle.oof_preds = y;  // debias term vanishes
    CHECK(estimate_cross_mean(bundle, y) == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("general path reproduces the closed-form mean and newton agrees") {
    const Synth s = synth_linear(30, 50, 0.5, 8);
    const CrossFitBundle bundle = fit_bundle(s, make_stumps(40, 0.2, 2), 5, 9);
    const double closed = estimate_cross_mean(bundle, s.labeled.y);
    const Eigen::VectorXd general =
        estimate_cross_general(mean_spec(), bundle, s.labeled, s.unlabeled);
    CHECK(general.size() == 1);
    CHECK(std::abs(general(0) - closed) < 1e-10);

    const Eigen::VectorXd newton =
        estimate_cross_newton(mean_spec(), bundle, s.labeled, s.unlabeled);
    CHECK(std::abs(newton(0) - closed) < 1e-8);
}

TEST_CASE("least-squares closed form with perfect labeled predictions") {
    // exact linear labels + interpolating trainer make the debias factor vanish
    Synth s = synth_linear(20, 30, 0.0, 10);
    const CrossFitBundle bundle = fit_bundle(s, make_ridge(0.0), 4, 11);
    const EstimandSpec spec = ols_spec({0, 1});
    const Eigen::VectorXd theta = estimate_cross_general(spec, bundle, s.labeled, s.unlabeled);

    // independent oracle: least squares of the averaged prediction on the
    // unlabeled design
    const Eigen::MatrixXd D = design_matrix(spec, s.unlabeled.X);
    const Eigen::VectorXd f_avg = bundle.unlabeled_preds.colwise().mean().transpose();
    const Eigen::VectorXd oracle = (D.transpose() * D).ldlt().solve(D.transpose() * f_avg);
    CHECK((theta - oracle).cwiseAbs().maxCoeff() < 1e-8);

    // and both equal the exact generating coefficients
    CHECK(theta(0) == doctest::Approx(4.0).epsilon(1e-7));
    CHECK(theta(1) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(theta(2) == doctest::Approx(-0.5).epsilon(1e-7));
}

TEST_CASE("gaussian glm and least squares solve the same objective") {
    const Synth s = synth_linear(40, 60, 1.0, 12);
    const CrossFitBundle bundle = fit_bundle(s, make_stumps(30, 0.2, 3), 4, 13);
    const Eigen::VectorXd ols =
        estimate_cross_general(ols_spec({0, 1}), bundle, s.labeled, s.unlabeled);
    const Eigen::VectorXd glm =
        estimate_cross_general(glm_gaussian_spec({0, 1}), bundle, s.labeled, s.unlabeled);
    CHECK((ols - glm).cwiseAbs().maxCoeff() < 1e-6);

    // the newton route is a third independent solver of the same objective
    const Eigen::VectorXd newton =
        estimate_cross_newton(ols_spec({0, 1}), bundle, s.labeled, s.unlabeled);
    CHECK((ols - newton).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("returned solutions are stationary points of the debiased objective") {
    Rng rng(14);
    Synth s = synth_linear(36, 48, 0.8, 15);
    // binary labels for the logistic family
    Synth sb = s;
    for (int i = 0; i < sb.labeled.n(); ++i) {
        sb.labeled.y(i) = rng.uniform() < sigmoid(sb.labeled.X(i, 0)) ? 1.0 : 0.0;
    }
    const CrossFitBundle bundle = fit_bundle(s, make_stumps(25, 0.2, 3), 4, 16);
    // logistic imputation needs predictions in (0,1); knn averages of binary
    // labels stay in [0,1], and the debias objective tolerates the endpoints
    const CrossFitBundle bundle_b = fit_bundle(sb, make_knn(9), 4, 17);

    const EstimandSpec so = ols_spec({0, 1});
    const Eigen::VectorXd to = estimate_cross_general(so, bundle, s.labeled, s.unlabeled);
    CHECK(cross_objective_gradient(so, to, bundle, s.labeled, s.unlabeled)
              .lpNorm<Eigen::Infinity>() <= 1e-8);

    const EstimandSpec sl = logit_spec({0, 1});
    const Eigen::VectorXd tl = estimate_cross_general(sl, bundle_b, sb.labeled, sb.unlabeled);
    CHECK(cross_objective_gradient(sl, tl, bundle_b, sb.labeled, sb.unlabeled)
              .lpNorm<Eigen::Infinity>() <= 1e-8);

    CHECK_THROWS_AS(estimate_cross_newton(quantile_spec(0.5), bundle, s.labeled, s.unlabeled),
                    UnsupportedOperationError);
}

TEST_CASE("quantile curves are exact step functions of the cached predictions") {
    const Synth s = synth_linear(24, 30, 1.0, 18);
    const CrossFitBundle bundle = fit_bundle(s, make_knn(3), 4, 19);
    const QuantileCurves curves = quantile_curves(bundle, s.labeled.y);

    REQUIRE(!curves.grid.empty());
    CHECK(std::is_sorted(curves.grid.begin(), curves.grid.end()));
    CHECK(std::adjacent_find(curves.grid.begin(), curves.grid.end()) == curves.grid.end());

    // brute-force re-count at every grid point
    const Eigen::VectorXd y_ret = retained_labels(bundle.folds, s.labeled.y);
    const double KN = static_cast<double>(bundle.K()) * static_cast<double>(bundle.N());
    for (std::size_t g = 0; g < curves.grid.size(); ++g) {
        const double t = curves.grid[g];
        double cnt_pred = 0, cnt_oof = 0, cnt_lab = 0;
        for (int j = 0; j < bundle.K(); ++j)
            for (int i = 0; i < bundle.N(); ++i)
                if (bundle.unlabeled_preds(j, i) <= t) ++cnt_pred;
        for (int r = 0; r < bundle.n_used(); ++r) {
            if (bundle.oof_preds(r) <= t) ++cnt_oof;
            if (y_ret(r) <= t) ++cnt_lab;
        }
        CHECK(curves.f_plus(static_cast<Eigen::Index>(g)) ==
              doctest::Approx(cnt_pred / KN).epsilon(1e-14));
        CHECK(curves.delta_plus(static_cast<Eigen::Index>(g)) ==
              doctest::Approx((cnt_oof - cnt_lab) / bundle.n_used()).epsilon(1e-14));
    }

    // f_plus alone is a nondecreasing step function ending at exactly 1
    for (Eigen::Index g = 1; g < curves.f_plus.size(); ++g)
        CHECK(curves.f_plus(g) >= curves.f_plus(g - 1));
    CHECK(curves.f_plus(curves.f_plus.size() - 1) == 1.0);

    // the crossing point satisfies >= q and its left neighbor does not
    const double q = 0.75;
    const QuantilePointEstimate pt = quantile_point_estimate(curves, q);
    CHECK(pt.crossing_found);
    const Eigen::VectorXd debiased = curves.f_plus - curves.delta_plus;
    std::size_t at = curves.grid.size();
    for (std::size_t g = 0; g < curves.grid.size(); ++g) {
        if (curves.grid[g] == pt.value) {
            at = g;
            break;
        }
    }
    REQUIRE(at < curves.grid.size());
    CHECK(debiased(static_cast<Eigen::Index>(at)) >= q - 1e-12);
    for (std::size_t g = 0; g < at; ++g)
        CHECK(debiased(static_cast<Eigen::Index>(g)) < q - 1e-12);

    // the general path returns exactly this crossing
    const Eigen::VectorXd gq =
        estimate_cross_general(quantile_spec(q), bundle, s.labeled, s.unlabeled);
    CHECK(gq(0) == pt.value);
}

TEST_CASE("split estimator matches the hand-evaluated worked example") {
    const FirstColumnPredictor model;
    Eigen::MatrixXd eval_X(2, 1);
    eval_X << 1, -1;  // predictions on the holdout
    const Eigen::VectorXd eval_y = vec({0, 0});
    UnlabeledDataset unlabeled;
    unlabeled.X.resize(2, 1);
    unlabeled.X << 3, 5;  // predictions on the unlabeled pool

    const Eigen::VectorXd theta =
        split_estimate(mean_spec(), model, eval_X, eval_y, unlabeled);
    // imputed mean 4, debias mean (1 + (-1))/2 = 0
    CHECK(theta(0) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("single-split estimator splits deterministically and cancels constants") {
    const Synth s = synth_linear(20, 25, 1.0, 20);

    const PpiFit fit = estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.5, make_ridge(0.1), 3);
    CHECK(fit.train_rows.size() == 10);
    CHECK(fit.holdout_rows.size() == 10);
    const PpiFit fit2 = estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.5, make_ridge(0.1), 3);
    CHECK(fit.theta == fit2.theta);
    CHECK(fit.train_rows == fit2.train_rows);
    const PpiFit fit3 = estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.5, make_ridge(0.1), 4);
    CHECK(fit.train_rows != fit3.train_rows);

    // knn with k = train size returns a constant, so theta = holdout label mean
    const PpiFit cfit = estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.5, make_knn(10), 5);
    double hold_mean = 0.0;
    for (int r : cfit.holdout_rows) hold_mean += s.labeled.y(r);
    hold_mean /= static_cast<double>(cfit.holdout_rows.size());
    CHECK(cfit.theta(0) == doctest::Approx(hold_mean).epsilon(1e-12));

    // splits too small to evaluate or train are rejected
    CHECK_THROWS_AS(estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.95, make_ridge(0.1), 0),
                    InvalidConfigError);
    CHECK_THROWS_AS(estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.01, make_ridge(0.1), 0),
                    InvalidConfigError);
}

TEST_CASE("no-debias estimator ignores labels entirely") {
    CrossFitBundle bundle;
    bundle.folds = manual_folds(2, 4);
    bundle.unlabeled_preds = Eigen::MatrixXd::Constant(2, 5, 7.25);
    bundle.oof_preds = vec({1, 2, 3, 4});
    UnlabeledDataset unlabeled;
    unlabeled.X = Eigen::MatrixXd::Zero(5, 1);
    CHECK(estimate_nodebias(mean_spec(), bundle, unlabeled)(0) == doctest::Approx(7.25));

    // when oof predictions equal the labels exactly, debiasing is a no-op
    const Synth s = synth_linear(16, 20, 0.7, 21);
    CrossFitBundle b2 = fit_bundle(s, make_stumps(20, 0.3, 2), 4, 22);
    LabeledDataset relabeled = s.labeled;
    for (int slot = 0; slot < b2.folds.n_used(); ++slot)
        relabeled.y(b2.folds.retained[slot]) = b2.oof_preds(slot);
    for (const EstimandSpec& spec : {mean_spec(), ols_spec({0, 1})}) {
        const Eigen::VectorXd nd = estimate_nodebias(spec, b2, s.unlabeled);
        const Eigen::VectorXd cg = estimate_cross_general(spec, b2, relabeled, s.unlabeled);
        CHECK((nd - cg).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("no-folds estimator on a memorizing trainer keeps only the imputed term") {
    const Synth s = synth_linear(15, 40, 1.0, 23);
    const NoFoldsFit fit = estimate_nofolds(mean_spec(), s.labeled, s.unlabeled, make_knn(1), 2);
    const PredictorPtr same = train(make_knn(1), s.labeled, 2);
    CHECK(fit.theta(0) == same->predict(s.unlabeled.X).mean());
}

TEST_CASE("no-folds equals the single-split estimator for a data-blind constant model") {
    // ridge on all-zero labels fits the zero function for any subset, so the
    // biased wrapper's output is the same constant regardless of the split
    Synth s = synth_linear(18, 22, 1.0, 24);
    s.labeled.y.setZero();
    const TrainerSpec constant = make_biased(make_ridge(1.0), 1.5);
    const NoFoldsFit nf = estimate_nofolds(mean_spec(), s.labeled, s.unlabeled, constant, 0);
    const PpiFit pp = estimate_ppi(mean_spec(), s.labeled, s.unlabeled, 0.5, constant, 0);
    CHECK(std::abs(nf.theta(0) - pp.theta(0)) < 1e-12);
    CHECK(nf.theta(0) == doctest::Approx(0.0));
}

TEST_CASE("debiased mean is unbiased across many data draws") {
    // small monte carlo: mean family, linear truth theta* = 4
    const int trials = 400;
    Eigen::VectorXd estimates(trials);
    for (int t = 0; t < trials; ++t) {
        const Synth s = synth_linear(60, 240, 1.0, 1000 + static_cast<std::uint64_t>(t));
        const CrossFitBundle bundle = fit_bundle(s, make_ridge(0.001), 3, 77 + t);
        estimates(t) = estimate_cross_mean(bundle, s.labeled.y);
    }
    const double mc_mean = estimates.mean();
    const double se = std::sqrt((estimates.array() - mc_mean).square().sum() /
                                (trials - 1.0) / trials);
    CHECK(std::abs(mc_mean - 4.0) <= 4.0 * se);
}

TEST_CASE("biased imputation without debiasing lands near truth plus offset") {
    const double offset = 2.0;
    const int trials = 100;
    Eigen::VectorXd ests(trials);
    for (int t = 0; t < trials; ++t) {
        const Synth s = synth_linear(40, 160, 0.3, 5000 + static_cast<std::uint64_t>(t));
        const CrossFitBundle bundle =
            fit_bundle(s, make_biased(make_ridge(0.001), offset), 4, 31 + t);
        ests(t) = estimate_nodebias(mean_spec(), bundle, s.unlabeled)(0);
    }
    const double mc_mean = ests.mean();
    const double se =
        std::sqrt((ests.array() - mc_mean).square().sum() / (trials - 1.0) / trials);
    CHECK(std::abs(mc_mean - (4.0 + offset)) <= 3.0 * se);
}
