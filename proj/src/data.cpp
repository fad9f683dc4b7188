#include "crosspred/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crosspred/errors.hpp"
#include "crosspred/rng.hpp"

namespace crosspred {

namespace {

void check_matrix_finite(const Eigen::MatrixXd& X, const std::string& name) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (!std::isfinite(X(i, j))) {
                throw NonFiniteDataError(name + ": non-finite feature at row " +
                                         std::to_string(i) + ", column " + std::to_string(j));
            }
        }
    }
}

}  // namespace

void validate_labeled(const LabeledDataset& d, const std::string& name) {
    if (d.X.rows() == 0) throw InvalidConfigError(name + ": no rows");
    if (d.X.cols() == 0) throw InvalidConfigError(name + ": no feature columns");
    if (d.y.size() != d.X.rows()) {
        throw DimensionMismatchError(name + ": label count " + std::to_string(d.y.size()) +
                                     " does not match row count " + std::to_string(d.X.rows()));
    }
    check_matrix_finite(d.X, name);
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        if (!std::isfinite(d.y(i))) {
            throw NonFiniteDataError(name + ": non-finite label at row " + std::to_string(i));
        }
    }
}

void validate_unlabeled(const UnlabeledDataset& d, const std::string& name) {
    if (d.X.rows() == 0) throw InvalidConfigError(name + ": no rows");
    if (d.X.cols() == 0) throw InvalidConfigError(name + ": no feature columns");
    check_matrix_finite(d.X, name);
}

void validate_pair(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled) {
    validate_labeled(labeled);
    validate_unlabeled(unlabeled);
    if (labeled.X.cols() != unlabeled.X.cols()) {
        throw DimensionMismatchError("labeled has " + std::to_string(labeled.X.cols()) +
                                     " feature columns but unlabeled has " +
                                     std::to_string(unlabeled.X.cols()));
    }
}

std::vector<int> FoldPartition::fold_rows(int j) const {
    std::vector<int> out;
    out.reserve(fold_size());
    for (int r = 0; r < n_used(); ++r) {
        if (fold_of[r] == j) out.push_back(retained[r]);
    }
    return out;
}

std::vector<int> FoldPartition::complement_rows(int j) const {
    std::vector<int> out;
    out.reserve(n_used() - fold_size());
    for (int r = 0; r < n_used(); ++r) {
        if (fold_of[r] != j) out.push_back(retained[r]);
    }
    return out;
}

FoldPartition make_folds(int n, int K, std::uint64_t seed) {
    if (K < 2) throw InvalidConfigError("make_folds: K must be at least 2, got " + std::to_string(K));
    if (n < K) {
        throw InvalidConfigError("make_folds: n=" + std::to_string(n) +
                                 " is smaller than K=" + std::to_string(K));
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    const int n_used = K * (n / K);
    FoldPartition part;
    part.K = K;
    part.retained.assign(perm.begin(), perm.begin() + n_used);
    part.fold_of.resize(n_used);
    const int fs = n_used / K;
    for (int r = 0; r < n_used; ++r) part.fold_of[r] = r / fs;
    return part;
}

int EstimandSpec::dim() const {
    switch (family) {
        case Family::Mean:
        case Family::Quantile:
            return 1;
        case Family::LinearRegression:
        case Family::Glm:
            return 1 + static_cast<int>(regressor_indices.size());
    }
    return 1;
}

void EstimandSpec::validate(Eigen::Index feature_count) const {
    if (family == Family::Quantile) {
        if (!(q > 0.0 && q < 1.0)) {
            throw InvalidConfigError("quantile level must lie in (0,1), got " + std::to_string(q));
        }
    }
    if (family == Family::LinearRegression || family == Family::Glm) {
        if (regressor_indices.empty()) {
            throw InvalidConfigError("regression estimand needs at least one regressor column");
        }
        for (int idx : regressor_indices) {
            if (idx < 0 || idx >= feature_count) {
                throw InvalidConfigError("regressor column " + std::to_string(idx) +
                                         " out of range for " + std::to_string(feature_count) +
                                         " features");
            }
        }
        if (report_coordinate < 0 || report_coordinate >= dim()) {
            throw InvalidConfigError("report coordinate " + std::to_string(report_coordinate) +
                                     " out of range for dimension " + std::to_string(dim()));
        }
    }
}

}  // namespace crosspred
