#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace crosspred {

// Feature matrix plus observed labels. Rows are observations.
struct LabeledDataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

// Feature matrix only, for the pool whose labels were never observed.
struct UnlabeledDataset {
    Eigen::MatrixXd X;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

// Throws NonFiniteDataError / DimensionMismatchError naming the offending
// row and column. `name` tags the dataset in messages ("labeled" etc.).
void validate_labeled(const LabeledDataset& d, const std::string& name = "labeled");
void validate_unlabeled(const UnlabeledDataset& d, const std::string& name = "unlabeled");

// Checks both datasets individually and that feature dimensions agree.
void validate_pair(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled);

// Partition of the labeled rows into K equal folds. When K does not divide
// n, the last n mod K rows of the seeded permutation are dropped, so only
// n_used = K * (n / K) rows take part. retained[r] is the original row index
// of slot r and fold_of[r] = r / (n_used / K).
struct FoldPartition {
    int K = 0;
    std::vector<int> retained;
    std::vector<int> fold_of;

    int n_used() const { return static_cast<int>(retained.size()); }
    int fold_size() const { return n_used() / K; }
    // Original row indices belonging to fold j / to its complement.
    std::vector<int> fold_rows(int j) const;
    std::vector<int> complement_rows(int j) const;
};

FoldPartition make_folds(int n, int K, std::uint64_t seed);

enum class Family { Mean, Quantile, LinearRegression, Glm };
enum class GlmFamily { Gaussian, Logistic };

// What is being estimated. For regression families, `regressor_indices`
// selects feature columns (an intercept column of ones is prepended
// automatically) and `report_coordinate` picks the coefficient whose
// interval is reported; coordinate 0 is the intercept.
struct EstimandSpec {
    Family family = Family::Mean;
    GlmFamily glm_family = GlmFamily::Gaussian;
    double q = 0.5;
    std::vector<int> regressor_indices;
    int report_coordinate = 0;

    // Parameter dimension: 1 for mean/quantile, 1 + #regressors otherwise.
    int dim() const;
    void validate(Eigen::Index feature_count) const;
};

}  // namespace crosspred
