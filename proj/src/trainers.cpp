#include "crosspred/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "crosspred/csv.hpp"
#include "crosspred/errors.hpp"
#include "crosspred/rng.hpp"

namespace crosspred {

void TrainerSpec::validate() const {
    switch (kind) {
        case TrainerKind::RidgeLinear:
            if (lambda < 0.0) throw InvalidConfigError("ridge lambda must be nonnegative");
            break;
        case TrainerKind::BoostedStumps:
            if (rounds < 1) throw InvalidConfigError("stumps rounds must be positive");
            if (!(learning_rate > 0.0 && learning_rate <= 1.0))
                throw InvalidConfigError("stumps learning rate must lie in (0,1]");
            if (min_leaf < 1) throw InvalidConfigError("stumps min_leaf must be positive");
            break;
        case TrainerKind::Knn:
            if (k < 1) throw InvalidConfigError("knn k must be positive");
            break;
        case TrainerKind::BiasedWrapper:
            if (!inner) throw InvalidConfigError("biased wrapper needs an inner trainer");
            inner->validate();
            break;
    }
}

std::string TrainerSpec::describe() const {
    switch (kind) {
        case TrainerKind::RidgeLinear:
            return "ridge:" + format_double(lambda);
        case TrainerKind::BoostedStumps:
            return "stumps:" + std::to_string(rounds) + ":" + format_double(learning_rate) + ":" +
                   std::to_string(min_leaf);
        case TrainerKind::Knn:
            return "knn:" + std::to_string(k);
        case TrainerKind::BiasedWrapper:
            return "biased:" + format_double(offset) + ":" + (inner ? inner->describe() : "?");
    }
    return "?";
}

TrainerSpec make_ridge(double lambda) {
    TrainerSpec s;
    s.kind = TrainerKind::RidgeLinear;
    s.lambda = lambda;
    return s;
}

TrainerSpec make_stumps(int rounds, double learning_rate, int min_leaf) {
    TrainerSpec s;
    s.kind = TrainerKind::BoostedStumps;
    s.rounds = rounds;
    s.learning_rate = learning_rate;
    s.min_leaf = min_leaf;
    return s;
}

TrainerSpec make_knn(int k) {
    TrainerSpec s;
    s.kind = TrainerKind::Knn;
    s.k = k;
    return s;
}

TrainerSpec make_biased(const TrainerSpec& inner, double offset) {
    TrainerSpec s;
    s.kind = TrainerKind::BiasedWrapper;
    s.offset = offset;
    s.inner = std::make_shared<TrainerSpec>(inner);
    return s;
}

LabeledDataset subset_rows(const LabeledDataset& data, const std::vector<int>& rows) {
    LabeledDataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.X.row(static_cast<Eigen::Index>(r)) = data.X.row(rows[r]);
        out.y(static_cast<Eigen::Index>(r)) = data.y(rows[r]);
    }
    return out;
}

namespace {

// Intercept-augmented copy of the feature matrix.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd A(X.rows(), X.cols() + 1);
    A.leftCols(X.cols()) = X;
    A.col(X.cols()).setOnes();
    return A;
}

class RidgePredictor final : public Predictor {
public:
    RidgePredictor(Eigen::VectorXd beta) : beta_(std::move(beta)) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        if (X.cols() + 1 != beta_.size()) {
            throw DimensionMismatchError("ridge predict: got " + std::to_string(X.cols()) +
                                         " features, trained on " + std::to_string(beta_.size() - 1));
        }
        return X * beta_.head(beta_.size() - 1) + Eigen::VectorXd::Constant(X.rows(), beta_(beta_.size() - 1));
    }

private:
    Eigen::VectorXd beta_;
};

PredictorPtr train_ridge(const TrainerSpec& spec, const LabeledDataset& data) {
    const Eigen::MatrixXd A = with_intercept(data.X);
    if (spec.lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < A.cols()) {
            throw SingularSystemError("ridge with lambda=0: design matrix has rank " +
                                      std::to_string(qr.rank()) + " < " + std::to_string(A.cols()));
        }
        return std::make_shared<RidgePredictor>(qr.solve(data.y));
    }
    const Eigen::MatrixXd M =
        A.transpose() * A + spec.lambda * Eigen::MatrixXd::Identity(A.cols(), A.cols());
    return std::make_shared<RidgePredictor>(M.ldlt().solve(A.transpose() * data.y));
}

struct Stump {
    int feature = 0;
    double threshold = 0.0;
    double left_value = 0.0;   // x(feature) <= threshold
    double right_value = 0.0;
};

class StumpsPredictor final : public Predictor {
public:
    StumpsPredictor(double base, double lr, std::vector<Stump> stumps)
        : base_(base), lr_(lr), stumps_(std::move(stumps)) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_);
        for (const Stump& s : stumps_) {
            if (s.feature >= X.cols()) {
                throw DimensionMismatchError("stumps predict: feature " + std::to_string(s.feature) +
                                             " out of range");
            }
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                out(i) += lr_ * (X(i, s.feature) <= s.threshold ? s.left_value : s.right_value);
            }
        }
        return out;
    }

private:
    double base_;
    double lr_;
    std::vector<Stump> stumps_;
};

PredictorPtr train_stumps(const TrainerSpec& spec, const LabeledDataset& data) {
    const int n = static_cast<int>(data.n());
    const int p = static_cast<int>(data.p());
    const double base = data.y.mean();
    Eigen::VectorXd resid = data.y.array() - base;

    // Rows sorted by each feature once; reused every round.
    std::vector<std::vector<int>> order(p);
    for (int j = 0; j < p; ++j) {
        order[j].resize(n);
        std::iota(order[j].begin(), order[j].end(), 0);
        std::stable_sort(order[j].begin(), order[j].end(),
                         [&](int a, int b) { return data.X(a, j) < data.X(b, j); });
    }

    std::vector<Stump> stumps;
    stumps.reserve(spec.rounds);
    for (int round = 0; round < spec.rounds; ++round) {
        // Minimizing SSE is maximizing S_L^2/n_L + S_R^2/n_R over legal cuts.
        double best_score = -1.0;
        Stump best;
        const double total = resid.sum();
        for (int j = 0; j < p; ++j) {
            const auto& ord = order[j];
            double left_sum = 0.0;
            for (int pos = 0; pos < n - 1; ++pos) {
                left_sum += resid(ord[pos]);
                const double lo = data.X(ord[pos], j);
                const double hi = data.X(ord[pos + 1], j);
                if (lo == hi) continue;  // cannot separate tied values
                const int n_left = pos + 1;
                const int n_right = n - n_left;
                if (n_left < spec.min_leaf || n_right < spec.min_leaf) continue;
                const double right_sum = total - left_sum;
                const double score =
                    left_sum * left_sum / n_left + right_sum * right_sum / n_right;
                if (score > best_score) {
                    best_score = score;
                    best.feature = j;
                    best.threshold = lo + 0.5 * (hi - lo);
                    best.left_value = left_sum / n_left;
                    best.right_value = right_sum / n_right;
                }
            }
        }
        if (best_score < 0.0) break;  // no legal split anywhere
        stumps.push_back(best);
        for (int i = 0; i < n; ++i) {
            resid(i) -= spec.learning_rate *
                        (data.X(i, best.feature) <= best.threshold ? best.left_value
                                                                   : best.right_value);
        }
    }
    return std::make_shared<StumpsPredictor>(base, spec.learning_rate, std::move(stumps));
}

class KnnPredictor final : public Predictor {
public:
    KnnPredictor(Eigen::MatrixXd X, Eigen::VectorXd y, int k)
        : X_(std::move(X)), y_(std::move(y)), k_(k) {
        norms_ = X_.rowwise().squaredNorm();
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& Q) const override {
        if (Q.cols() != X_.cols()) {
            throw DimensionMismatchError("knn predict: got " + std::to_string(Q.cols()) +
                                         " features, trained on " + std::to_string(X_.cols()));
        }
        const Eigen::Index n = X_.rows();
        Eigen::VectorXd out(Q.rows());
        std::vector<int> idx(static_cast<std::size_t>(n));
        Eigen::VectorXd dist(n);
        for (Eigen::Index qi = 0; qi < Q.rows(); ++qi) {
            // ||x - q||^2 up to the constant ||q||^2, which preserves order.
            dist = norms_ - 2.0 * (X_ * Q.row(qi).transpose());
            std::iota(idx.begin(), idx.end(), 0);
            // (dist, index) is a total order, so the nth_element prefix is
            // exactly the k nearest with ties going to lower row indices.
            auto closer = [&](int a, int b) {
                return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
            };
            std::nth_element(idx.begin(), idx.begin() + (k_ - 1), idx.end(), closer);
            double acc = 0.0;
            for (int t = 0; t < k_; ++t) acc += y_(idx[t]);
            out(qi) = acc / k_;
        }
        return out;
    }

private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    Eigen::VectorXd norms_;
    int k_;
};

class OffsetPredictor final : public Predictor {
public:
    OffsetPredictor(PredictorPtr inner, double offset) : inner_(std::move(inner)), offset_(offset) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        return inner_->predict(X).array() + offset_;
    }

private:
    PredictorPtr inner_;
    double offset_;
};

}  // namespace

PredictorPtr train(const TrainerSpec& spec, const LabeledDataset& data, std::uint64_t seed) {
    spec.validate();
    validate_labeled(data, "training data");
    const std::uint64_t salted = derive_seed(seed, spec.seed_salt);
    (void)salted;  // the built-in learners are deterministic; kept for wrappers with randomness
    switch (spec.kind) {
        case TrainerKind::RidgeLinear:
            return train_ridge(spec, data);
        case TrainerKind::BoostedStumps:
            return train_stumps(spec, data);
        case TrainerKind::Knn:
            if (spec.k > data.n()) {
                throw InvalidConfigError("knn k=" + std::to_string(spec.k) +
                                         " exceeds training size " + std::to_string(data.n()));
            }
            return std::make_shared<KnnPredictor>(data.X, data.y, spec.k);
        case TrainerKind::BiasedWrapper:
            return std::make_shared<OffsetPredictor>(train(*spec.inner, data, seed), spec.offset);
    }
    throw UnsupportedOperationError("train: unknown trainer kind");
}

std::vector<PredictorPtr> train_fold_models(const TrainerSpec& spec, const LabeledDataset& data,
                                            const FoldPartition& folds, std::uint64_t seed) {
    std::vector<PredictorPtr> models;
    models.reserve(folds.K);
    for (int j = 0; j < folds.K; ++j) {
        const LabeledDataset sub = subset_rows(data, folds.complement_rows(j));
        models.push_back(train(spec, sub, seed ^ mix64(static_cast<std::uint64_t>(j))));
    }
    return models;
}

}  // namespace crosspred
