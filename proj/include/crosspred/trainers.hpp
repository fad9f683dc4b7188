#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crosspred/data.hpp"

namespace crosspred {

// Fitted model. Immutable after training; predict is deterministic and
// returns one value per input row.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

enum class TrainerKind { RidgeLinear, BoostedStumps, Knn, BiasedWrapper };

struct TrainerSpec {
    TrainerKind kind = TrainerKind::RidgeLinear;
    double lambda = 1e-6;                            // RidgeLinear
    int rounds = 200;                                // BoostedStumps
    double learning_rate = 0.1;                      //
    int min_leaf = 5;                                //
    int k = 5;                                       // Knn
    double offset = 0.0;                             // BiasedWrapper
    std::shared_ptr<const TrainerSpec> inner;        //
    std::uint64_t seed_salt = 0;

    void validate() const;
    std::string describe() const;
};

TrainerSpec make_ridge(double lambda = 1e-6);
TrainerSpec make_stumps(int rounds = 200, double learning_rate = 0.1, int min_leaf = 5);
TrainerSpec make_knn(int k = 5);
TrainerSpec make_biased(const TrainerSpec& inner, double offset);

PredictorPtr train(const TrainerSpec& spec, const LabeledDataset& data, std::uint64_t seed);

// Model j is trained on the retained rows outside fold j, with seed
// seed ^ mix64(j) so each fold model is an independent draw of the
// trainer's randomness. Returned in fold order.
std::vector<PredictorPtr> train_fold_models(const TrainerSpec& spec, const LabeledDataset& data,
                                            const FoldPartition& folds, std::uint64_t seed);

// Rows of `data` selected by original index, in the order given.
LabeledDataset subset_rows(const LabeledDataset& data, const std::vector<int>& rows);

}  // namespace crosspred
