#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crosspred/data.hpp"
#include "crosspred/inference.hpp"
#include "crosspred/trainers.hpp"

namespace crosspred {

enum class DgpKind { MeanQuantile, LinearReg };

// Gaussian synthetic designs. MeanQuantile: X ~ N(0, I_2),
// Y = mu + X^T beta + xi with beta_1 = beta_2 = R sigma_Y / sqrt(2) and
// xi ~ N(0, sigma_Y^2 (1 - R^2)), so Y ~ N(mu, sigma_Y^2) marginally.
// LinearReg: X ~ N(0, I_3), Y = X1 + X2 + r0 sigma_Y X3 + xi with
// xi ~ N(0, sigma_Y^2 (1 - r0^2)); the estimand regresses Y on (X1, X2)
// whose population slope is 1 for every r0.
struct DgpConfig {
    DgpKind kind = DgpKind::MeanQuantile;
    double mu = 4.0;
    double sigma2_y = 4.0;
    double r2 = 0.5;  // MeanQuantile signal share
    double r0 = 0.5;  // LinearReg third-feature coefficient scale

    void validate() const;
};

std::pair<LabeledDataset, UnlabeledDataset> sample_mean_quantile_dgp(double mu, double sigma2_y,
                                                                     double r2, int n, int N,
                                                                     std::uint64_t seed);

std::pair<LabeledDataset, UnlabeledDataset> sample_linear_dgp(double r0, double sigma2_y, int n,
                                                              int N, std::uint64_t seed);

std::pair<LabeledDataset, UnlabeledDataset> sample_dgp(const DgpConfig& dgp, int n, int N,
                                                       std::uint64_t seed);

struct ScenarioConfig {
    std::string name;
    DgpConfig dgp;
    EstimandSpec estimand;
    int n = 1000;
    int N = 10000;       // unlabeled pool size when pool_total is 0
    int pool_total = 0;  // optional fixed pool: unlabeled size becomes pool_total - n
    int K = 10;
    int B = 30;
    bool boot_with_replacement = false;
    double alpha = 0.1;
    TrainerSpec trainer;
    double ppi_train_fraction = 0.5;
    int trials = 100;
    std::uint64_t base_seed = 0;
    std::vector<Method> methods;

    int effective_N() const { return pool_total > 0 ? pool_total - n : N; }
    // Analytic target the coverage is scored against.
    double true_theta() const;
    void validate() const;
    // Fingerprint of everything except base_seed.
    std::uint64_t config_hash() const;
};

struct TrialRecord {
    std::string scenario;
    int trial = 0;
    Method method = Method::CrossPrediction;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool covered = false;
    double width = 0.0;
    double seconds = 0.0;  // measured; serialized as a constant for reproducibility
    std::uint64_t dataset_hash = 0;
};

struct MethodSummary {
    Method method = Method::CrossPrediction;
    int completed = 0;
    int failures = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double sd_lower = 0.0;
    double sd_upper = 0.0;
    bool sd_defined = false;  // needs at least 2 completed trials
};

struct ScenarioSummary {
    std::string scenario;
    std::uint64_t config_hash = 0;
    std::vector<MethodSummary> methods;
};

// Runs all trials (trial t seeded with base_seed + t), `jobs` workers.
// Failed method runs are excluded from aggregates and counted; records are
// returned in (trial, method) order regardless of scheduling.
std::pair<std::vector<TrialRecord>, ScenarioSummary> run_scenario(const ScenarioConfig& config,
                                                                  int jobs);

// Aggregation used by both run_scenario and the report command.
std::vector<MethodSummary> summarize_records(const std::vector<TrialRecord>& records,
                                             const std::vector<Method>& method_order);

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records);
void write_summary_csv(const std::string& path, const std::vector<ScenarioSummary>& summaries);
std::vector<TrialRecord> parse_trials_csv(const std::string& path);

Method parse_method(const std::string& name);

}  // namespace crosspred
