#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace crosspred {

double sample_mean(const Eigen::VectorXd& v);

// Unbiased (m-1 denominator) sample variance; 0 for fewer than 2 values.
double sample_variance(const Eigen::VectorXd& v);

double sample_sd(const Eigen::VectorXd& v);

// Unbiased empirical covariance of the rows of a m x d matrix.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows);

// Quantile of the standard normal distribution.
double normal_quantile(double p);

// CDF of Binomial(n, p) at k, i.e. P(X <= k); 0 for k < 0, 1 for k >= n.
double binomial_cdf(int k, int n, double p);

// FNV-1a over raw bytes; used for dataset/config fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL);

std::uint64_t hash_matrix(const Eigen::MatrixXd& m, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_vector(const Eigen::VectorXd& v, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_string(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace crosspred
