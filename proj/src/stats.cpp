#include "crosspred/stats.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstring>
#include <string>

#include "crosspred/errors.hpp"

namespace crosspred {

double sample_mean(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw InvalidConfigError("sample_mean: empty vector");
    return v.mean();
}

double sample_variance(const Eigen::VectorXd& v) {
    const Eigen::Index m = v.size();
    if (m < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(m - 1);
}

double sample_sd(const Eigen::VectorXd& v) { return std::sqrt(sample_variance(v)); }

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
    const Eigen::Index m = rows.rows();
    const Eigen::Index d = rows.cols();
    if (m < 2) return Eigen::MatrixXd::Zero(d, d);
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mean;
    return centered.transpose() * centered / static_cast<double>(m - 1);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidConfigError("normal_quantile: p must lie in (0,1)");
    static const boost::math::normal_distribution<double> dist(0.0, 1.0);
    return boost::math::quantile(dist, p);
}

double binomial_cdf(int k, int n, double p) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
    return boost::math::cdf(dist, static_cast<double>(k));
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_matrix(const Eigen::MatrixXd& m, std::uint64_t h) {
    const std::int64_t rows = m.rows(), cols = m.cols();
    h = fnv1a(&rows, sizeof rows, h);
    h = fnv1a(&cols, sizeof cols, h);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double x = m(i, j);
            h = fnv1a(&x, sizeof x, h);
        }
    }
    return h;
}

std::uint64_t hash_vector(const Eigen::VectorXd& v, std::uint64_t h) {
    const std::int64_t n = v.size();
    h = fnv1a(&n, sizeof n, h);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = v(i);
        h = fnv1a(&x, sizeof x, h);
    }
    return h;
}

std::uint64_t hash_string(const std::string& s, std::uint64_t h) {
    return fnv1a(s.data(), s.size(), h);
}

}  // namespace crosspred
