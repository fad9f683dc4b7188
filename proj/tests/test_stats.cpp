#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "crosspred/errors.hpp"
#include "crosspred/rng.hpp"
#include "crosspred/stats.hpp"

using namespace crosspred;

TEST_CASE("sample moments match hand values") {
    Eigen::VectorXd v(4);
    v << 1.0, 2.0, 3.0, 6.0;
    CHECK(sample_mean(v) == doctest::Approx(3.0).epsilon(1e-15));
    // squared deviations 4+1+0+9 over n-1
    CHECK(sample_variance(v) == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
    CHECK(sample_sd(v) == doctest::Approx(std::sqrt(14.0 / 3.0)).epsilon(1e-15));

    Eigen::VectorXd single(1);
    single << 7.0;
    CHECK(sample_variance(single) == 0.0);
    CHECK_THROWS_AS(sample_mean(Eigen::VectorXd()), InvalidConfigError);
}

TEST_CASE("sample covariance matches hand computation and is symmetric") {
    Eigen::MatrixXd rows(3, 2);
    rows << 1.0, 2.0,
            3.0, 2.0,
            5.0, 8.0;
    const Eigen::MatrixXd C = sample_covariance(rows);
    // means (3, 4); centered cols (-2,0,2) and (-2,-2,4)
    CHECK(C(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(C(1, 1) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(C(0, 1) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(C(1, 0) == doctest::Approx(6.0).epsilon(1e-15));

    Rng rng(5);
    Eigen::MatrixXd R(40, 3);
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (Eigen::Index j = 0; j < R.cols(); ++j) R(i, j) = rng.normal();
    const Eigen::MatrixXd CR = sample_covariance(R);
    CHECK((CR - CR.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(CR);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);

    CHECK(sample_covariance(Eigen::MatrixXd::Random(1, 3)).isZero());
}

TEST_CASE("normal quantile against tabulated values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400545).epsilon(1e-12));
    CHECK(normal_quantile(0.75) == doctest::Approx(0.67448975019608171).epsilon(1e-12));
    CHECK(normal_quantile(0.25) == doctest::Approx(-normal_quantile(0.75)).epsilon(1e-14));
    CHECK_THROWS_AS(normal_quantile(0.0), InvalidConfigError);
    CHECK_THROWS_AS(normal_quantile(1.0), InvalidConfigError);
}

TEST_CASE("binomial cdf against exact dyadic values") {
    CHECK(binomial_cdf(0, 2, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(binomial_cdf(1, 2, 0.5) == doctest::Approx(0.75).epsilon(1e-14));
    // sum_{k<=5} C(10,k)/2^10 = 638/1024
    CHECK(binomial_cdf(5, 10, 0.5) == doctest::Approx(0.623046875).epsilon(1e-13));
    CHECK(binomial_cdf(-1, 10, 0.5) == 0.0);
    CHECK(binomial_cdf(10, 10, 0.5) == 1.0);
    CHECK(binomial_cdf(11, 10, 0.5) == 1.0);
    // monotone in k
    double prev = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double cur = binomial_cdf(k, 10, 0.3);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("fnv1a matches the published test vectors") {
    // Reference values for the 64-bit FNV-1a parameters.
    CHECK(fnv1a("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ULL);
    CHECK(hash_string("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("matrix and vector hashing is deterministic and shape sensitive") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 2, 3, 4;
    Eigen::MatrixXd B = A;
    CHECK(hash_matrix(A) == hash_matrix(B));
    B(1, 1) = 5;
    CHECK(hash_matrix(A) != hash_matrix(B));

    Eigen::MatrixXd flat(1, 4);
    flat << 1, 3, 2, 4;  // same column-major entries as A, different shape
    CHECK(hash_matrix(A) != hash_matrix(flat));

    Eigen::VectorXd v(3);
    v << 1, 2, 3;
    CHECK(hash_vector(v) == hash_vector(v));
    CHECK(hash_vector(v, 1) != hash_vector(v, 2));  // chaining matters
}

TEST_CASE("rng streams are deterministic and well spread") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) any_diff = any_diff || (a2.next_u64() != c.next_u64());
    CHECK(any_diff);

    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("rng distributions have the right support and moments") {
    Rng rng(7);
    double sum = 0.0, sumsq = 0.0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    CHECK(sum / m == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sumsq / m == doctest::Approx(1.0 / 3.0).epsilon(0.01));

    double nsum = 0.0, nsumsq = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = rng.normal();
        nsum += x;
        nsumsq += x * x;
    }
    CHECK(nsum / m == doctest::Approx(0.0).epsilon(0.02));
    CHECK(nsumsq / m == doctest::Approx(1.0).epsilon(0.02));

    // below() stays in range and is unbiased enough
    int counts[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 50000; ++i) ++counts[rng.below(5)];
    for (int k = 0; k < 5; ++k) CHECK(std::abs(counts[k] - 10000) < 500);
}
