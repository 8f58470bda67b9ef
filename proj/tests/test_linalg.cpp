#include <doctest.h>

#include <Eigen/Dense>

#include "dfpower/linalg.hpp"
#include "dfpower/rng.hpp"

using namespace dfpower;

namespace {

Eigen::MatrixXd random_spd(int n, RandomStream& rng, double jitter = 0.5) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    Eigen::MatrixXd m = a * a.transpose() / n;
    m.diagonal().array() += jitter;
    return m;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("identity factors to identity") {
    SpdMatrix m = SpdMatrix::identity(3);
    CHECK((cholesky(m) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("2x2 hand-computed factor") {
    Eigen::MatrixXd a(2, 2);
    a << 4, 2, 2, 3;
    const Eigen::MatrixXd l = cholesky(SpdMatrix(a));
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(0, 1) == doctest::Approx(0.0));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("compound symmetry factor round-trips") {
    const Eigen::MatrixXd cs = compound_symmetry(4, 0.56, 0.9);
    SpdMatrix m(cs);
    const Eigen::MatrixXd l = cholesky(m);
    const double err = (l * l.transpose() - cs).norm() / cs.norm();
    CHECK(err < 1e-10);
}

TEST_CASE("zero and indefinite matrices are rejected") {
    CHECK_THROWS_AS(SpdMatrix{Eigen::MatrixXd::Zero(3, 3)}, not_positive_definite);
    Eigen::MatrixXd neg(2, 2);
    neg << 1, 2, 2, 1;  // eigenvalues 3, -1
    CHECK_THROWS_AS(SpdMatrix{neg}, not_positive_definite);
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(SpdMatrix{asym}, dimension_mismatch);
}

TEST_CASE("diagonal inverse") {
    Eigen::VectorXd n(6);
    n << 2, 1, 1, 1, 2, 2;
    SpdMatrix d = SpdMatrix::diagonal(n.cwiseInverse());
    const Eigen::MatrixXd inv = spd_inverse(d).mat();
    CHECK((inv.diagonal() - n).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("determinant scaling law det(aS) = a^k det(S)") {
    RandomStream rng(42, 1);
    const Eigen::MatrixXd s = random_spd(3, rng);
    const double ld = log_det(SpdMatrix(s));
    const double ld2 = log_det(SpdMatrix(2.0 * s));
    CHECK(ld2 - ld == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("random SPD inverse validated by linear solves") {
    RandomStream rng(42, 2);
    const Eigen::MatrixXd s = random_spd(5, rng);
    SpdMatrix m(s);
    const Eigen::MatrixXd inv = spd_inverse(m).mat();
    CHECK((s * inv - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-9);
    for (int c = 0; c < 5; ++c) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
        b[c] = 1.0;
        const Eigen::VectorXd x = m.solve(b);
        CHECK((x - inv.col(c)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("double inversion is the identity map") {
    RandomStream rng(42, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd s = random_spd(4, rng);
        const Eigen::MatrixXd back = spd_inverse(spd_inverse(SpdMatrix(s))).mat();
        CHECK((back - s).norm() / s.norm() < 1e-8);
    }
}

TEST_CASE("log_det equals pivot sum") {
    RandomStream rng(42, 4);
    const Eigen::MatrixXd s = random_spd(6, rng);
    SpdMatrix m(s);
    double from_pivots = 0.0;
    for (int i = 0; i < 6; ++i) from_pivots += 2.0 * std::log(m.chol()(i, i));
    CHECK(log_det(m) == doctest::Approx(from_pivots).epsilon(1e-12));
}

}  // TEST_SUITE
