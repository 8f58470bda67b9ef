#include <doctest.h>

#include <cmath>

#include "dfpower/contrasts.hpp"
#include "dfpower/interim.hpp"
#include "dfpower/mvn.hpp"
#include "dfpower/normal.hpp"

using namespace dfpower;

namespace {

// Plain Monte Carlo estimate of P(all coords < c) for an equicorrelated
// normal vector, the independent oracle for the lattice rule.
ProbEstimate mc_equicorr_below(int dim, double rho, double c, long ndraw, RandomStream& rng) {
    const double a = std::sqrt(rho), b = std::sqrt(1.0 - rho);
    long hits = 0;
    for (long i = 0; i < ndraw; ++i) {
        const double shared = rng.normal();
        bool all = true;
        for (int j = 0; j < dim; ++j) {
            if (a * shared + b * rng.normal() >= c) {
                all = false;
                break;
            }
        }
        hits += all ? 1 : 0;
    }
    const double p = static_cast<double>(hits) / ndraw;
    return {p, std::sqrt(p * (1.0 - p) / ndraw)};
}

MvnSpec equicorr_spec(int dim, double rho) {
    Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(dim, dim, rho);
    corr.diagonal().setOnes();
    return MvnSpec(Eigen::VectorXd::Zero(dim), SpdMatrix(corr));
}

}  // namespace

TEST_SUITE("mvn") {

TEST_CASE("univariate case is the normal cdf") {
    RandomStream rng(1, 0);
    MvnSpec spec(Eigen::VectorXd::Zero(1), SpdMatrix::identity(1));
    const ProbEstimate p = equicoordinate_prob(spec, 1.959964, rng);
    CHECK(p.value == doctest::Approx(0.975).epsilon(1e-6));
    CHECK(p.std_error == 0.0);
}

TEST_CASE("independent coordinates multiply") {
    RandomStream rng(1, 1);
    MvnSpec spec(Eigen::VectorXd::Zero(2), SpdMatrix::identity(2));
    const ProbEstimate p = equicoordinate_prob(spec, 1.644854, rng);
    CHECK(p.value == doctest::Approx(0.9025).epsilon(5e-4));
    CHECK(p.std_error <= 5e-4);
}

TEST_CASE("trivariate equicorrelated vs plain Monte Carlo") {
    RandomStream rng(1, 2);
    const ProbEstimate qmc = equicoordinate_prob(equicorr_spec(3, 0.5), 2.0, rng);
    RandomStream mc_rng(1, 3);
    const ProbEstimate mc = mc_equicorr_below(3, 0.5, 2.0, 10'000'000, mc_rng);
    const double tol = 3.0 * std::sqrt(qmc.std_error * qmc.std_error + mc.std_error * mc.std_error);
    CHECK(std::fabs(qmc.value - mc.value) <= tol);
    CHECK(qmc.std_error <= 5e-4);
}

TEST_CASE("nonzero means and variances standardize correctly") {
    // P(X1 < c, X2 < c) with independent X1~N(1,4), X2~N(-1,1).
    RandomStream rng(1, 4);
    Eigen::VectorXd mean(2);
    mean << 1.0, -1.0;
    Eigen::VectorXd var(2);
    var << 4.0, 1.0;
    MvnSpec spec(mean, SpdMatrix::diagonal(var));
    const double c = 1.5;
    const double expect = norm_cdf((c - 1.0) / 2.0) * norm_cdf(c + 1.0);
    CHECK(equicoordinate_prob(spec, c, rng).value == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("estimate is monotone in c with a shared rule") {
    RandomStream rng(1, 5);
    EquicoordinateRule rule(equicorr_spec(5, 0.5), rng, QmcSettings{});
    double prev = -1.0;
    for (int i = 0; i < 20; ++i) {
        const double c = -2.0 + 4.0 * i / 19.0;
        const double p = rule.prob(c).value;
        CHECK(p >= prev - 1e-9);
        prev = p;
    }
}

TEST_CASE("block-diagonal correlation factorizes") {
    RandomStream rng(1, 6);
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(5, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) corr(i, j) = 0.6;
    corr(3, 4) = corr(4, 3) = 0.3;
    MvnSpec joint(Eigen::VectorXd::Zero(5), SpdMatrix(corr));
    const double c = 1.2;
    const ProbEstimate whole = equicoordinate_prob(joint, c, rng);
    const ProbEstimate b1 = equicoordinate_prob(equicorr_spec(3, 0.6), c, rng);
    const ProbEstimate b2 = equicoordinate_prob(equicorr_spec(2, 0.3), c, rng);
    const double prod = b1.value * b2.value;
    const double se = std::sqrt(whole.std_error * whole.std_error + b1.std_error * b1.std_error +
                                b2.std_error * b2.std_error);
    CHECK(std::fabs(whole.value - prod) <= 3.0 * se + 1e-5);
}

TEST_CASE("dimension cap enforced") {
    RandomStream rng(1, 7);
    QmcSettings s;
    s.max_dim = 4;
    CHECK_THROWS_AS(equicoordinate_prob(equicorr_spec(5, 0.2), 1.0, rng, s), dimension_too_large);
}

TEST_CASE("critical value: univariate quantile") {
    RandomStream rng(2, 0);
    const double c = critical_value(Eigen::MatrixXd::Identity(1, 1), 0.025, rng);
    CHECK(c == doctest::Approx(1.95996).epsilon(1e-3));
}

TEST_CASE("critical value: two independent statistics") {
    RandomStream rng(2, 1);
    const double c = critical_value(Eigen::MatrixXd::Identity(2, 2), 0.05, rng);
    const double expect = norm_quantile(std::sqrt(0.95));
    CHECK(c == doctest::Approx(expect).epsilon(5e-4));
}

TEST_CASE("critical value plugs back to 1 - alpha") {
    RandomStream rng(2, 2);
    for (double rho : {0.0, 0.4, 0.8}) {
        Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(4, 4, rho);
        corr.diagonal().setOnes();
        const double alpha = 0.025;
        const double c = critical_value(corr, alpha, rng);
        MvnSpec spec(Eigen::VectorXd::Zero(4), SpdMatrix(corr));
        const ProbEstimate p = equicoordinate_prob(spec, c, rng);
        CHECK(std::fabs(p.value - (1.0 - alpha)) <= 2e-4 + 3.0 * p.std_error);
    }
}

TEST_CASE("critical value for the trial contrast set vs Monte Carlo" * doctest::timeout(120)) {
    // Nine-model catalog at the 2:1:1:1:2:2 allocation.
    Eigen::VectorXd doses(6), alloc(6);
    doses << 0, 0.5, 1, 2, 4, 8;
    alloc << 2, 1, 1, 1, 2, 2;
    const DoseDesign design = DoseDesign::with_blocks(doses, alloc, 10);
    const SpdMatrix s = SpdMatrix::diagonal(design.inv_n());
    const ContrastSet cs = build_contrast_set(default_catalog(), design, s);
    Eigen::MatrixXd corr = final_stat_correlation(cs, s);

    RandomStream rng(2, 3);
    const double alpha = 0.025;
    const double crit = critical_value(corr, alpha, rng);

    // Oracle: plain Monte Carlo of the max statistic.
    const Eigen::MatrixXd l = spd_with_ridge(corr).chol();
    RandomStream mc_rng(2, 4);
    const long n = 20'000'000;
    const int batch = 4096;
    Eigen::MatrixXd z(9, batch);
    long below = 0, total = 0;
    while (total < n) {
        for (int j = 0; j < batch; ++j)
            for (int i = 0; i < 9; ++i) z(i, j) = mc_rng.normal();
        const Eigen::MatrixXd x = l * z;
        for (int j = 0; j < batch; ++j) {
            if (x.col(j).maxCoeff() < crit) ++below;
        }
        total += batch;
    }
    const double p = static_cast<double>(below) / total;
    const double se_mc = std::sqrt(p * (1 - p) / total);
    // local slope of the max-statistic cdf, for converting the 5e-3
    // crit tolerance into probability units
    RandomStream d_rng(2, 5);
    EquicoordinateRule rule(MvnSpec(Eigen::VectorXd::Zero(9), spd_with_ridge(corr)), d_rng,
                            QmcSettings{});
    const double density = (rule.prob(crit + 0.05).value - rule.prob(crit - 0.05).value) / 0.1;
    CHECK(std::fabs(p - (1.0 - alpha)) <= density * 5e-3 + 3.0 * se_mc);
}

TEST_CASE("sampling: empirical mean matches") {
    RandomStream rng(3, 0);
    Eigen::VectorXd mean(3);
    mean << 0.5, -1.0, 2.0;
    MvnSpec spec(mean, SpdMatrix::identity(3));
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) acc += mvn_sample(spec, rng);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::fabs(acc[j] / n - mean[j]) < 4e-3);
    }
}

TEST_CASE("sampling: compound symmetry correlation is reproduced") {
    RandomStream rng(3, 1);
    MvnSpec spec(Eigen::VectorXd::Zero(4), SpdMatrix(compound_symmetry(4, 0.56, 0.9)));
    const int n = 200'000;
    double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = mvn_sample(spec, rng);
        s0 += x[0];
        s1 += x[1];
        s00 += x[0] * x[0];
        s11 += x[1] * x[1];
        s01 += x[0] * x[1];
    }
    const double m0 = s0 / n, m1 = s1 / n;
    const double corr =
        (s01 / n - m0 * m1) / std::sqrt((s00 / n - m0 * m0) * (s11 / n - m1 * m1));
    CHECK(corr == doctest::Approx(0.9).epsilon(0.012));
}

}  // TEST_SUITE
