#pragma once

#include <Eigen/Dense>

#include "dfpower/linalg.hpp"
#include "dfpower/rng.hpp"

namespace dfpower {

struct ProbEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct MvnSpec {
    Eigen::VectorXd mean;
    SpdMatrix cov;

    MvnSpec(Eigen::VectorXd mean_, SpdMatrix cov_);
    int dim() const { return static_cast<int>(mean.size()); }
};

struct QmcSettings {
    int lattice_points = 4096;
    int randomizations = 12;
    int max_dim = 25;
};

Eigen::VectorXd mvn_sample(const MvnSpec& spec, RandomStream& rng);

// P(X_1 < c, ..., X_M < c) for X ~ MVN(spec) via the separation-of-variables
// transform integrated with a randomly shifted Richtmyer lattice rule.
// Deterministic given the stream state; std_error from the K randomizations.
ProbEstimate equicoordinate_prob(const MvnSpec& spec, double c, RandomStream& rng,
                                 const QmcSettings& settings = {});

// Reusable integrator: shift draws happen once at construction so the
// estimate is a smooth deterministic function of c (what the critical-value
// root finder needs).
class EquicoordinateRule {
public:
    EquicoordinateRule(const MvnSpec& spec, RandomStream& rng, const QmcSettings& settings);
    ProbEstimate prob(double c) const;

private:
    int dim_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd sd_;
    Eigen::MatrixXd chol_corr_;  // of the correlation matrix, after ordering
    std::vector<int> order_;
    Eigen::MatrixXd shifts_;  // randomizations x (dim-1)
    QmcSettings settings_;
};

// c with P(max_m X_m > c) = alpha under MVN(0, corr), corr a correlation
// matrix. Bracketing bisection on [0, 6] plus secant refinement until the
// attained probability is within 1e-4 of 1-alpha.
double critical_value(const Eigen::MatrixXd& corr, double alpha, RandomStream& rng,
                      const QmcSettings& settings = {});

}  // namespace dfpower
