#pragma once

#include <Eigen/Dense>

#include "dfpower/contrasts.hpp"
#include "dfpower/dose_models.hpp"
#include "dfpower/estimates.hpp"
#include "dfpower/mvn.hpp"

namespace dfpower {

// Everything an interim look knows: first-stage estimates, the projected
// end-of-study covariance, the implied covariance of the still-unobserved
// stage, and the determinant-based information fraction.
struct InterimState {
    GroupEstimates stage1;    // mu_hat over [0,t] with covariance S_[0,t]
    SpdMatrix final_cov;      // S_[0,1]
    SpdMatrix remaining_cov;  // S_(t,1]
    double info_fraction;     // in (0,1]
};

// (S_full^-1 - S_interim^-1)^-1; throws no_information_remaining when the
// interim covariance claims at least as much information as the final one.
SpdMatrix remaining_covariance(const SpdMatrix& s_full, const SpdMatrix& s_interim);

// Precision-weighted pooling of two independent stage estimates.
GroupEstimates pooled_estimate(const GroupEstimates& stage1, const GroupEstimates& stage2);

// det(S_full)^{1/k} / det(S_interim)^{1/k}, via log-determinants.
double information_fraction(const SpdMatrix& s_full, const SpdMatrix& s_interim);

InterimState make_interim_state(GroupEstimates stage1, SpdMatrix final_cov);

// Single-visit homoscedastic special case: S_[0,t] = sigma^2 D / t,
// S_[0,1] = sigma^2 D with D = diag(1/n_i).
InterimState homoscedastic_state(const Eigen::VectorXd& ybar_interim, double sigma,
                                 const DoseDesign& design, double t);

struct PowerResult {
    ProbEstimate predictive;
    ProbEstimate cond_planned;
    ProbEstimate cond_interim;
};

// Probability that the end-of-study max-contrast test clears crit, averaging
// over the flat-prior predictive distribution of the second-stage estimate.
ProbEstimate predictive_power(const InterimState& state, const ContrastSet& cs, double crit,
                              RandomStream& rng, const QmcSettings& settings = {});

// Same, but with the second-stage mean fixed at mu_tilde.
ProbEstimate conditional_power(const InterimState& state, const ContrastSet& cs,
                               const Eigen::VectorXd& mu_tilde, double crit, RandomStream& rng,
                               const QmcSettings& settings = {});

// Spec-shaped overloads: derive crit from the end-of-study statistic
// correlation at level alpha, then evaluate.
ProbEstimate predictive_power(const InterimState& state, const ContrastSet& cs, double alpha,
                              RandomStream& crit_rng, RandomStream& rng,
                              const QmcSettings& settings);
ProbEstimate conditional_power(const InterimState& state, const ContrastSet& cs,
                               const Eigen::VectorXd& mu_tilde, double alpha,
                               RandomStream& crit_rng, RandomStream& rng,
                               const QmcSettings& settings);

// Correlation of the end-of-study test statistics P C S_[0,1] C' P'.
Eigen::MatrixXd final_stat_correlation(const ContrastSet& cs, const SpdMatrix& s_full);

// Planned second-stage mean: estimated placebo mean plus the average of the
// candidate-model effect profiles scaled to the planned maximum effect.
Eigen::VectorXd planned_mu_tilde(double placebo_estimate, double planned_max_effect,
                                 const std::vector<CandidateShape>& catalog,
                                 const DoseDesign& design);

}  // namespace dfpower
