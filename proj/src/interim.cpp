#include "dfpower/interim.hpp"

#include <cmath>

namespace dfpower {

SpdMatrix remaining_covariance(const SpdMatrix& s_full, const SpdMatrix& s_interim) {
    if (s_full.dim() != s_interim.dim()) {
        throw dimension_mismatch("remaining_covariance: dimension mismatch");
    }
    const int k = s_full.dim();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd diff = s_full.solve(id) - s_interim.solve(id);
    try {
        SpdMatrix precision(0.5 * (diff + diff.transpose()));
        return precision.inverse();
    } catch (const not_positive_definite&) {
        throw no_information_remaining(
            "remaining_covariance: interim covariance implies no information left "
            "(S_full^-1 - S_interim^-1 not positive definite)");
    }
}

GroupEstimates pooled_estimate(const GroupEstimates& stage1, const GroupEstimates& stage2) {
    if (stage1.arms() != stage2.arms()) {
        throw dimension_mismatch("pooled_estimate: dimension mismatch");
    }
    const int k = stage1.arms();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k, k);
    const Eigen::MatrixXd p1 = stage1.S.solve(id);
    const Eigen::MatrixXd p2 = stage2.S.solve(id);
    SpdMatrix pooled_precision(0.5 * ((p1 + p2) + (p1 + p2).transpose()));
    SpdMatrix pooled_cov = pooled_precision.inverse();
    Eigen::VectorXd mu =
        pooled_cov.mat() * (stage1.S.solve(stage1.mu_hat) + stage2.S.solve(stage2.mu_hat));
    return GroupEstimates(std::move(mu), std::move(pooled_cov));
}

double information_fraction(const SpdMatrix& s_full, const SpdMatrix& s_interim) {
    if (s_full.dim() != s_interim.dim()) {
        throw dimension_mismatch("information_fraction: dimension mismatch");
    }
    const double k = s_full.dim();
    return std::exp((s_full.log_det() - s_interim.log_det()) / k);
}

InterimState make_interim_state(GroupEstimates stage1, SpdMatrix final_cov) {
    SpdMatrix remaining = remaining_covariance(final_cov, stage1.S);
    const double t = information_fraction(final_cov, stage1.S);
    return InterimState{std::move(stage1), std::move(final_cov), std::move(remaining), t};
}

InterimState homoscedastic_state(const Eigen::VectorXd& ybar_interim, double sigma,
                                 const DoseDesign& design, double t) {
    if (!(t > 0.0 && t < 1.0)) throw dimension_mismatch("homoscedastic_state: t must be in (0,1)");
    if (!(sigma > 0.0)) throw dimension_mismatch("homoscedastic_state: sigma must be positive");
    const Eigen::VectorXd d = design.inv_n() * (sigma * sigma);
    SpdMatrix s_full = SpdMatrix::diagonal(d);
    SpdMatrix s_interim = SpdMatrix::diagonal(d / t);
    return make_interim_state(GroupEstimates(ybar_interim, std::move(s_interim)),
                              std::move(s_full));
}

namespace {

// P and the scaled contrast matrix G = P C at the end-of-study covariance.
Eigen::MatrixXd scaled_contrasts(const ContrastSet& cs, const SpdMatrix& s_full) {
    const int M = cs.models();
    Eigen::VectorXd denom(M);
    const Eigen::MatrixXd CS = cs.C * s_full.mat();
    for (int m = 0; m < M; ++m) {
        const double v = CS.row(m).dot(cs.C.row(m));
        if (!(v > 0.0)) throw degenerate_contrast("interim power: c'S_[0,1]c <= 0");
        denom[m] = 1.0 / std::sqrt(v);
    }
    return denom.asDiagonal() * cs.C;
}

ProbEstimate exceedance(const Eigen::VectorXd& mean_t, const Eigen::MatrixXd& cov_t, double crit,
                        RandomStream& rng, const QmcSettings& settings) {
    MvnSpec spec(mean_t, spd_with_ridge(cov_t));
    ProbEstimate below = equicoordinate_prob(spec, crit, rng, settings);
    return {1.0 - below.value, below.std_error};
}

}  // namespace

Eigen::MatrixXd final_stat_correlation(const ContrastSet& cs, const SpdMatrix& s_full) {
    const Eigen::MatrixXd G = scaled_contrasts(cs, s_full);
    Eigen::MatrixXd corr = G * s_full.mat() * G.transpose();
    corr = 0.5 * (corr + corr.transpose()).eval();
    corr.diagonal().setOnes();
    return corr;
}

ProbEstimate predictive_power(const InterimState& state, const ContrastSet& cs, double crit,
                              RandomStream& rng, const QmcSettings& settings) {
    const Eigen::MatrixXd G = scaled_contrasts(cs, state.final_cov);
    // W = S_[0,1] S_(t,1]^-1; predictive covariance of the pooled estimate is
    // W (S_[0,t] + S_(t,1]) W'.
    const Eigen::MatrixXd W = state.remaining_cov.solve(state.final_cov.mat()).transpose();
    const Eigen::MatrixXd mid =
        W * (state.stage1.S.mat() + state.remaining_cov.mat()) * W.transpose();
    const Eigen::VectorXd mean_t = G * state.stage1.mu_hat;
    const Eigen::MatrixXd cov_t = G * mid * G.transpose();
    return exceedance(mean_t, cov_t, crit, rng, settings);
}

ProbEstimate conditional_power(const InterimState& state, const ContrastSet& cs,
                               const Eigen::VectorXd& mu_tilde, double crit, RandomStream& rng,
                               const QmcSettings& settings) {
    if (mu_tilde.size() != state.stage1.mu_hat.size()) {
        throw dimension_mismatch("conditional_power: mu_tilde length mismatch");
    }
    const Eigen::MatrixXd G = scaled_contrasts(cs, state.final_cov);
    const Eigen::MatrixXd W = state.remaining_cov.solve(state.final_cov.mat()).transpose();
    const Eigen::VectorXd pooled_mean =
        state.final_cov.mat() *
        (state.stage1.S.solve(state.stage1.mu_hat) + state.remaining_cov.solve(mu_tilde));
    const Eigen::VectorXd mean_t = G * pooled_mean;
    const Eigen::MatrixXd cov_t = G * (W * state.final_cov.mat()) * G.transpose();
    return exceedance(mean_t, cov_t, crit, rng, settings);
}

ProbEstimate predictive_power(const InterimState& state, const ContrastSet& cs, double alpha,
                              RandomStream& crit_rng, RandomStream& rng,
                              const QmcSettings& settings) {
    const double crit =
        critical_value(final_stat_correlation(cs, state.final_cov), alpha, crit_rng, settings);
    return predictive_power(state, cs, crit, rng, settings);
}

ProbEstimate conditional_power(const InterimState& state, const ContrastSet& cs,
                               const Eigen::VectorXd& mu_tilde, double alpha,
                               RandomStream& crit_rng, RandomStream& rng,
                               const QmcSettings& settings) {
    const double crit =
        critical_value(final_stat_correlation(cs, state.final_cov), alpha, crit_rng, settings);
    return conditional_power(state, cs, mu_tilde, crit, rng, settings);
}

Eigen::VectorXd planned_mu_tilde(double placebo_estimate, double planned_max_effect,
                                 const std::vector<CandidateShape>& catalog,
                                 const DoseDesign& design) {
    const double dmax = design.doses[design.arms() - 1];
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(design.arms(), placebo_estimate);
    for (int i = 0; i < design.arms(); ++i) {
        double avg = 0.0;
        for (const CandidateShape& s : catalog) avg += scaled_effect(s, design.doses[i], dmax);
        mu[i] += planned_max_effect * avg / static_cast<double>(catalog.size());
    }
    return mu;
}

}  // namespace dfpower
