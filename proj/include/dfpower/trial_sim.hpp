#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dfpower/contrasts.hpp"
#include "dfpower/interim.hpp"
#include "dfpower/longitudinal.hpp"
#include "dfpower/mvn.hpp"
#include "dfpower/rng.hpp"

namespace dfpower {

struct SimScenario {
    DoseDesign design;
    double lpfv_t = 50.0;  // calendar week of last patient first visit
    double rho = 0.9;
    double sigma = 0.56;

    // Truth: nullopt = flat dose-response, otherwise the Emax maximum effect
    // (L) reached at the top dose at the final visit.
    std::optional<double> true_max_effect = 0.12;
    double effect_ed50 = 1.0;
    double onset_rate = 0.5;  // per week

    // Design assumption used by the planned-effect conditional power.
    double planned_max_effect = 0.12;

    std::vector<double> visit_weeks = {2, 4, 8, 12};
    std::vector<double> interim_fracs = {0.3, 0.5, 0.7};
    double alpha = 0.025;
    std::vector<CandidateShape> catalog;
    int replications = 500;
    std::uint64_t base_seed = 1;
    QmcSettings qmc{1024, 8, 25};  // simulation-loop integration settings

    int block_size() const;
    EffectProfile effect_profile() const;
    std::string label() const;
};

// Quadratic recruitment: T_i = lpfv_t * sqrt(U_i), returned sorted.
std::vector<double> generate_recruitment(int n, double lpfv_t, RandomStream& rng);

// Complete trial: permuted-block randomization in recruitment order and one
// multivariate normal draw per patient across baseline + all visits with
// compound-symmetry errors.
TrialDataset generate_trial(const SimScenario& scenario, RandomStream& rng);

// Administrative censoring at the calendar time when ceil(frac*N) patients
// have completed the final visit.
TrialDataset interim_snapshot(const TrialDataset& trial, double completer_frac);

double interim_cut_time(const TrialDataset& trial, double completer_frac);

// Design-stage objects shared by every replication: contrasts and the
// critical value at the planned allocation.
struct ScenarioContext {
    ContrastSet cs;
    Eigen::MatrixXd corr;
    double crit = 0.0;
};

ScenarioContext make_scenario_context(const SimScenario& scenario);

enum class Method : int { Longitudinal = 0, Completer = 1 };

struct InterimCell {
    bool fit_ok = false;
    bool power_ok = false;
    double tau = 0.0;
    int n_included = 0;
    int n_completers = 0;
    double sigma_hat = std::numeric_limits<double>::quiet_NaN();
    double info_frac = std::numeric_limits<double>::quiet_NaN();
    double pred = std::numeric_limits<double>::quiet_NaN();
    double cond_planned = std::numeric_limits<double>::quiet_NaN();
    double cond_interim = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct ReplicationRow {
    int rep = 0;
    double final_tmax = 0.0;
    double final_crit = 0.0;
    bool final_rejected = false;
    std::vector<std::array<InterimCell, 2>> interim;  // per frac, indexed by Method
};

// One self-contained replication; bit-identical for identical
// (scenario, rep_index) regardless of execution order.
ReplicationRow run_replication(const SimScenario& scenario, const ScenarioContext& ctx,
                               int rep_index, bool final_only = false);

// All replications, optionally across a worker pool; rows come back sorted
// by rep index so aggregation order is fixed.
std::vector<ReplicationRow> run_scenario(const SimScenario& scenario, const ScenarioContext& ctx,
                                         int threads, bool final_only = false);

// Empirical 10%,15%,...,50% percentiles (interpolated order statistics).
std::vector<double> calibrate_thresholds(std::vector<double> metric_values);

extern const std::array<int, 9> kThresholdPercents;
extern const std::array<const char*, 3> kMetricNames;

double metric_value(const InterimCell& cell, int metric);

struct OperatingCell {
    int frac_index = 0;
    Method method = Method::Longitudinal;
    int metric = 0;
    int threshold_pct = 0;
    double threshold = 0.0;
    double stop_prob = 0.0;
    double power_loss = 0.0;
    int n_valid = 0;
};

// Stop probability and power loss at each (interim, method, metric,
// threshold); thresholds[metric] holds the calibrated cut-offs.
std::vector<OperatingCell> operating_characteristics(
    const std::vector<ReplicationRow>& rows, const std::array<std::vector<double>, 3>& thresholds);

// Smallest N (in whole allocation blocks) whose analytic final-test power
// reaches the target under the scenario's effect assumption.
int design_sample_size(const SimScenario& proto, double target_power, RandomStream& rng,
                       int cap = 5000);

double analytic_final_power(const SimScenario& proto, int blocks, const ContrastSet& cs,
                            double crit, RandomStream& rng);

// Recruitment templates behind the small-trial information illustration:
// 21 patients, 3 post-baseline visits, unit-variance compound symmetry.
struct AppendixPoint {
    double time = 0.0;
    double completer_frac = 0.0;
    double longitudinal_frac = 0.0;
};

struct AppendixTemplate {
    std::vector<double> recruit;  // normalized calendar times, 21 entries
    double followup = 0.0;        // time from recruitment to final visit
};

AppendixTemplate appendix_template(int scenario_id);  // 1..4

std::vector<AppendixPoint> appendix_illustration(int scenario_id, double rho,
                                                 const std::vector<double>& time_grid);

}  // namespace dfpower
