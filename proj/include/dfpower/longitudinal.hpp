#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "dfpower/estimates.hpp"
#include "dfpower/linalg.hpp"

namespace dfpower {

struct PatientRecord {
    int id = 0;
    int arm = 0;
    double recruit_week = 0.0;
    double baseline = 0.0;            // raw outcome at the baseline visit (L)
    std::vector<double> y;            // raw post-baseline outcomes, one per visit
    std::vector<std::uint8_t> observed;

    int observed_count() const;
};

struct TrialDataset {
    std::vector<double> visit_weeks;  // post-baseline schedule, e.g. 2,4,8,12
    int arms = 0;
    std::vector<PatientRecord> patients;

    int visits() const { return static_cast<int>(visit_weeks.size()); }
};

// CSV round-trip: patient_id,arm,recruit_week,baseline,y_w2,...  with empty
// cells for missing outcomes.
void write_trial_csv(const TrialDataset& data, std::ostream& out);
TrialDataset read_trial_csv(std::istream& in);
TrialDataset read_trial_csv_file(const std::string& path);

struct MmrmOptions {
    bool use_baseline = true;  // baseline-by-visit slopes in the fixed effects
    int max_iter = 500;
    double rel_tol = 1e-8;
};

struct MmrmFit {
    Eigen::MatrixXd cell_means;       // arms x kept visits, at mean baseline
    Eigen::VectorXd baseline_slopes;  // per kept visit (centered baseline)
    SpdMatrix resid_cov;              // kept visits x kept visits, ML
    GroupEstimates lsmeans_final;     // final-visit adjusted means + covariance
    double loglik = 0.0;
    int iters = 0;
    bool converged = false;
    std::vector<int> kept_visits;     // indices into visit_weeks
    std::vector<double> loglik_trace;
    double mean_baseline = 0.0;
    int n_used = 0;

    // ML residual SD of the final visit, used to project S_[0,1].
    double sigma_hat_final() const;
};

// ML fit of arm-by-visit cell means (+ baseline-by-visit slopes) with an
// unstructured visit covariance, via EM over the missing visits. The
// response is change from baseline. Patients without any post-baseline
// observation are not used; visits with no observations anywhere are
// dropped from the fit.
MmrmFit fit_mmrm(const TrialDataset& data, const MmrmOptions& opts = {});

struct CompleterFit {
    GroupEstimates est;
    double sigma2 = 0.0;  // ML residual variance
    int n_completers = 0;
    std::vector<int> completers_per_arm;
    double mean_baseline = 0.0;
};

// ANCOVA (arm means + baseline) on change from baseline at the final visit,
// restricted to patients with that visit observed.
CompleterFit fit_completers(const TrialDataset& data, bool use_baseline = true);

struct GlsInfo {
    double final_variance = 0.0;      // GLS variance of the final-visit mean (inf if not estimable)
    double completer_variance = 0.0;  // sigma^2 / n_completers (inf if none)
    int n_completers = 0;
};

// Single-group information under a compound-symmetry outcome model.
// count_by_visits[m] = number of patients with exactly the first m visits
// observed, m = 0..V where V+1 = count_by_visits.size().
GlsInfo gls_information(const std::vector<int>& count_by_visits, double rho, double sigma);

}  // namespace dfpower
