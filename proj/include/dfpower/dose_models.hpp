#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dfpower/errors.hpp"

namespace dfpower {

// k-arm layout: doses (placebo first), allocation weights, per-arm sizes.
struct DoseDesign {
    Eigen::VectorXd doses;     // mg, strictly increasing, doses[0] == 0
    Eigen::VectorXd alloc;     // positive allocation weights
    std::vector<int> n;        // per-arm sample sizes

    int arms() const { return static_cast<int>(doses.size()); }
    int total_n() const;
    Eigen::VectorXd inv_n() const;  // diag entries 1/n_i
    void validate() const;

    static DoseDesign with_blocks(Eigen::VectorXd doses, Eigen::VectorXd alloc, int blocks);
};

struct CandidateShape {
    enum class Kind { Emax, SigEmax, Quadratic };
    Kind kind = Kind::Emax;
    double ed50 = 1.0;   // Emax / SigEmax
    double hill = 1.0;   // SigEmax
    double delta = 0.0;  // Quadratic, < 0 for an interior maximum

    static CandidateShape emax(double ed50);
    static CandidateShape sig_emax(double ed50, double hill);
    static CandidateShape quadratic(double delta);
    static CandidateShape quadratic_peak_at(double peak_dose);

    std::string label() const;
};

// Standardized response at dose d:
//   Emax:      d / (d + ed50)
//   SigEmax:   d^h / (d^h + ed50^h)
//   Quadratic: (d + delta d^2) scaled to 1 at the vertex -1/(2 delta)
double shape_mean(const CandidateShape& shape, double d);

// Shape rescaled so the maximum over [0, dmax] is 1 and the placebo value 0.
// This is the per-model profile that multiplies a planned maximum effect.
double scaled_effect(const CandidateShape& shape, double d, double dmax);

// Time-varying maximum effect: E(T) = emax_tmax * (1-e^{-rate T})/(1-e^{-rate t_max}).
struct EffectProfile {
    double e0 = 0.0;        // L
    double emax_tmax = 0.0; // L, maximum effect at t_max
    double ed50 = 1.0;      // mg
    double t_max = 12.0;    // weeks
    double rate = 0.5;      // per week
};

double effect_at_time(const EffectProfile& p, double t_weeks);

Eigen::VectorXd candidate_mean_vector(const CandidateShape& shape, const DoseDesign& design);

// Default candidate set: four Emax, four sigmoid Emax, one quadratic with an
// interior maximum (peak at 6 mg). Overridable through the scenario config.
std::vector<CandidateShape> default_catalog();

}  // namespace dfpower
