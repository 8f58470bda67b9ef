#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dfpower/dose_models.hpp"
#include "dfpower/estimates.hpp"
#include "dfpower/mvn.hpp"

namespace dfpower {

// Rows are unit-norm zero-sum contrast vectors, one per candidate shape.
struct ContrastSet {
    Eigen::MatrixXd C;  // M x k
    std::vector<CandidateShape> shapes;

    int models() const { return static_cast<int>(C.rows()); }
    int arms() const { return static_cast<int>(C.cols()); }
};

// Contrast maximizing c'mu0 / sqrt(c'Sc) subject to c'1 = 0, normalized to
// unit Euclidean norm with c'mu0 > 0.
Eigen::VectorXd optimal_contrast(const Eigen::VectorXd& mu0, const SpdMatrix& S);

ContrastSet build_contrast_set(const std::vector<CandidateShape>& shapes,
                               const DoseDesign& design, const SpdMatrix& S);

struct TestStatVector {
    Eigen::VectorXd T;      // length M
    Eigen::MatrixXd corr;   // M x M, unit diagonal, PSD
    double crit = std::numeric_limits<double>::quiet_NaN();
    bool rejected = false;

    double t_max() const { return T.maxCoeff(); }
};

// T_m = c_m' mu_hat / sqrt(c_m' S c_m); corr = P C S C' P'.
TestStatVector test_statistics(const ContrastSet& cs, const GroupEstimates& est);

// Fills crit (from the statistic correlation at level alpha) and the
// rejection flag max T > crit.
TestStatVector mcp_decision(TestStatVector ts, double alpha, RandomStream& rng,
                            const QmcSettings& settings = {});

void write_contrasts_csv(const ContrastSet& cs, const DoseDesign& design, std::ostream& out);

}  // namespace dfpower
