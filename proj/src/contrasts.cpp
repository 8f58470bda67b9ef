#include "dfpower/contrasts.hpp"

#include <cmath>
#include <ostream>

#include "dfpower/csv.hpp"

namespace dfpower {

Eigen::VectorXd optimal_contrast(const Eigen::VectorXd& mu0, const SpdMatrix& S) {
    const int k = static_cast<int>(mu0.size());
    if (k != S.dim()) throw dimension_mismatch("optimal_contrast: dimension mismatch");
    const double spread = mu0.maxCoeff() - mu0.minCoeff();
    if (spread <= 1e-12 * std::max(1.0, mu0.cwiseAbs().maxCoeff())) {
        throw flat_shape("optimal_contrast: candidate means are constant across arms");
    }
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(k);
    const Eigen::VectorXd s_inv_mu = S.solve(mu0);
    const Eigen::VectorXd s_inv_one = S.solve(one);
    const double shift = one.dot(s_inv_mu) / one.dot(s_inv_one);
    Eigen::VectorXd c = s_inv_mu - shift * s_inv_one;
    c.array() -= c.mean();  // exact zero-sum against roundoff
    c /= c.norm();
    if (c.dot(mu0) < 0) c = -c;
    return c;
}

ContrastSet build_contrast_set(const std::vector<CandidateShape>& shapes,
                               const DoseDesign& design, const SpdMatrix& S) {
    ContrastSet cs;
    cs.shapes = shapes;
    cs.C.resize(static_cast<int>(shapes.size()), design.arms());
    for (size_t m = 0; m < shapes.size(); ++m) {
        cs.C.row(static_cast<int>(m)) =
            optimal_contrast(candidate_mean_vector(shapes[m], design), S).transpose();
    }
    return cs;
}

TestStatVector test_statistics(const ContrastSet& cs, const GroupEstimates& est) {
    if (cs.arms() != est.arms()) throw dimension_mismatch("test_statistics: arm count mismatch");
    const int M = cs.models();
    const Eigen::MatrixXd CS = cs.C * est.S.mat();       // M x k
    const Eigen::MatrixXd CSC = CS * cs.C.transpose();   // M x M
    Eigen::VectorXd denom(M);
    for (int m = 0; m < M; ++m) {
        const double v = CSC(m, m);
        if (!(v > 0.0)) throw degenerate_contrast("test_statistics: c'Sc <= 0");
        denom[m] = std::sqrt(v);
    }
    TestStatVector ts;
    ts.T = (cs.C * est.mu_hat).cwiseQuotient(denom);
    ts.corr = denom.cwiseInverse().asDiagonal() * CSC * denom.cwiseInverse().asDiagonal();
    ts.corr = 0.5 * (ts.corr + ts.corr.transpose()).eval();
    ts.corr.diagonal().setOnes();
    return ts;
}

TestStatVector mcp_decision(TestStatVector ts, double alpha, RandomStream& rng,
                            const QmcSettings& settings) {
    ts.crit = critical_value(ts.corr, alpha, rng, settings);
    ts.rejected = ts.t_max() > ts.crit;
    return ts;
}

void write_contrasts_csv(const ContrastSet& cs, const DoseDesign& design, std::ostream& out) {
    out << "model";
    for (int i = 0; i < design.arms(); ++i) out << ",dose_" << format_double(design.doses[i]);
    out << "\n";
    for (int m = 0; m < cs.models(); ++m) {
        out << cs.shapes[static_cast<size_t>(m)].label();
        for (int i = 0; i < cs.arms(); ++i) out << "," << format_double(cs.C(m, i));
        out << "\n";
    }
}

}  // namespace dfpower
