#include "dfpower/linalg.hpp"

#include <cmath>

namespace dfpower {

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw dimension_mismatch("SpdMatrix: matrix must be square and non-empty");
    }
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * (scale > 0 ? scale : 1.0)) {
        throw dimension_mismatch("SpdMatrix: matrix not symmetric within 1e-12 relative tolerance");
    }
    mat_ = 0.5 * (m + m.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(mat_);
    if (llt.info() != Eigen::Success) {
        throw not_positive_definite("SpdMatrix: Cholesky factorization failed (pivot <= 0)");
    }
    chol_ = llt.matrixL();
}

double SpdMatrix::log_det() const {
    return 2.0 * chol_.diagonal().array().log().sum();
}

SpdMatrix SpdMatrix::inverse() const {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim(), dim());
    Eigen::MatrixXd inv = solve(id);
    return SpdMatrix(0.5 * (inv + inv.transpose()));
}

Eigen::VectorXd SpdMatrix::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(b);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd SpdMatrix::solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd y = chol_.triangularView<Eigen::Lower>().solve(b);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

SpdMatrix SpdMatrix::identity(int n) {
    return SpdMatrix(Eigen::MatrixXd::Identity(n, n));
}

SpdMatrix SpdMatrix::diagonal(const Eigen::VectorXd& d) {
    return SpdMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

Eigen::MatrixXd cholesky(const SpdMatrix& m) { return m.chol(); }

SpdMatrix spd_inverse(const SpdMatrix& m) { return m.inverse(); }

double log_det(const SpdMatrix& m) { return m.log_det(); }

SpdMatrix spd_with_ridge(Eigen::MatrixXd m, double rel) {
    m = 0.5 * (m + m.transpose()).eval();
    double ridge = rel * std::max(m.diagonal().mean(), 1e-300);
    for (int attempt = 0; attempt < 4; ++attempt) {
        try {
            return SpdMatrix(m);
        } catch (const not_positive_definite&) {
            m.diagonal().array() += ridge;
            ridge *= 100.0;
        }
    }
    return SpdMatrix(m);  // propagate the failure
}

Eigen::MatrixXd compound_symmetry(int dim, double sigma, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(dim, dim, sigma * sigma * rho);
    m.diagonal().setConstant(sigma * sigma);
    return m;
}

}  // namespace dfpower
