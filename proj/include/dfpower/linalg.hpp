#pragma once

#include <Eigen/Dense>

#include "dfpower/errors.hpp"

namespace dfpower {

// Symmetric positive-definite matrix with its Cholesky factor computed at
// construction. Construction is the validation point: a failed factorization
// (any pivot <= 0) signals an invalid covariance and throws
// not_positive_definite; asymmetry beyond 1e-12 relative throws
// dimension_mismatch. The stored matrix is the symmetrized input.
class SpdMatrix {
public:
    explicit SpdMatrix(const Eigen::MatrixXd& m);

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXd& mat() const { return mat_; }

    // Lower-triangular factor L with L L^T = mat().
    const Eigen::MatrixXd& chol() const { return chol_; }

    double log_det() const;
    SpdMatrix inverse() const;

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

    static SpdMatrix identity(int n);
    static SpdMatrix diagonal(const Eigen::VectorXd& d);

private:
    Eigen::MatrixXd mat_;
    Eigen::MatrixXd chol_;
};

// Spec surface kept as free functions.
Eigen::MatrixXd cholesky(const SpdMatrix& m);
SpdMatrix spd_inverse(const SpdMatrix& m);
double log_det(const SpdMatrix& m);

// Try to interpret m as SPD; on a failed factorization add a relative ridge
// (rel * mean diagonal) and retry a few times. Used where near-singular
// covariances of test statistics are expected (almost-collinear contrasts).
SpdMatrix spd_with_ridge(Eigen::MatrixXd m, double rel = 1e-10);

// Compound-symmetry covariance: sigma^2 * ((1-rho) I + rho 11').
Eigen::MatrixXd compound_symmetry(int dim, double sigma, double rho);

}  // namespace dfpower
