#pragma once

#include <Eigen/Dense>

#include "dfpower/linalg.hpp"

namespace dfpower {

// Adjusted dose-group estimates with their covariance: the first-stage
// output every contrast test and power calculation consumes.
struct GroupEstimates {
    Eigen::VectorXd mu_hat;  // length k, change from baseline (L)
    SpdMatrix S;             // k x k

    GroupEstimates(Eigen::VectorXd mu, SpdMatrix cov) : mu_hat(std::move(mu)), S(std::move(cov)) {
        if (mu_hat.size() != S.dim()) {
            throw dimension_mismatch("GroupEstimates: mean/covariance dimension mismatch");
        }
    }
    int arms() const { return static_cast<int>(mu_hat.size()); }
};

}  // namespace dfpower
