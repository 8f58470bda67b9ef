#include "dfpower/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dfpower/normal.hpp"

namespace dfpower {

MvnSpec::MvnSpec(Eigen::VectorXd mean_, SpdMatrix cov_)
    : mean(std::move(mean_)), cov(std::move(cov_)) {
    if (mean.size() != cov.dim()) {
        throw dimension_mismatch("MvnSpec: mean length must equal covariance dimension");
    }
}

Eigen::VectorXd mvn_sample(const MvnSpec& spec, RandomStream& rng) {
    Eigen::VectorXd z(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) z[i] = rng.normal();
    return spec.mean + spec.cov.chol() * z;
}

namespace {

// sqrt of the first 32 primes: Richtmyer lattice generators.
const double kSqrtPrimes[] = {
    1.4142135623730951, 1.7320508075688772, 2.2360679774997896, 2.6457513110645907,
    3.3166247903553998, 3.6055512754639891, 4.1231056256176606, 4.3588989435406740,
    4.7958315233127191, 5.3851648071345037, 5.5677643628300215, 6.0827625302982193,
    6.4031242374328485, 6.5574385243020004, 6.8556546004010439, 7.2801098892805181,
    7.6811457478686078, 7.8102496759066544, 8.1853527718724504, 8.4261497731763586,
    8.5440037453175304, 8.8881944173155887, 9.1104335791442988, 9.4339811320566032,
    9.8488578017961039, 10.0498756211208899, 10.1488915650922397, 10.3440804327886015,
    10.4403065089105507, 10.6301458127346500, 11.2694276695846270, 11.4455231422596205};

constexpr double kTinyProb = 1e-300;

}  // namespace

EquicoordinateRule::EquicoordinateRule(const MvnSpec& spec, RandomStream& rng,
                                       const QmcSettings& settings)
    : dim_(spec.dim()), settings_(settings) {
    if (dim_ > settings.max_dim) {
        throw dimension_too_large("equicoordinate_prob: dimension exceeds configured cap");
    }
    sd_ = spec.cov.mat().diagonal().cwiseSqrt();
    mean_ = spec.mean;

    // Standardize to a correlation matrix; integrate the least likely
    // coordinate first (largest standardized mean = smallest P(X < c)).
    order_.resize(dim_);
    std::iota(order_.begin(), order_.end(), 0);
    const Eigen::VectorXd key = mean_.cwiseQuotient(sd_);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int a, int b) { return key[a] > key[b]; });

    Eigen::MatrixXd corr(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            corr(i, j) = spec.cov.mat()(order_[i], order_[j]) / (sd_[order_[i]] * sd_[order_[j]]);
        }
    }
    chol_corr_ = spd_with_ridge(corr).chol();

    const int nshift = std::max(1, dim_ - 1);
    shifts_.resize(settings.randomizations, nshift);
    for (int r = 0; r < settings.randomizations; ++r) {
        for (int j = 0; j < nshift; ++j) shifts_(r, j) = rng.uniform01();
    }
}

ProbEstimate EquicoordinateRule::prob(double c) const {
    Eigen::VectorXd b(dim_);
    for (int i = 0; i < dim_; ++i) b[i] = (c - mean_[order_[i]]) / sd_[order_[i]];

    if (dim_ == 1) {
        return {norm_cdf(b[0]), 0.0};
    }

    const int K = settings_.randomizations;
    const int n = settings_.lattice_points;
    const double e1 = norm_cdf(b[0] / chol_corr_(0, 0));

    Eigen::VectorXd estimates(K);
    Eigen::VectorXd y(dim_ - 1);

    for (int r = 0; r < K; ++r) {
        double sum = 0.0;
        for (int k = 1; k <= n; ++k) {
            double f = e1;
            double e = e1;
            for (int i = 1; i < dim_; ++i) {
                double u = k * kSqrtPrimes[i - 1] + shifts_(r, i - 1);
                u -= std::floor(u);
                u = std::fabs(2.0 * u - 1.0);  // baker's transform
                y[i - 1] = norm_quantile(std::max(u * e, kTinyProb));
                double q = b[i];
                for (int j = 0; j < i; ++j) q -= chol_corr_(i, j) * y[j];
                e = norm_cdf(q / chol_corr_(i, i));
                f *= e;
                if (f <= 0.0) break;
            }
            sum += f;
        }
        estimates[r] = sum / n;
    }

    const double mean = estimates.mean();
    double se = 0.0;
    if (K > 1) {
        const double var = (estimates.array() - mean).square().sum() / (K - 1);
        se = std::sqrt(var / K);
    }
    return {std::clamp(mean, 0.0, 1.0), se};
}

ProbEstimate equicoordinate_prob(const MvnSpec& spec, double c, RandomStream& rng,
                                 const QmcSettings& settings) {
    EquicoordinateRule rule(spec, rng, settings);
    return rule.prob(c);
}

double critical_value(const Eigen::MatrixXd& corr, double alpha, RandomStream& rng,
                      const QmcSettings& settings) {
    const int m = static_cast<int>(corr.rows());
    if ((corr.diagonal().array() - 1.0).abs().maxCoeff() > 1e-8) {
        throw dimension_mismatch("critical_value: corr must have unit diagonal");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw dimension_mismatch("critical_value: alpha must lie in (0, 0.5)");
    }
    if (m == 1) {
        return norm_quantile(1.0 - alpha);
    }

    MvnSpec spec(Eigen::VectorXd::Zero(m), spd_with_ridge(corr));
    EquicoordinateRule rule(spec, rng, settings);
    const double target = 1.0 - alpha;
    const double tol = 1e-4;

    double lo = 0.0, hi = 6.0;
    double plo = rule.prob(lo).value, phi = rule.prob(hi).value;
    if (plo > target || phi < target) {
        throw numeric_error("critical_value: root not bracketed in [0, 6]");
    }
    for (int it = 0; it < 8; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pm = rule.prob(mid).value;
        if (std::fabs(pm - target) <= 0.5 * tol) return mid;
        if (pm < target) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
            phi = pm;
        }
    }
    double x0 = lo, f0 = plo - target;
    double x1 = hi, f1 = phi - target;
    for (int it = 0; it < 40; ++it) {
        if (std::fabs(f1 - f0) < 1e-15) break;
        double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x2 = std::clamp(x2, lo, hi);
        const double f2 = rule.prob(x2).value - target;
        if (std::fabs(f2) <= 0.5 * tol) return x2;
        if (f2 < 0) {
            lo = x2;
        } else {
            hi = x2;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace dfpower
