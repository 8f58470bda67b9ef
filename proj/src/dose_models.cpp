#include "dfpower/dose_models.hpp"

#include <cmath>
#include <cstdio>

namespace dfpower {

int DoseDesign::total_n() const {
    int t = 0;
    for (int v : n) t += v;
    return t;
}

Eigen::VectorXd DoseDesign::inv_n() const {
    Eigen::VectorXd d(arms());
    for (int i = 0; i < arms(); ++i) d[i] = 1.0 / n[static_cast<size_t>(i)];
    return d;
}

void DoseDesign::validate() const {
    if (arms() < 2) throw config_error("DoseDesign: need at least two arms");
    if (doses[0] != 0.0) throw config_error("DoseDesign: first dose must be placebo (0)");
    for (int i = 1; i < arms(); ++i) {
        if (!(doses[i] > doses[i - 1])) throw config_error("DoseDesign: doses must be strictly increasing");
    }
    if (alloc.size() != arms()) throw config_error("DoseDesign: alloc length mismatch");
    if ((alloc.array() <= 0).any()) throw config_error("DoseDesign: alloc weights must be positive");
    if (static_cast<int>(n.size()) != arms()) throw config_error("DoseDesign: n length mismatch");
    for (int v : n) {
        if (v < 1) throw config_error("DoseDesign: per-arm sample sizes must be >= 1");
    }
}

DoseDesign DoseDesign::with_blocks(Eigen::VectorXd doses, Eigen::VectorXd alloc, int blocks) {
    DoseDesign d;
    d.doses = std::move(doses);
    d.alloc = std::move(alloc);
    d.n.resize(static_cast<size_t>(d.arms()));
    for (int i = 0; i < d.arms(); ++i) {
        d.n[static_cast<size_t>(i)] = static_cast<int>(std::lround(d.alloc[i])) * blocks;
    }
    d.validate();
    return d;
}

CandidateShape CandidateShape::emax(double ed50) {
    CandidateShape s;
    s.kind = Kind::Emax;
    s.ed50 = ed50;
    return s;
}

CandidateShape CandidateShape::sig_emax(double ed50, double hill) {
    CandidateShape s;
    s.kind = Kind::SigEmax;
    s.ed50 = ed50;
    s.hill = hill;
    return s;
}

CandidateShape CandidateShape::quadratic(double delta) {
    CandidateShape s;
    s.kind = Kind::Quadratic;
    s.delta = delta;
    return s;
}

CandidateShape CandidateShape::quadratic_peak_at(double peak_dose) {
    return quadratic(-1.0 / (2.0 * peak_dose));
}

std::string CandidateShape::label() const {
    char buf[64];
    switch (kind) {
        case Kind::Emax:
            std::snprintf(buf, sizeof buf, "emax(%g)", ed50);
            break;
        case Kind::SigEmax:
            std::snprintf(buf, sizeof buf, "sigemax(%g,%g)", ed50, hill);
            break;
        case Kind::Quadratic:
            std::snprintf(buf, sizeof buf, "quadratic(%g)", delta);
            break;
    }
    return buf;
}

double shape_mean(const CandidateShape& shape, double d) {
    switch (shape.kind) {
        case CandidateShape::Kind::Emax:
            return d / (d + shape.ed50);
        case CandidateShape::Kind::SigEmax: {
            const double dh = std::pow(d, shape.hill);
            return dh / (dh + std::pow(shape.ed50, shape.hill));
        }
        case CandidateShape::Kind::Quadratic: {
            // vertex at -1/(2 delta); scale so the vertex value is 1
            return (d + shape.delta * d * d) * (-4.0 * shape.delta);
        }
    }
    return 0.0;
}

double scaled_effect(const CandidateShape& shape, double d, double dmax) {
    double peak = shape_mean(shape, dmax);
    if (shape.kind == CandidateShape::Kind::Quadratic && shape.delta < 0.0) {
        const double vertex = -1.0 / (2.0 * shape.delta);
        if (vertex < dmax) peak = shape_mean(shape, vertex);
    }
    return shape_mean(shape, d) / peak;
}

double effect_at_time(const EffectProfile& p, double t_weeks) {
    return p.emax_tmax * (1.0 - std::exp(-p.rate * t_weeks)) /
           (1.0 - std::exp(-p.rate * p.t_max));
}

Eigen::VectorXd candidate_mean_vector(const CandidateShape& shape, const DoseDesign& design) {
    Eigen::VectorXd mu(design.arms());
    for (int i = 0; i < design.arms(); ++i) mu[i] = shape_mean(shape, design.doses[i]);
    return mu;
}

std::vector<CandidateShape> default_catalog() {
    std::vector<CandidateShape> shapes;
    for (double e : {0.25, 1.0, 2.0, 4.0}) shapes.push_back(CandidateShape::emax(e));
    shapes.push_back(CandidateShape::sig_emax(0.5, 3.0));
    shapes.push_back(CandidateShape::sig_emax(1.0, 3.0));
    shapes.push_back(CandidateShape::sig_emax(2.0, 4.0));
    shapes.push_back(CandidateShape::sig_emax(4.0, 5.0));
    shapes.push_back(CandidateShape::quadratic_peak_at(6.0));
    return shapes;
}

}  // namespace dfpower
