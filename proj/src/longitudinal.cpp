#include "dfpower/longitudinal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "dfpower/csv.hpp"

namespace dfpower {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

int PatientRecord::observed_count() const {
    int c = 0;
    for (auto f : observed) c += f ? 1 : 0;
    return c;
}

void write_trial_csv(const TrialDataset& data, std::ostream& out) {
    out << "patient_id,arm,recruit_week,baseline";
    for (double w : data.visit_weeks) out << ",y_w" << format_double(w);
    out << "\n";
    for (const PatientRecord& p : data.patients) {
        out << p.id << "," << p.arm << "," << format_double(p.recruit_week) << ","
            << format_double(p.baseline);
        for (int v = 0; v < data.visits(); ++v) {
            out << ",";
            if (p.observed[static_cast<size_t>(v)]) out << format_double(p.y[static_cast<size_t>(v)]);
        }
        out << "\n";
    }
}

TrialDataset read_trial_csv(std::istream& in) {
    CsvTable t = read_csv(in);
    if (t.header.size() < 5 || t.header[0] != "patient_id") {
        throw config_error("trial CSV: expected header patient_id,arm,recruit_week,baseline,y_w...");
    }
    TrialDataset data;
    for (size_t c = 4; c < t.header.size(); ++c) {
        const std::string& h = t.header[c];
        if (h.rfind("y_w", 0) != 0) throw config_error("trial CSV: bad outcome column name: " + h);
        data.visit_weeks.push_back(std::stod(h.substr(3)));
    }
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw config_error("trial CSV: ragged row");
        PatientRecord p;
        p.id = std::stoi(row[0]);
        p.arm = std::stoi(row[1]);
        p.recruit_week = std::stod(row[2]);
        p.baseline = std::stod(row[3]);
        p.y.resize(data.visit_weeks.size(), 0.0);
        p.observed.resize(data.visit_weeks.size(), 0);
        for (size_t v = 0; v < data.visit_weeks.size(); ++v) {
            const std::string& cell = row[4 + v];
            if (!cell.empty()) {
                p.y[v] = std::stod(cell);
                p.observed[v] = 1;
            }
        }
        data.arms = std::max(data.arms, p.arm + 1);
        data.patients.push_back(std::move(p));
    }
    return data;
}

TrialDataset read_trial_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open trial CSV: " + path);
    return read_trial_csv(in);
}

double MmrmFit::sigma_hat_final() const {
    const int last = resid_cov.dim() - 1;
    return std::sqrt(resid_cov.mat()(last, last));
}

namespace {

struct FitPatient {
    int arm;
    double xc;               // centered baseline
    Eigen::VectorXd z;       // change scores over kept visits (junk where missing)
    int mask;                // bit v set = visit v observed
};

struct PatternInfo {
    std::vector<int> obs;    // observed visit indices
    std::vector<int> mis;
    // per-iteration quantities
    Eigen::MatrixXd soo_inv;     // |O| x |O|
    Eigen::MatrixXd regress;     // |M| x |O| : Sigma_MO Sigma_OO^-1
    Eigen::MatrixXd cond_cov;    // V x V, zero outside missing block
    Eigen::MatrixXd w_embed;     // V x V, Sigma_OO^-1 embedded at observed rows/cols
    double logdet = 0.0;
};

void refresh_pattern(PatternInfo& pat, const Eigen::MatrixXd& sigma) {
    const int no = static_cast<int>(pat.obs.size());
    const int nm = static_cast<int>(pat.mis.size());
    const int V = static_cast<int>(sigma.rows());
    Eigen::MatrixXd soo(no, no);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < no; ++j) soo(i, j) = sigma(pat.obs[i], pat.obs[j]);
    Eigen::LLT<Eigen::MatrixXd> llt(soo);
    if (llt.info() != Eigen::Success) {
        throw not_positive_definite("fit_mmrm: residual covariance lost positive definiteness");
    }
    pat.soo_inv = llt.solve(Eigen::MatrixXd::Identity(no, no));
    pat.logdet = 0.0;
    for (int i = 0; i < no; ++i) pat.logdet += 2.0 * std::log(llt.matrixL()(i, i));

    pat.w_embed = Eigen::MatrixXd::Zero(V, V);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < no; ++j) pat.w_embed(pat.obs[i], pat.obs[j]) = pat.soo_inv(i, j);

    pat.cond_cov = Eigen::MatrixXd::Zero(V, V);
    if (nm > 0) {
        Eigen::MatrixXd smo(nm, no), smm(nm, nm);
        for (int i = 0; i < nm; ++i) {
            for (int j = 0; j < no; ++j) smo(i, j) = sigma(pat.mis[i], pat.obs[j]);
            for (int j = 0; j < nm; ++j) smm(i, j) = sigma(pat.mis[i], pat.mis[j]);
        }
        pat.regress = smo * pat.soo_inv;
        const Eigen::MatrixXd cc = smm - pat.regress * smo.transpose();
        for (int i = 0; i < nm; ++i)
            for (int j = 0; j < nm; ++j) pat.cond_cov(pat.mis[i], pat.mis[j]) = cc(i, j);
    }
}

}  // namespace

MmrmFit fit_mmrm(const TrialDataset& data, const MmrmOptions& opts) {
    const int Vall = data.visits();
    const int A = data.arms;
    if (A < 1) throw singular_design("fit_mmrm: dataset has no arms");

    // Keep visits that are observed for at least one patient.
    std::vector<int> kept;
    for (int v = 0; v < Vall; ++v) {
        for (const PatientRecord& p : data.patients) {
            if (p.observed[static_cast<size_t>(v)]) {
                kept.push_back(v);
                break;
            }
        }
    }
    if (kept.empty() || kept.back() != Vall - 1) {
        throw singular_design("fit_mmrm: no data at the final visit");
    }
    const int V = static_cast<int>(kept.size());

    // Patients contributing at least one kept visit.
    std::vector<FitPatient> pts;
    double baseline_sum = 0.0;
    std::vector<int> per_arm(static_cast<size_t>(A), 0);
    for (const PatientRecord& p : data.patients) {
        if (p.arm < 0 || p.arm >= A) throw singular_design("fit_mmrm: arm index out of range");
        FitPatient fp;
        fp.arm = p.arm;
        fp.z.resize(V);
        fp.mask = 0;
        for (int v = 0; v < V; ++v) {
            const size_t src = static_cast<size_t>(kept[static_cast<size_t>(v)]);
            if (p.observed[src]) {
                fp.z[v] = p.y[src] - p.baseline;
                fp.mask |= 1 << v;
            } else {
                fp.z[v] = 0.0;
            }
        }
        if (fp.mask == 0) continue;
        fp.xc = p.baseline;
        baseline_sum += p.baseline;
        ++per_arm[static_cast<size_t>(p.arm)];
        pts.push_back(std::move(fp));
    }
    const int N = static_cast<int>(pts.size());
    for (int a = 0; a < A; ++a) {
        if (per_arm[static_cast<size_t>(a)] < 2) {
            throw singular_design("fit_mmrm: arm " + std::to_string(a) +
                                  " has fewer than 2 patients with post-baseline data");
        }
    }
    const double xbar = baseline_sum / N;
    for (FitPatient& p : pts) p.xc -= xbar;

    const bool useb = opts.use_baseline;
    const int P = A * V + (useb ? V : 0);
    const int slope0 = A * V;

    // --- initialization: complete-case means/covariance, CS fallback ---
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(A, V);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(V);
    {
        Eigen::MatrixXd cnt = Eigen::MatrixXd::Zero(A, V);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(A, V);
        const int full = (1 << V) - 1;
        for (const FitPatient& p : pts) {
            if (p.mask != full) continue;
            for (int v = 0; v < V; ++v) {
                sum(p.arm, v) += p.z[v];
                cnt(p.arm, v) += 1.0;
            }
        }
        Eigen::MatrixXd acnt = Eigen::MatrixXd::Zero(A, V);
        Eigen::MatrixXd asum = Eigen::MatrixXd::Zero(A, V);
        for (const FitPatient& p : pts) {
            for (int v = 0; v < V; ++v) {
                if (p.mask & (1 << v)) {
                    asum(p.arm, v) += p.z[v];
                    acnt(p.arm, v) += 1.0;
                }
            }
        }
        for (int a = 0; a < A; ++a) {
            for (int v = 0; v < V; ++v) {
                if (cnt(a, v) > 0) {
                    theta(a, v) = sum(a, v) / cnt(a, v);
                } else if (acnt(a, v) > 0) {
                    theta(a, v) = asum(a, v) / acnt(a, v);
                }
            }
        }
    }
    Eigen::MatrixXd sigma;
    {
        int ncc = 0;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(V, V);
        const int full = (1 << V) - 1;
        for (const FitPatient& p : pts) {
            if (p.mask != full) continue;
            Eigen::VectorXd r = p.z - theta.row(p.arm).transpose();
            acc += r * r.transpose();
            ++ncc;
        }
        bool ok = ncc >= 3;
        if (ok) {
            sigma = acc / ncc;
            ok = Eigen::LLT<Eigen::MatrixXd>(sigma).info() == Eigen::Success;
        }
        if (!ok) {
            double ss = 0.0;
            int nn = 0;
            for (const FitPatient& p : pts) {
                for (int v = 0; v < V; ++v) {
                    if (p.mask & (1 << v)) {
                        const double r = p.z[v] - theta(p.arm, v);
                        ss += r * r;
                        ++nn;
                    }
                }
            }
            const double s2 = nn > 0 ? ss / nn : 1.0;
            sigma = compound_symmetry(V, std::sqrt(std::max(s2, 1e-12)), 0.5);
        }
    }

    // --- pattern bookkeeping ---
    std::map<int, PatternInfo> patterns;
    std::map<int, int> pattern_count;
    for (const FitPatient& p : pts) {
        if (patterns.count(p.mask) == 0) {
            PatternInfo pi;
            for (int v = 0; v < V; ++v) {
                if (p.mask & (1 << v)) {
                    pi.obs.push_back(v);
                } else {
                    pi.mis.push_back(v);
                }
            }
            patterns.emplace(p.mask, std::move(pi));
        }
        ++pattern_count[p.mask];
    }

    // --- EM ---
    std::vector<double> ll_trace;
    double loglik = -std::numeric_limits<double>::infinity();

    Eigen::MatrixXd yhat(N, V);
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iter = 0;

    for (iter = 1; iter <= opts.max_iter; ++iter) {
        for (auto& [mask, pat] : patterns) refresh_pattern(pat, sigma);

        // E-step: completed outcomes and observed-data log-likelihood.
        double ll = 0.0;
        for (int i = 0; i < N; ++i) {
            const FitPatient& p = pts[static_cast<size_t>(i)];
            const PatternInfo& pat = patterns.at(p.mask);
            Eigen::VectorXd m = theta.row(p.arm).transpose();
            if (useb) m += p.xc * beta;
            const int no = static_cast<int>(pat.obs.size());
            Eigen::VectorXd robs(no);
            for (int j = 0; j < no; ++j) robs[j] = p.z[pat.obs[static_cast<size_t>(j)]] - m[pat.obs[static_cast<size_t>(j)]];
            const Eigen::VectorXd wr = pat.soo_inv * robs;
            ll += -0.5 * (no * kLog2Pi + pat.logdet + robs.dot(wr));
            Eigen::VectorXd comp = m;
            for (int j = 0; j < no; ++j) comp[pat.obs[static_cast<size_t>(j)]] = p.z[pat.obs[static_cast<size_t>(j)]];
            if (!pat.mis.empty()) {
                const Eigen::VectorXd fill = pat.regress * robs;
                for (size_t j = 0; j < pat.mis.size(); ++j) comp[pat.mis[j]] += fill[static_cast<int>(j)];
            }
            yhat.row(i) = comp.transpose();
        }
        ll_trace.push_back(ll);
        loglik = ll;
        if (std::fabs(ll - prev_ll) <= opts.rel_tol * (1.0 + std::fabs(ll))) {
            converged = true;
            break;
        }
        prev_ll = ll;

        // M-step, coefficients: GLS on the completed data.
        Eigen::LLT<Eigen::MatrixXd> sig_llt(sigma);
        const Eigen::MatrixXd w = sig_llt.solve(Eigen::MatrixXd::Identity(V, V));
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(P, P);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P);
        std::vector<double> sx(static_cast<size_t>(A), 0.0);
        double sxx = 0.0;
        for (int i = 0; i < N; ++i) {
            const FitPatient& p = pts[static_cast<size_t>(i)];
            const Eigen::VectorXd u = w * yhat.row(i).transpose();
            rhs.segment(p.arm * V, V) += u;
            if (useb) {
                rhs.segment(slope0, V) += p.xc * u;
                sx[static_cast<size_t>(p.arm)] += p.xc;
                sxx += p.xc * p.xc;
            }
        }
        for (int a = 0; a < A; ++a) {
            info.block(a * V, a * V, V, V) += per_arm[static_cast<size_t>(a)] * w;
            if (useb) {
                info.block(a * V, slope0, V, V) += sx[static_cast<size_t>(a)] * w;
                info.block(slope0, a * V, V, V) += sx[static_cast<size_t>(a)] * w;
            }
        }
        if (useb) info.block(slope0, slope0, V, V) += sxx * w;
        Eigen::LDLT<Eigen::MatrixXd> solver(info);
        if (solver.info() != Eigen::Success) {
            throw singular_design("fit_mmrm: singular coefficient system");
        }
        const Eigen::VectorXd gamma = solver.solve(rhs);
        for (int a = 0; a < A; ++a) theta.row(a) = gamma.segment(a * V, V).transpose();
        if (useb) beta = gamma.segment(slope0, V);

        // M-step, covariance: residual second moments plus conditional blocks.
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(V, V);
        for (int i = 0; i < N; ++i) {
            const FitPatient& p = pts[static_cast<size_t>(i)];
            Eigen::VectorXd m = theta.row(p.arm).transpose();
            if (useb) m += p.xc * beta;
            const Eigen::VectorXd r = yhat.row(i).transpose() - m;
            acc += r * r.transpose();
        }
        for (const auto& [mask, cnt] : pattern_count) {
            acc += cnt * patterns.at(mask).cond_cov;
        }
        sigma = acc / N;
        sigma = 0.5 * (sigma + sigma.transpose()).eval();
    }

    // Observed information for the coefficients at the ML estimate, using
    // each patient's observed visits only.
    for (auto& [mask, pat] : patterns) refresh_pattern(pat, sigma);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(P, P);
    {
        std::map<int, std::vector<double>> sx_pat;   // per pattern: per-arm sum of xc
        std::map<int, std::vector<double>> n_pat;    // per pattern: per-arm count
        std::map<int, double> sxx_pat;
        for (const FitPatient& p : pts) {
            auto& sx = sx_pat.try_emplace(p.mask, std::vector<double>(static_cast<size_t>(A), 0.0)).first->second;
            auto& np = n_pat.try_emplace(p.mask, std::vector<double>(static_cast<size_t>(A), 0.0)).first->second;
            sx[static_cast<size_t>(p.arm)] += p.xc;
            np[static_cast<size_t>(p.arm)] += 1.0;
            sxx_pat[p.mask] += p.xc * p.xc;
        }
        for (const auto& [mask, pat] : patterns) {
            const Eigen::MatrixXd& we = pat.w_embed;
            const auto& np = n_pat.at(mask);
            const auto& sx = sx_pat.at(mask);
            for (int a = 0; a < A; ++a) {
                if (np[static_cast<size_t>(a)] > 0) info.block(a * V, a * V, V, V) += np[static_cast<size_t>(a)] * we;
                if (useb && sx[static_cast<size_t>(a)] != 0.0) {
                    info.block(a * V, slope0, V, V) += sx[static_cast<size_t>(a)] * we;
                    info.block(slope0, a * V, V, V) += sx[static_cast<size_t>(a)] * we;
                }
            }
            if (useb) info.block(slope0, slope0, V, V) += sxx_pat.at(mask) * we;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> obs_llt(info);
    if (obs_llt.info() != Eigen::Success) {
        throw singular_design("fit_mmrm: observed information is singular (some cell has no data)");
    }
    // Covariance of the final-visit cell means.
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(P, A);
    for (int a = 0; a < A; ++a) sel(a * V + (V - 1), a) = 1.0;
    const Eigen::MatrixXd cols = obs_llt.solve(sel);
    Eigen::MatrixXd s_ls = sel.transpose() * cols;
    Eigen::VectorXd mu_ls = theta.col(V - 1);

    return MmrmFit{theta,
                   useb ? beta : Eigen::VectorXd::Zero(V),
                   SpdMatrix(sigma),
                   GroupEstimates(std::move(mu_ls), spd_with_ridge(s_ls, 1e-14)),
                   loglik,
                   std::min(iter, opts.max_iter),
                   converged,
                   kept,
                   ll_trace,
                   xbar,
                   N};
}

CompleterFit fit_completers(const TrialDataset& data, bool use_baseline) {
    const int A = data.arms;
    const int last = data.visits() - 1;
    if (A < 1 || last < 0) throw singular_design("fit_completers: empty dataset");

    std::vector<const PatientRecord*> comp;
    std::vector<int> per_arm(static_cast<size_t>(A), 0);
    double xsum = 0.0;
    for (const PatientRecord& p : data.patients) {
        if (!p.observed[static_cast<size_t>(last)]) continue;
        comp.push_back(&p);
        ++per_arm[static_cast<size_t>(p.arm)];
        xsum += p.baseline;
    }
    for (int a = 0; a < A; ++a) {
        if (per_arm[static_cast<size_t>(a)] < 2) {
            throw singular_design("fit_completers: arm " + std::to_string(a) +
                                  " has fewer than 2 completers");
        }
    }
    const int n = static_cast<int>(comp.size());
    const double xbar = xsum / n;
    const int P = A + (use_baseline ? 1 : 0);

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(P, P);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(P);
    for (const PatientRecord* p : comp) {
        const double z = p->y[static_cast<size_t>(last)] - p->baseline;
        const double xc = p->baseline - xbar;
        xtx(p->arm, p->arm) += 1.0;
        xty[p->arm] += z;
        if (use_baseline) {
            xtx(p->arm, A) += xc;
            xtx(A, p->arm) += xc;
            xtx(A, A) += xc * xc;
            xty[A] += xc * z;
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
    if (solver.info() != Eigen::Success) {
        throw singular_design("fit_completers: singular ANCOVA design");
    }
    const Eigen::VectorXd coef = solver.solve(xty);

    double ssr = 0.0;
    for (const PatientRecord* p : comp) {
        const double z = p->y[static_cast<size_t>(last)] - p->baseline;
        double pred = coef[p->arm];
        if (use_baseline) pred += coef[A] * (p->baseline - xbar);
        ssr += (z - pred) * (z - pred);
    }
    const double sigma2 = ssr / n;  // ML divisor, matching the MMRM

    const Eigen::MatrixXd xtx_inv = solver.solve(Eigen::MatrixXd::Identity(P, P));
    Eigen::MatrixXd s = sigma2 * xtx_inv.topLeftCorner(A, A);

    CompleterFit out{GroupEstimates(coef.head(A), spd_with_ridge(s, 1e-14)), sigma2, n, per_arm,
                     xbar};
    return out;
}

GlsInfo gls_information(const std::vector<int>& count_by_visits, double rho, double sigma) {
    const int V = static_cast<int>(count_by_visits.size()) - 1;
    if (V < 1) throw dimension_mismatch("gls_information: need at least one visit");
    GlsInfo out;
    out.n_completers = count_by_visits[static_cast<size_t>(V)];

    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(V, V);
    for (int m = 1; m <= V; ++m) {
        const int cnt = count_by_visits[static_cast<size_t>(m)];
        if (cnt == 0) continue;
        const Eigen::MatrixXd cs = compound_symmetry(m, sigma, rho);
        const Eigen::MatrixXd csi = cs.llt().solve(Eigen::MatrixXd::Identity(m, m));
        info.topLeftCorner(m, m) += cnt * csi;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(V, V));
        out.final_variance = cov(V - 1, V - 1);
    } else {
        out.final_variance = std::numeric_limits<double>::infinity();
    }
    out.completer_variance = out.n_completers > 0
                                 ? sigma * sigma / out.n_completers
                                 : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace dfpower
