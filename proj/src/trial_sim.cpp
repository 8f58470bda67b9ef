#include "dfpower/trial_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

namespace dfpower {

const std::array<int, 9> kThresholdPercents = {10, 15, 20, 25, 30, 35, 40, 45, 50};
const std::array<const char*, 3> kMetricNames = {"pred_power", "cond_power_planned",
                                                 "cond_power_interim"};

int SimScenario::block_size() const {
    int b = 0;
    for (int i = 0; i < design.arms(); ++i) b += static_cast<int>(std::lround(design.alloc[i]));
    return b;
}

EffectProfile SimScenario::effect_profile() const {
    EffectProfile p;
    p.e0 = 0.0;
    p.ed50 = effect_ed50;
    p.t_max = visit_weeks.back();
    p.rate = onset_rate;
    const double dmax = design.doses[design.arms() - 1];
    const double eff = true_max_effect.value_or(0.0);
    // emax_tmax chosen so the top dose reaches the stated effect at t_max
    p.emax_tmax = eff * (dmax + effect_ed50) / dmax;
    return p;
}

std::string SimScenario::label() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "lpfv%g_rho%g_%s", lpfv_t, rho,
                  true_max_effect ? "emax" : "null");
    return buf;
}

std::vector<double> generate_recruitment(int n, double lpfv_t, RandomStream& rng) {
    std::vector<double> t(static_cast<size_t>(n));
    for (double& v : t) v = lpfv_t * std::sqrt(rng.uniform01());
    std::sort(t.begin(), t.end());
    return t;
}

TrialDataset generate_trial(const SimScenario& scenario, RandomStream& rng) {
    const DoseDesign& design = scenario.design;
    const int N = design.total_n();
    const int k = design.arms();
    const int V = static_cast<int>(scenario.visit_weeks.size());

    const std::vector<double> recruit = generate_recruitment(N, scenario.lpfv_t, rng);

    // Permuted-block randomization in recruitment order.
    const int B = scenario.block_size();
    std::vector<int> block_labels;
    block_labels.reserve(static_cast<size_t>(B));
    for (int a = 0; a < k; ++a) {
        const int reps = static_cast<int>(std::lround(design.alloc[a]));
        for (int r = 0; r < reps; ++r) block_labels.push_back(a);
    }
    std::vector<int> arm_of(static_cast<size_t>(N));
    std::vector<int> blk = block_labels;
    for (int i = 0; i < N; ++i) {
        const int pos = i % B;
        if (pos == 0) {
            blk = block_labels;
            for (int j = B - 1; j > 0; --j) {
                const int r = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(j + 1));
                std::swap(blk[static_cast<size_t>(j)], blk[static_cast<size_t>(r)]);
            }
        }
        arm_of[static_cast<size_t>(i)] = blk[static_cast<size_t>(pos)];
    }

    // Per-visit means under the true dose-response; all zero under the null.
    const EffectProfile profile = scenario.effect_profile();
    Eigen::MatrixXd visit_mean = Eigen::MatrixXd::Zero(k, V);
    if (scenario.true_max_effect) {
        for (int a = 0; a < k; ++a) {
            const double d = design.doses[a];
            const double frac = d / (d + scenario.effect_ed50);
            for (int v = 0; v < V; ++v) {
                visit_mean(a, v) = effect_at_time(profile, scenario.visit_weeks[static_cast<size_t>(v)]) * frac;
            }
        }
    }

    // Baseline + visits share one compound-symmetry error draw per patient.
    const SpdMatrix cs_cov(compound_symmetry(V + 1, scenario.sigma, scenario.rho));
    const Eigen::MatrixXd& L = cs_cov.chol();

    TrialDataset data;
    data.visit_weeks = scenario.visit_weeks;
    data.arms = k;
    data.patients.reserve(static_cast<size_t>(N));
    Eigen::VectorXd z(V + 1);
    for (int i = 0; i < N; ++i) {
        PatientRecord p;
        p.id = i + 1;
        p.arm = arm_of[static_cast<size_t>(i)];
        p.recruit_week = recruit[static_cast<size_t>(i)];
        for (int j = 0; j <= V; ++j) z[j] = rng.normal();
        const Eigen::VectorXd e = L * z;
        p.baseline = e[0];
        p.y.resize(static_cast<size_t>(V));
        p.observed.assign(static_cast<size_t>(V), 1);
        for (int v = 0; v < V; ++v) p.y[static_cast<size_t>(v)] = visit_mean(p.arm, v) + e[v + 1];
        data.patients.push_back(std::move(p));
    }
    return data;
}

double interim_cut_time(const TrialDataset& trial, double completer_frac) {
    const int N = static_cast<int>(trial.patients.size());
    const int need = static_cast<int>(std::ceil(completer_frac * N));
    if (need < 1 || need > N) {
        throw frac_unreachable("interim_snapshot: requested completer fraction not reachable");
    }
    std::vector<double> completion(static_cast<size_t>(N));
    const double last_week = trial.visit_weeks.back();
    for (int i = 0; i < N; ++i) {
        completion[static_cast<size_t>(i)] = trial.patients[static_cast<size_t>(i)].recruit_week + last_week;
    }
    std::nth_element(completion.begin(), completion.begin() + (need - 1), completion.end());
    return completion[static_cast<size_t>(need - 1)];
}

TrialDataset interim_snapshot(const TrialDataset& trial, double completer_frac) {
    const double tau = interim_cut_time(trial, completer_frac);
    TrialDataset out;
    out.visit_weeks = trial.visit_weeks;
    out.arms = trial.arms;
    for (const PatientRecord& p : trial.patients) {
        if (p.recruit_week > tau) continue;  // not yet recruited
        PatientRecord q = p;
        for (size_t v = 0; v < trial.visit_weeks.size(); ++v) {
            if (p.recruit_week + trial.visit_weeks[v] > tau) {
                q.observed[v] = 0;
                q.y[v] = 0.0;
            }
        }
        out.patients.push_back(std::move(q));
    }
    return out;
}

ScenarioContext make_scenario_context(const SimScenario& scenario) {
    if (scenario.catalog.empty()) {
        throw config_error("make_scenario_context: empty candidate catalog");
    }
    if (scenario.design.total_n() % scenario.block_size() != 0) {
        throw config_error("make_scenario_context: total sample size must be a multiple of the allocation block");
    }
    const Eigen::VectorXd d = scenario.design.inv_n() * (scenario.sigma * scenario.sigma);
    const SpdMatrix s_design = SpdMatrix::diagonal(d);
    ScenarioContext ctx;
    ctx.cs = build_contrast_set(scenario.catalog, scenario.design, s_design);
    ctx.corr = final_stat_correlation(ctx.cs, s_design);
    RandomStream crit_rng(scenario.base_seed, mix64(0x5eed0c41u));
    ctx.crit = critical_value(ctx.corr, scenario.alpha, crit_rng, scenario.qmc);
    return ctx;
}

namespace {

// Stream slots within one replication; generation uses the root stream.
constexpr std::uint64_t kSlotFinalCrit = 1;
constexpr std::uint64_t kSlotPower = 8;  // + 8*frac + 2*method + metric

InterimCell analyze_interim(const SimScenario& scenario, const ScenarioContext& ctx,
                            const TrialDataset& snap, Method method, double tau,
                            const RandomStream& rep_stream, std::uint64_t slot_base) {
    InterimCell cell;
    cell.tau = tau;
    cell.n_included = static_cast<int>(snap.patients.size());
    const int last = snap.visits() - 1;
    for (const PatientRecord& p : snap.patients) {
        if (p.observed[static_cast<size_t>(last)]) ++cell.n_completers;
    }
    try {
        Eigen::VectorXd mu;
        Eigen::MatrixXd s;
        double sigma2;
        if (method == Method::Longitudinal) {
            MmrmFit fit = fit_mmrm(snap);
            mu = fit.lsmeans_final.mu_hat;
            s = fit.lsmeans_final.S.mat();
            sigma2 = fit.resid_cov.mat()(fit.resid_cov.dim() - 1, fit.resid_cov.dim() - 1);
        } else {
            CompleterFit fit = fit_completers(snap);
            mu = fit.est.mu_hat;
            s = fit.est.S.mat();
            sigma2 = fit.sigma2;
        }
        cell.fit_ok = true;
        cell.sigma_hat = std::sqrt(sigma2);

        const Eigen::VectorXd d_final = scenario.design.inv_n() * sigma2;
        SpdMatrix s_full = SpdMatrix::diagonal(d_final);
        InterimState state = make_interim_state(GroupEstimates(mu, SpdMatrix(s)), std::move(s_full));
        cell.info_frac = state.info_fraction;

        RandomStream pp_rng = rep_stream.substream(slot_base + 0);
        RandomStream cpp_rng = rep_stream.substream(slot_base + 1);
        RandomStream cpi_rng = rep_stream.substream(slot_base + 2);
        cell.pred = predictive_power(state, ctx.cs, ctx.crit, pp_rng, scenario.qmc).value;
        const Eigen::VectorXd mu_planned = planned_mu_tilde(
            mu[0], scenario.planned_max_effect, scenario.catalog, scenario.design);
        cell.cond_planned =
            conditional_power(state, ctx.cs, mu_planned, ctx.crit, cpp_rng, scenario.qmc).value;
        cell.cond_interim =
            conditional_power(state, ctx.cs, mu, ctx.crit, cpi_rng, scenario.qmc).value;
        cell.power_ok = true;
    } catch (const numeric_error& e) {
        cell.error = e.what();
    }
    return cell;
}

}  // namespace

ReplicationRow run_replication(const SimScenario& scenario, const ScenarioContext& ctx,
                               int rep_index, bool final_only) {
    RandomStream rs(scenario.base_seed, static_cast<std::uint64_t>(rep_index) + 1);
    const TrialDataset trial = generate_trial(scenario, rs);

    ReplicationRow row;
    row.rep = rep_index;

    // Final analysis on the complete data.
    const CompleterFit final_fit = fit_completers(trial);
    TestStatVector ts = test_statistics(ctx.cs, final_fit.est);
    RandomStream crit_rng = rs.substream(kSlotFinalCrit);
    ts = mcp_decision(std::move(ts), scenario.alpha, crit_rng, scenario.qmc);
    row.final_tmax = ts.t_max();
    row.final_crit = ts.crit;
    row.final_rejected = ts.rejected;

    if (final_only) return row;

    row.interim.resize(scenario.interim_fracs.size());
    for (size_t fi = 0; fi < scenario.interim_fracs.size(); ++fi) {
        const double frac = scenario.interim_fracs[fi];
        const TrialDataset snap = interim_snapshot(trial, frac);
        const double tau = interim_cut_time(trial, frac);
        for (int m = 0; m < 2; ++m) {
            const std::uint64_t slot = kSlotPower + 8 * static_cast<std::uint64_t>(fi) + 4 * static_cast<std::uint64_t>(m);
            row.interim[fi][static_cast<size_t>(m)] =
                analyze_interim(scenario, ctx, snap, static_cast<Method>(m), tau, rs, slot);
        }
    }
    return row;
}

std::vector<ReplicationRow> run_scenario(const SimScenario& scenario, const ScenarioContext& ctx,
                                         int threads, bool final_only) {
    const int R = scenario.replications;
    std::vector<ReplicationRow> rows(static_cast<size_t>(R));
    if (threads < 1) threads = 1;
    threads = std::min(threads, R);
    if (threads == 1) {
        for (int r = 0; r < R; ++r) rows[static_cast<size_t>(r)] = run_replication(scenario, ctx, r, final_only);
        return rows;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex err_mutex;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= R || failed.load()) break;
                try {
                    rows[static_cast<size_t>(r)] = run_replication(scenario, ctx, r, final_only);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    failed = true;
                    error_msg = e.what();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (failed) throw numeric_error("run_scenario: replication failed: " + error_msg);
    return rows;
}

std::vector<double> calibrate_thresholds(std::vector<double> metric_values) {
    if (metric_values.size() < 2) {
        throw dimension_mismatch("calibrate_thresholds: need at least 2 metric values");
    }
    std::sort(metric_values.begin(), metric_values.end());
    const double n = static_cast<double>(metric_values.size());
    std::vector<double> out;
    out.reserve(kThresholdPercents.size());
    for (int pct : kThresholdPercents) {
        const double h = (n - 1.0) * (pct / 100.0);
        const size_t lo = static_cast<size_t>(std::floor(h));
        const size_t hi = std::min(lo + 1, metric_values.size() - 1);
        const double w = h - static_cast<double>(lo);
        out.push_back((1.0 - w) * metric_values[lo] + w * metric_values[hi]);
    }
    return out;
}

double metric_value(const InterimCell& cell, int metric) {
    switch (metric) {
        case 0: return cell.pred;
        case 1: return cell.cond_planned;
        default: return cell.cond_interim;
    }
}

std::vector<OperatingCell> operating_characteristics(
    const std::vector<ReplicationRow>& rows, const std::array<std::vector<double>, 3>& thresholds) {
    std::vector<OperatingCell> out;
    if (rows.empty()) return out;
    const size_t nfrac = rows.front().interim.size();
    for (size_t fi = 0; fi < nfrac; ++fi) {
        for (int m = 0; m < 2; ++m) {
            for (int metric = 0; metric < 3; ++metric) {
                for (size_t ti = 0; ti < thresholds[static_cast<size_t>(metric)].size(); ++ti) {
                    const double v = thresholds[static_cast<size_t>(metric)][ti];
                    int n_valid = 0, stopped = 0, lost = 0;
                    for (const ReplicationRow& row : rows) {
                        const InterimCell& cell = row.interim[fi][static_cast<size_t>(m)];
                        if (!cell.power_ok) continue;
                        ++n_valid;
                        const double p = metric_value(cell, metric);
                        if (p < v) {
                            ++stopped;
                            if (row.final_rejected) ++lost;
                        }
                    }
                    OperatingCell oc;
                    oc.frac_index = static_cast<int>(fi);
                    oc.method = static_cast<Method>(m);
                    oc.metric = metric;
                    oc.threshold_pct = kThresholdPercents[ti];
                    oc.threshold = v;
                    oc.stop_prob = n_valid > 0 ? static_cast<double>(stopped) / n_valid : 0.0;
                    oc.power_loss = n_valid > 0 ? static_cast<double>(lost) / n_valid : 0.0;
                    oc.n_valid = n_valid;
                    out.push_back(oc);
                }
            }
        }
    }
    return out;
}

double analytic_final_power(const SimScenario& proto, int blocks, const ContrastSet& cs,
                            double crit, RandomStream& rng) {
    const DoseDesign design = DoseDesign::with_blocks(proto.design.doses, proto.design.alloc, blocks);
    // Baseline-adjusted residual variance under compound symmetry.
    const double sig_eff2 = proto.sigma * proto.sigma * (1.0 - proto.rho * proto.rho);
    const EffectProfile profile = proto.effect_profile();
    Eigen::VectorXd mu(design.arms());
    for (int i = 0; i < design.arms(); ++i) {
        const double d = design.doses[i];
        mu[i] = effect_at_time(profile, proto.visit_weeks.back()) * d / (d + proto.effect_ed50);
    }
    const Eigen::VectorXd dvec = design.inv_n() * sig_eff2;
    const int M = cs.models();
    Eigen::VectorXd mean_t(M);
    for (int m = 0; m < M; ++m) {
        const double denom = std::sqrt(cs.C.row(m).cwiseAbs2().dot(dvec));
        mean_t[m] = cs.C.row(m).dot(mu) / denom;
    }
    const Eigen::MatrixXd corr = [&] {
        const SpdMatrix s = SpdMatrix::diagonal(dvec);
        return final_stat_correlation(cs, s);
    }();
    MvnSpec spec(mean_t, spd_with_ridge(corr));
    RandomStream local = rng.substream(static_cast<std::uint64_t>(blocks));
    const ProbEstimate below = equicoordinate_prob(spec, crit, local, QmcSettings{4096, 12, 25});
    return 1.0 - below.value;
}

int design_sample_size(const SimScenario& proto, double target_power, RandomStream& rng, int cap) {
    if (!proto.true_max_effect) {
        throw unachievable_sample_size("design_sample_size: no effect specified");
    }
    const int B = proto.block_size();
    const int cap_blocks = std::max(1, cap / B);

    // Contrasts and critical value are allocation-scale invariant: compute
    // once at a single block.
    const DoseDesign d1 = DoseDesign::with_blocks(proto.design.doses, proto.design.alloc, 1);
    const double sig_eff2 = proto.sigma * proto.sigma * (1.0 - proto.rho * proto.rho);
    const SpdMatrix s1 = SpdMatrix::diagonal(d1.inv_n() * sig_eff2);
    const ContrastSet cs = build_contrast_set(proto.catalog, d1, s1);
    RandomStream crit_rng = rng.substream(0xC417);
    const double crit =
        critical_value(final_stat_correlation(cs, s1), proto.alpha, crit_rng, QmcSettings{4096, 12, 25});

    if (analytic_final_power(proto, cap_blocks, cs, crit, rng) < target_power) {
        throw unachievable_sample_size("design_sample_size: target power not reachable below cap");
    }
    int lo = 1, hi = cap_blocks;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (analytic_final_power(proto, mid, cs, crit, rng) >= target_power) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo * B;
}

AppendixTemplate appendix_template(int scenario_id) {
    auto even = [](int n, double a, double b) {
        std::vector<double> v(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1.0);
        return v;
    };
    AppendixTemplate t;
    switch (scenario_id) {
        case 1:  // slow, steady recruitment
            t.recruit = even(21, 0.0, 0.8);
            t.followup = 0.2;
            break;
        case 2:  // fast recruitment relative to follow-up
            t.recruit = even(21, 0.0, 0.4);
            t.followup = 0.6;
            break;
        case 3: {  // early burst, pause, late wave
            t.recruit.assign(9, 0.0);
            const std::vector<double> late = even(12, 0.35, 0.7);
            t.recruit.insert(t.recruit.end(), late.begin(), late.end());
            t.followup = 0.3;
            break;
        }
        case 4: {  // plateau then burst
            t.recruit.assign(3, 0.0);
            const std::vector<double> late = even(18, 0.25, 0.7);
            t.recruit.insert(t.recruit.end(), late.begin(), late.end());
            t.followup = 0.3;
            break;
        }
        default:
            throw config_error("appendix_template: scenario id must be 1..4");
    }
    return t;
}

std::vector<AppendixPoint> appendix_illustration(int scenario_id, double rho,
                                                 const std::vector<double>& time_grid) {
    const AppendixTemplate tpl = appendix_template(scenario_id);
    const int V = 3;
    const double total = static_cast<double>(tpl.recruit.size());
    std::vector<AppendixPoint> out;
    out.reserve(time_grid.size());
    for (double tau : time_grid) {
        std::vector<int> counts(static_cast<size_t>(V + 1), 0);
        for (double r : tpl.recruit) {
            if (r > tau) continue;
            int m = 0;
            for (int v = 1; v <= V; ++v) {
                if (r + tpl.followup * v / V <= tau + 1e-12) m = v;
            }
            ++counts[static_cast<size_t>(m)];
        }
        const GlsInfo info = gls_information(counts, rho, 1.0);
        AppendixPoint pt;
        pt.time = tau;
        pt.completer_frac = info.n_completers / total;
        pt.longitudinal_frac =
            std::isfinite(info.final_variance) ? (1.0 / info.final_variance) / total : 0.0;
        out.push_back(pt);
    }
    return out;
}

}  // namespace dfpower
