#include "dfpower/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dfpower/csv.hpp"
#include "dfpower/interim.hpp"
#include "dfpower/longitudinal.hpp"

namespace dfpower {

namespace fs = std::filesystem;

namespace {

class ManifestWriter {
public:
    ManifestWriter(const CliOptions& opts, std::uint64_t seed)
        : opts_(opts), seed_(seed), start_(std::chrono::steady_clock::now()) {}

    void add(const std::string& filename) { files_.push_back(filename); }

    void write() const {
        nlohmann::json j;
        j["command"] = opts_.command;
        j["config"] = opts_.config_path.empty() ? "<defaults>" : opts_.config_path;
        j["seed"] = seed_;
        j["out_dir"] = opts_.out_dir;
        j["version"] = kToolVersion;
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        j["wall_clock_seconds"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        nlohmann::json files = nlohmann::json::array();
        for (const std::string& f : files_) {
            const fs::path p = fs::path(opts_.out_dir) / f;
            char sum[32];
            std::snprintf(sum, sizeof sum, "%016llx",
                          static_cast<unsigned long long>(fnv1a_file(p.string())));
            files.push_back({{"name", f},
                             {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                             {"fnv1a64", sum}});
        }
        j["files"] = files;
        std::ofstream out(fs::path(opts_.out_dir) / "manifest.json");
        out << j.dump(2) << "\n";
    }

private:
    CliOptions opts_;
    std::uint64_t seed_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> files_;
};

std::ofstream open_output(const CliOptions& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    std::ofstream out(fs::path(opts.out_dir) / name, std::ios::binary);
    if (!out) throw config_error("cannot open output file: " + name);
    return out;
}

int effective_threads(const RunConfig& cfg, const CliOptions& opts) {
    int t = opts.threads > 0 ? opts.threads : cfg.threads;
    if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, t);
}

std::string fmt_bool(bool b) { return b ? "1" : "0"; }

}  // namespace

RunConfig load_config(const CliOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{} : parse_config_file(opts.config_path);
    if (opts.config_path.empty()) {
        for (int i = 1; i <= 20; ++i) cfg.appendix_grid.push_back(0.05 * i);
        cfg.validate();
    }
    if (opts.seed) cfg.base_seed = *opts.seed;
    if (opts.reps) cfg.replications = *opts.reps;
    return cfg;
}

SimScenario build_scenario(const RunConfig& cfg, double lpfv, double rho, bool null_effect) {
    SimScenario s;
    s.lpfv_t = lpfv;
    s.rho = rho;
    s.sigma = cfg.sigma;
    s.true_max_effect = null_effect ? std::nullopt : std::optional<double>(cfg.max_effect);
    s.effect_ed50 = cfg.ed50;
    s.onset_rate = cfg.onset_rate;
    s.planned_max_effect = cfg.planned_max_effect;
    s.visit_weeks = cfg.visit_weeks;
    s.interim_fracs = cfg.completer_fracs;
    s.alpha = cfg.alpha;
    s.catalog = cfg.catalog();
    s.replications = cfg.replications;
    s.base_seed = cfg.base_seed;
    s.qmc = cfg.qmc;

    Eigen::VectorXd doses = Eigen::Map<const Eigen::VectorXd>(cfg.doses.data(),
                                                              static_cast<long>(cfg.doses.size()));
    Eigen::VectorXd alloc = Eigen::Map<const Eigen::VectorXd>(cfg.alloc.data(),
                                                              static_cast<long>(cfg.alloc.size()));
    s.design = DoseDesign::with_blocks(doses, alloc, 1);
    const int block = s.design.total_n();

    int n = cfg.n_total;
    if (n == 0) {
        // Size for the planned effect; the null cell reuses the same design.
        SimScenario proto = s;
        proto.true_max_effect = cfg.max_effect;
        RandomStream rng(cfg.base_seed, mix64(0xD351Fu));
        n = design_sample_size(proto, cfg.target_power, rng);
    }
    if (n % block != 0) {
        throw config_error("design.n_total must be a multiple of the allocation block (" +
                           std::to_string(block) + ")");
    }
    s.design = DoseDesign::with_blocks(s.design.doses, s.design.alloc, n / block);
    return s;
}

std::vector<SimRowRecord> flatten_rows(const SimScenario& scenario,
                                       const std::vector<ReplicationRow>& rows) {
    std::vector<SimRowRecord> out;
    for (const ReplicationRow& row : rows) {
        for (size_t fi = 0; fi < row.interim.size(); ++fi) {
            for (int m = 0; m < 2; ++m) {
                const InterimCell& cell = row.interim[fi][static_cast<size_t>(m)];
                SimRowRecord r;
                r.scenario = scenario.label();
                r.lpfv = scenario.lpfv_t;
                r.rho = scenario.rho;
                r.effect = scenario.true_max_effect ? "emax" : "null";
                r.n_total = scenario.design.total_n();
                r.rep = row.rep;
                r.frac = scenario.interim_fracs[fi];
                r.method = m == 0 ? "longitudinal" : "completer";
                r.tau = cell.tau;
                r.n_included = cell.n_included;
                r.n_completers = cell.n_completers;
                r.fit_ok = cell.fit_ok;
                r.power_ok = cell.power_ok;
                r.info_frac = cell.info_frac;
                r.sigma_hat = cell.sigma_hat;
                r.pred = cell.pred;
                r.cond_planned = cell.cond_planned;
                r.cond_interim = cell.cond_interim;
                r.final_tmax = row.final_tmax;
                r.final_crit = row.final_crit;
                r.final_rejected = row.final_rejected;
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

void write_rows_csv(const std::vector<SimRowRecord>& rows, std::ostream& out) {
    out << "scenario,lpfv_t,rho,effect,n_total,rep,frac,method,tau,n_included,n_completers,"
           "fit_ok,power_ok,info_frac,sigma_hat,pred_power,cond_power_planned,"
           "cond_power_interim,final_tmax,final_crit,final_rejected\n";
    for (const SimRowRecord& r : rows) {
        out << r.scenario << "," << format_double(r.lpfv) << "," << format_double(r.rho) << ","
            << r.effect << "," << r.n_total << "," << r.rep << "," << format_double(r.frac) << ","
            << r.method << "," << format_double(r.tau) << "," << r.n_included << ","
            << r.n_completers << "," << fmt_bool(r.fit_ok) << "," << fmt_bool(r.power_ok) << ","
            << format_double(r.info_frac) << "," << format_double(r.sigma_hat) << ","
            << format_double(r.pred) << "," << format_double(r.cond_planned) << ","
            << format_double(r.cond_interim) << "," << format_double(r.final_tmax) << ","
            << format_double(r.final_crit) << "," << fmt_bool(r.final_rejected) << "\n";
    }
}

std::vector<SimRowRecord> parse_rows_csv(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    auto col = [&](const char* name) {
        const int c = t.column(name);
        if (c < 0) throw config_error(std::string("rows CSV: missing column ") + name);
        return c;
    };
    const int c_scenario = col("scenario"), c_lpfv = col("lpfv_t"), c_rho = col("rho"),
              c_effect = col("effect"), c_ntotal = col("n_total"), c_rep = col("rep"),
              c_frac = col("frac"), c_method = col("method"), c_tau = col("tau"),
              c_ninc = col("n_included"), c_ncomp = col("n_completers"), c_fit = col("fit_ok"),
              c_pow = col("power_ok"), c_if = col("info_frac"), c_sig = col("sigma_hat"),
              c_pred = col("pred_power"), c_cp = col("cond_power_planned"),
              c_ci = col("cond_power_interim"), c_tmax = col("final_tmax"),
              c_crit = col("final_crit"), c_rej = col("final_rejected");
    auto num = [](const std::string& s) {
        return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    std::vector<SimRowRecord> out;
    for (const auto& row : t.rows) {
        SimRowRecord r;
        r.scenario = row[static_cast<size_t>(c_scenario)];
        r.lpfv = num(row[static_cast<size_t>(c_lpfv)]);
        r.rho = num(row[static_cast<size_t>(c_rho)]);
        r.effect = row[static_cast<size_t>(c_effect)];
        r.n_total = std::stoi(row[static_cast<size_t>(c_ntotal)]);
        r.rep = std::stoi(row[static_cast<size_t>(c_rep)]);
        r.frac = num(row[static_cast<size_t>(c_frac)]);
        r.method = row[static_cast<size_t>(c_method)];
        r.tau = num(row[static_cast<size_t>(c_tau)]);
        r.n_included = std::stoi(row[static_cast<size_t>(c_ninc)]);
        r.n_completers = std::stoi(row[static_cast<size_t>(c_ncomp)]);
        r.fit_ok = row[static_cast<size_t>(c_fit)] == "1";
        r.power_ok = row[static_cast<size_t>(c_pow)] == "1";
        r.info_frac = num(row[static_cast<size_t>(c_if)]);
        r.sigma_hat = num(row[static_cast<size_t>(c_sig)]);
        r.pred = num(row[static_cast<size_t>(c_pred)]);
        r.cond_planned = num(row[static_cast<size_t>(c_cp)]);
        r.cond_interim = num(row[static_cast<size_t>(c_ci)]);
        r.final_tmax = num(row[static_cast<size_t>(c_tmax)]);
        r.final_crit = num(row[static_cast<size_t>(c_crit)]);
        r.final_rejected = row[static_cast<size_t>(c_rej)] == "1";
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<ReplicationRow>>> assemble_replications(
    const std::vector<SimRowRecord>& records) {
    std::vector<std::pair<std::string, std::vector<ReplicationRow>>> out;
    std::map<std::string, size_t> index;
    std::map<std::string, std::vector<double>> fracs;
    for (const SimRowRecord& r : records) {
        if (index.count(r.scenario) == 0) {
            index[r.scenario] = out.size();
            out.emplace_back(r.scenario, std::vector<ReplicationRow>{});
        }
        auto& fr = fracs[r.scenario];
        if (std::find(fr.begin(), fr.end(), r.frac) == fr.end()) fr.push_back(r.frac);
    }
    for (auto& [name, fr] : fracs) std::sort(fr.begin(), fr.end());

    std::map<std::string, std::map<int, size_t>> rep_index;
    for (const SimRowRecord& r : records) {
        auto& rows = out[index[r.scenario]].second;
        auto& reps = rep_index[r.scenario];
        if (reps.count(r.rep) == 0) {
            reps[r.rep] = rows.size();
            ReplicationRow row;
            row.rep = r.rep;
            row.final_tmax = r.final_tmax;
            row.final_crit = r.final_crit;
            row.final_rejected = r.final_rejected;
            row.interim.resize(fracs[r.scenario].size());
            rows.push_back(std::move(row));
        }
        ReplicationRow& row = rows[reps[r.rep]];
        const auto& fr = fracs[r.scenario];
        const size_t fi = static_cast<size_t>(
            std::find(fr.begin(), fr.end(), r.frac) - fr.begin());
        InterimCell cell;
        cell.fit_ok = r.fit_ok;
        cell.power_ok = r.power_ok;
        cell.tau = r.tau;
        cell.n_included = r.n_included;
        cell.n_completers = r.n_completers;
        cell.sigma_hat = r.sigma_hat;
        cell.info_frac = r.info_frac;
        cell.pred = r.pred;
        cell.cond_planned = r.cond_planned;
        cell.cond_interim = r.cond_interim;
        row.interim[fi][r.method == "longitudinal" ? 0 : 1] = std::move(cell);
    }
    return out;
}

std::array<std::vector<double>, 3> calibration_pool(const std::vector<SimRowRecord>& records) {
    double best_frac = std::numeric_limits<double>::infinity();
    for (const SimRowRecord& r : records) {
        if (std::fabs(r.frac - 0.3) < std::fabs(best_frac - 0.3)) best_frac = r.frac;
    }
    std::array<std::vector<double>, 3> pool;
    for (const SimRowRecord& r : records) {
        if (r.frac != best_frac || r.method != "longitudinal" || !r.power_ok) continue;
        pool[0].push_back(r.pred);
        pool[1].push_back(r.cond_planned);
        pool[2].push_back(r.cond_interim);
    }
    return pool;
}

namespace {

void write_thresholds_csv(const std::array<std::vector<double>, 3>& thresholds,
                          std::ostream& out) {
    out << "metric,threshold_pct,threshold\n";
    for (int metric = 0; metric < 3; ++metric) {
        for (size_t i = 0; i < thresholds[static_cast<size_t>(metric)].size(); ++i) {
            out << kMetricNames[static_cast<size_t>(metric)] << "," << kThresholdPercents[i] << ","
                << format_double(thresholds[static_cast<size_t>(metric)][i]) << "\n";
        }
    }
}

struct ScenarioBundle {
    SimScenario scenario;
    std::vector<ReplicationRow> rows;
};

void write_summary_csv(const std::vector<ScenarioBundle>& bundles,
                       const std::array<std::vector<double>, 3>& thresholds, std::ostream& out) {
    out << "scenario,lpfv_t,rho,effect,frac,method,metric,threshold_pct,threshold,"
           "stop_prob,power_loss,n_valid\n";
    for (const ScenarioBundle& b : bundles) {
        const auto cells = operating_characteristics(b.rows, thresholds);
        for (const OperatingCell& c : cells) {
            out << b.scenario.label() << "," << format_double(b.scenario.lpfv_t) << ","
                << format_double(b.scenario.rho) << ","
                << (b.scenario.true_max_effect ? "emax" : "null") << ","
                << format_double(b.scenario.interim_fracs[static_cast<size_t>(c.frac_index)]) << ","
                << (c.method == Method::Longitudinal ? "longitudinal" : "completer") << ","
                << kMetricNames[static_cast<size_t>(c.metric)] << "," << c.threshold_pct << ","
                << format_double(c.threshold) << "," << format_double(c.stop_prob) << ","
                << format_double(c.power_loss) << "," << c.n_valid << "\n";
        }
    }
}

void write_info_frac_csv(const std::vector<ScenarioBundle>& bundles, std::ostream& out) {
    out << "scenario,lpfv_t,rho,effect,frac,mean_info_frac_longitudinal,"
           "mean_info_frac_completer,mean_gain,n_pairs\n";
    for (const ScenarioBundle& b : bundles) {
        for (size_t fi = 0; fi < b.scenario.interim_fracs.size(); ++fi) {
            double sl = 0, sc = 0, gain = 0;
            int n = 0;
            for (const ReplicationRow& row : b.rows) {
                const InterimCell& lon = row.interim[fi][0];
                const InterimCell& com = row.interim[fi][1];
                if (!lon.fit_ok || !com.fit_ok) continue;
                if (!std::isfinite(lon.info_frac) || !std::isfinite(com.info_frac)) continue;
                sl += lon.info_frac;
                sc += com.info_frac;
                gain += lon.info_frac - com.info_frac;
                ++n;
            }
            out << b.scenario.label() << "," << format_double(b.scenario.lpfv_t) << ","
                << format_double(b.scenario.rho) << ","
                << (b.scenario.true_max_effect ? "emax" : "null") << ","
                << format_double(b.scenario.interim_fracs[fi]) << ","
                << format_double(n ? sl / n : std::numeric_limits<double>::quiet_NaN()) << ","
                << format_double(n ? sc / n : std::numeric_limits<double>::quiet_NaN()) << ","
                << format_double(n ? gain / n : std::numeric_limits<double>::quiet_NaN()) << ","
                << n << "\n";
        }
    }
}

int cmd_print_config(const CliOptions& opts) {
    const RunConfig cfg = load_config(opts);
    print_config(cfg, std::cout);
    return 0;
}

int cmd_contrasts(const CliOptions& opts, bool with_matrix) {
    const RunConfig cfg = load_config(opts);
    const SimScenario scenario = build_scenario(cfg, cfg.lpfv_t, cfg.rho, cfg.effect_kind == "null");
    const ScenarioContext ctx = make_scenario_context(scenario);
    ManifestWriter manifest(opts, cfg.base_seed);
    if (with_matrix) {
        std::ofstream out = open_output(opts, "contrasts.csv");
        write_contrasts_csv(ctx.cs, scenario.design, out);
        manifest.add("contrasts.csv");
    }
    {
        std::ofstream out = open_output(opts, "critval.csv");
        out << "alpha,models,crit\n";
        out << format_double(scenario.alpha) << "," << ctx.cs.models() << ","
            << format_double(ctx.crit) << "\n";
        manifest.add("critval.csv");
    }
    std::cout << "models=" << ctx.cs.models() << " alpha=" << scenario.alpha
              << " crit=" << format_double(ctx.crit) << "\n";
    manifest.write();
    return 0;
}

int cmd_power(const CliOptions& opts) {
    const RunConfig cfg = load_config(opts);
    if (opts.data_path.empty()) throw config_error("power: --data CSV required");
    const TrialDataset full = read_trial_csv_file(opts.data_path);
    if (full.patients.empty()) throw config_error("power: dataset is empty");

    // Planned per-arm sizes: config n_total when given, otherwise the
    // dataset's own arm counts (dataset treated as fully recruited).
    SimScenario scenario = build_scenario(cfg, cfg.lpfv_t, cfg.rho, cfg.effect_kind == "null");
    if (cfg.n_total == 0) {
        std::vector<int> counts(static_cast<size_t>(full.arms), 0);
        for (const PatientRecord& p : full.patients) ++counts[static_cast<size_t>(p.arm)];
        DoseDesign d = scenario.design;
        if (full.arms != d.arms()) {
            throw config_error("power: dataset arm count does not match design.doses");
        }
        for (int v : counts) {
            if (v < 1) throw config_error("power: dataset has an empty arm");
        }
        d.n = counts;
        scenario.design = d;
        scenario.qmc = cfg.qmc;
    }
    if (full.visits() != static_cast<int>(cfg.visit_weeks.size())) {
        throw config_error("power: dataset visit schedule does not match outcome.visit_weeks");
    }

    const Eigen::VectorXd d_design =
        scenario.design.inv_n() * (scenario.sigma * scenario.sigma);
    const SpdMatrix s_design = SpdMatrix::diagonal(d_design);
    const ContrastSet cs = build_contrast_set(scenario.catalog, scenario.design, s_design);
    RandomStream crit_rng(cfg.base_seed, mix64(0x5eed0c41u));
    const double crit =
        critical_value(final_stat_correlation(cs, s_design), cfg.alpha, crit_rng, cfg.qmc);

    ManifestWriter manifest(opts, cfg.base_seed);
    std::ofstream out = open_output(opts, "power.csv");
    out << "time,method,info_frac_longitudinal,info_frac_completer,pred_power,"
           "cond_power_planned,cond_power_interim,status\n";

    int ok_rows = 0, total_rows = 0;
    for (size_t fi = 0; fi < cfg.completer_fracs.size(); ++fi) {
        const double frac = cfg.completer_fracs[fi];
        std::string cut_error;
        TrialDataset snap;
        double tau = std::numeric_limits<double>::quiet_NaN();
        try {
            snap = interim_snapshot(full, frac);
            tau = interim_cut_time(full, frac);
        } catch (const numeric_error& e) {
            cut_error = e.what();
        }

        std::array<double, 2> info{std::numeric_limits<double>::quiet_NaN(),
                                   std::numeric_limits<double>::quiet_NaN()};
        std::array<InterimCell, 2> cells;
        if (cut_error.empty()) {
            for (int m = 0; m < 2; ++m) {
                InterimCell cell;
                cell.tau = tau;
                try {
                    Eigen::VectorXd mu;
                    Eigen::MatrixXd s;
                    double sigma2;
                    if (m == 0) {
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
                    SpdMatrix s_full = SpdMatrix::diagonal(scenario.design.inv_n() * sigma2);
                    InterimState state =
                        make_interim_state(GroupEstimates(mu, SpdMatrix(s)), std::move(s_full));
                    cell.info_frac = state.info_fraction;
                    info[static_cast<size_t>(m)] = state.info_fraction;
                    RandomStream rng(cfg.base_seed, mix64(0x90AEB + 8 * fi + static_cast<size_t>(m)));
                    cell.pred = predictive_power(state, cs, crit, rng, cfg.qmc).value;
                    const Eigen::VectorXd mu_planned = planned_mu_tilde(
                        mu[0], cfg.planned_max_effect, scenario.catalog, scenario.design);
                    cell.cond_planned =
                        conditional_power(state, cs, mu_planned, crit, rng, cfg.qmc).value;
                    cell.cond_interim = conditional_power(state, cs, mu, crit, rng, cfg.qmc).value;
                    cell.power_ok = true;
                } catch (const numeric_error& e) {
                    cell.error = e.what();
                }
                cells[static_cast<size_t>(m)] = std::move(cell);
            }
        }
        for (int m = 0; m < 2; ++m) {
            const InterimCell& cell = cells[static_cast<size_t>(m)];
            ++total_rows;
            std::string status = !cut_error.empty() ? cut_error : (cell.power_ok ? "ok" : cell.error);
            std::replace(status.begin(), status.end(), ',', ';');
            if (cell.power_ok) ++ok_rows;
            out << format_double(frac) << "," << (m == 0 ? "longitudinal" : "completer") << ","
                << format_double(info[0]) << "," << format_double(info[1]) << ","
                << format_double(cell.pred) << "," << format_double(cell.cond_planned) << ","
                << format_double(cell.cond_interim) << "," << status << "\n";
        }
    }
    out.close();
    manifest.add("power.csv");
    manifest.write();
    if (ok_rows == 0 && total_rows > 0) {
        std::cerr << "power: all analysis rows failed\n";
        return 3;
    }
    return 0;
}

int cmd_simulate(const CliOptions& opts) {
    const RunConfig cfg = load_config(opts);
    const int threads = effective_threads(cfg, opts);
    ManifestWriter manifest(opts, cfg.base_seed);

    std::vector<ScenarioBundle> bundles;
    std::vector<SimRowRecord> all_records;
    for (double lpfv : cfg.grid_lpfv) {
        for (double rho : cfg.grid_rho) {
            for (const std::string& eff : cfg.grid_effect) {
                SimScenario scenario = build_scenario(cfg, lpfv, rho, eff == "null");
                const ScenarioContext ctx = make_scenario_context(scenario);
                std::cerr << "simulate: " << scenario.label() << " N=" << scenario.design.total_n()
                          << " R=" << scenario.replications << "\n";
                std::vector<ReplicationRow> rows = run_scenario(scenario, ctx, threads);
                std::vector<SimRowRecord> recs = flatten_rows(scenario, rows);
                all_records.insert(all_records.end(), recs.begin(), recs.end());
                bundles.push_back(ScenarioBundle{std::move(scenario), std::move(rows)});
            }
        }
    }

    {
        std::ofstream out = open_output(opts, "rows.csv");
        write_rows_csv(all_records, out);
        manifest.add("rows.csv");
    }

    const auto pool = calibration_pool(all_records);
    std::array<std::vector<double>, 3> thresholds;
    for (int metric = 0; metric < 3; ++metric) {
        thresholds[static_cast<size_t>(metric)] = calibrate_thresholds(pool[static_cast<size_t>(metric)]);
    }
    {
        std::ofstream out = open_output(opts, "thresholds.csv");
        write_thresholds_csv(thresholds, out);
        manifest.add("thresholds.csv");
    }
    {
        std::ofstream out = open_output(opts, "summary.csv");
        write_summary_csv(bundles, thresholds, out);
        manifest.add("summary.csv");
    }
    {
        std::ofstream out = open_output(opts, "info_frac.csv");
        write_info_frac_csv(bundles, out);
        manifest.add("info_frac.csv");
    }
    manifest.write();
    return 0;
}

int cmd_calibrate(const CliOptions& opts) {
    if (opts.rows_path.empty()) throw config_error("calibrate: --rows rows.csv required");
    const std::vector<SimRowRecord> records = parse_rows_csv(opts.rows_path);
    if (records.empty()) throw config_error("calibrate: no rows");
    const auto pool = calibration_pool(records);
    std::array<std::vector<double>, 3> thresholds;
    for (int metric = 0; metric < 3; ++metric) {
        thresholds[static_cast<size_t>(metric)] = calibrate_thresholds(pool[static_cast<size_t>(metric)]);
    }
    ManifestWriter manifest(opts, 0);
    std::ofstream out = open_output(opts, "thresholds.csv");
    write_thresholds_csv(thresholds, out);
    out.close();
    manifest.add("thresholds.csv");
    manifest.write();
    return 0;
}

int cmd_appendix(const CliOptions& opts) {
    const RunConfig cfg = load_config(opts);
    ManifestWriter manifest(opts, cfg.base_seed);
    for (int sc = 1; sc <= 4; ++sc) {
        const std::string name = "appendix_scenario" + std::to_string(sc) + ".csv";
        std::ofstream out = open_output(opts, name);
        out << "time,rho,info_frac_completer,info_frac_longitudinal\n";
        for (double rho : cfg.appendix_rhos) {
            for (const AppendixPoint& pt : appendix_illustration(sc, rho, cfg.appendix_grid)) {
                out << format_double(pt.time) << "," << format_double(rho) << ","
                    << format_double(pt.completer_frac) << ","
                    << format_double(pt.longitudinal_frac) << "\n";
            }
        }
        out.close();
        manifest.add(name);
    }
    manifest.write();
    return 0;
}

}  // namespace

int run_command(const CliOptions& opts) {
    try {
        if (opts.command == "print-config") return cmd_print_config(opts);
        if (opts.command == "contrasts") return cmd_contrasts(opts, true);
        if (opts.command == "critval") return cmd_contrasts(opts, false);
        if (opts.command == "power") return cmd_power(opts);
        if (opts.command == "simulate") return cmd_simulate(opts);
        if (opts.command == "calibrate") return cmd_calibrate(opts);
        if (opts.command == "appendix") return cmd_appendix(opts);
        throw config_error("unknown command: " + opts.command);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace dfpower
