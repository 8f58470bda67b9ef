#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfpower/config.hpp"
#include "dfpower/trial_sim.hpp"

namespace dfpower {

inline constexpr const char* kToolVersion = "0.1.0";

struct CliOptions {
    std::string command;
    std::string config_path;  // empty = built-in defaults
    std::string data_path;    // power
    std::string rows_path;    // calibrate
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    int threads = 0;
    std::string out_dir = ".";
};

// Dispatch; returns the process exit code (0 ok, 2 config error, 3 numerical
// failure).
int run_command(const CliOptions& opts);

// --- pieces exposed for tests ---

RunConfig load_config(const CliOptions& opts);

// Scenario for one grid cell. n_total == 0 sizes the design for the
// alternative effect at the configured target power (same N for the null
// cell of the same rho).
SimScenario build_scenario(const RunConfig& cfg, double lpfv, double rho, bool null_effect);

// Flat record mirroring one rows.csv line.
struct SimRowRecord {
    std::string scenario;
    double lpfv = 0.0;
    double rho = 0.0;
    std::string effect;
    int n_total = 0;
    int rep = 0;
    double frac = 0.0;
    std::string method;  // "longitudinal" | "completer"
    double tau = 0.0;
    int n_included = 0;
    int n_completers = 0;
    bool fit_ok = false;
    bool power_ok = false;
    double info_frac = std::numeric_limits<double>::quiet_NaN();
    double sigma_hat = std::numeric_limits<double>::quiet_NaN();
    double pred = std::numeric_limits<double>::quiet_NaN();
    double cond_planned = std::numeric_limits<double>::quiet_NaN();
    double cond_interim = std::numeric_limits<double>::quiet_NaN();
    double final_tmax = 0.0;
    double final_crit = 0.0;
    bool final_rejected = false;
};

std::vector<SimRowRecord> flatten_rows(const SimScenario& scenario,
                                       const std::vector<ReplicationRow>& rows);
void write_rows_csv(const std::vector<SimRowRecord>& rows, std::ostream& out);
std::vector<SimRowRecord> parse_rows_csv(const std::string& path);

// Reassemble per-scenario replication rows from flat records (order of
// scenarios follows first appearance).
std::vector<std::pair<std::string, std::vector<ReplicationRow>>> assemble_replications(
    const std::vector<SimRowRecord>& records);

// Calibration pool: longitudinal metric values at the interim fraction
// closest to 0.3, across all scenarios.
std::array<std::vector<double>, 3> calibration_pool(const std::vector<SimRowRecord>& records);

}  // namespace dfpower
