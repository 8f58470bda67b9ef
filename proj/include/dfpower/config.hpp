#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dfpower/dose_models.hpp"
#include "dfpower/mvn.hpp"

namespace dfpower {

// Flat sectioned key=value configuration. Unknown sections or keys are
// rejected with line diagnostics; every field has a default so an empty file
// is a valid configuration.
struct RunConfig {
    // [design]
    std::vector<double> doses = {0, 0.5, 1, 2, 4, 8};
    std::vector<double> alloc = {2, 1, 1, 1, 2, 2};
    int n_total = 0;  // 0 = size the trial from target_power
    double target_power = 0.8;

    // [effect]
    std::string effect_kind = "emax";  // "emax" | "null"
    double max_effect = 0.12;
    double ed50 = 1.0;
    double onset_rate = 0.5;
    double planned_max_effect = 0.12;

    // [outcome]
    double sigma = 0.56;
    double rho = 0.9;
    std::vector<double> visit_weeks = {2, 4, 8, 12};

    // [recruitment]
    double lpfv_t = 50.0;

    // [interim]
    std::vector<double> completer_fracs = {0.3, 0.5, 0.7};

    // [test]
    double alpha = 0.025;

    // [candidates]
    std::vector<double> emax = {0.25, 1, 2, 4};
    std::vector<std::pair<double, double>> sigemax = {{0.5, 3}, {1, 3}, {2, 4}, {4, 5}};
    std::vector<double> quadratic_peak = {6};

    // [simulation]
    int replications = 500;
    std::uint64_t base_seed = 20240101;
    std::vector<double> grid_lpfv = {50, 100};
    std::vector<double> grid_rho = {0.6, 0.9};
    std::vector<std::string> grid_effect = {"null", "emax"};
    int threads = 0;  // 0 = hardware concurrency

    // [mvn]
    QmcSettings qmc{4096, 12, 25};

    // [appendix]
    std::vector<double> appendix_rhos = {0.6, 0.9};
    std::vector<double> appendix_grid;  // default 0.05..1.00 step 0.05

    std::vector<CandidateShape> catalog() const;
    void validate() const;
};

RunConfig parse_config(std::istream& in, const std::string& source_name = "<config>");
RunConfig parse_config_file(const std::string& path);

// Canonical render of a configuration (used by print-config).
void print_config(const RunConfig& cfg, std::ostream& out);

}  // namespace dfpower
