#include "dfpower/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "dfpower/csv.hpp"

namespace dfpower {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_num(const std::string& s, const std::string& where) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw config_error(where + ": not a number: '" + s + "'");
    }
}

std::vector<double> parse_num_list(const std::string& s, const std::string& where) {
    std::vector<double> out;
    for (const std::string& item : split_list(s)) out.push_back(parse_num(item, where));
    if (out.empty()) throw config_error(where + ": empty list");
    return out;
}

std::vector<std::pair<double, double>> parse_pair_list(const std::string& s,
                                                       const std::string& where) {
    std::vector<std::pair<double, double>> out;
    for (const std::string& item : split_list(s)) {
        const size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw config_error(where + ": expected ed50:hill pairs, got '" + item + "'");
        }
        out.emplace_back(parse_num(trim(item.substr(0, colon)), where),
                         parse_num(trim(item.substr(colon + 1)), where));
    }
    return out;
}

}  // namespace

std::vector<CandidateShape> RunConfig::catalog() const {
    std::vector<CandidateShape> shapes;
    for (double e : emax) shapes.push_back(CandidateShape::emax(e));
    for (const auto& [e, h] : sigemax) shapes.push_back(CandidateShape::sig_emax(e, h));
    for (double p : quadratic_peak) shapes.push_back(CandidateShape::quadratic_peak_at(p));
    return shapes;
}

void RunConfig::validate() const {
    if (doses.size() < 2 || doses.front() != 0.0) {
        throw config_error("design.doses: need placebo (0) plus at least one dose");
    }
    for (size_t i = 1; i < doses.size(); ++i) {
        if (!(doses[i] > doses[i - 1])) throw config_error("design.doses: must be strictly increasing");
    }
    if (alloc.size() != doses.size()) throw config_error("design.alloc: length must match doses");
    for (double a : alloc) {
        if (!(a > 0) || a != std::floor(a)) {
            throw config_error("design.alloc: weights must be positive integers");
        }
    }
    if (n_total < 0) throw config_error("design.n_total: must be >= 0");
    if (!(target_power > 0 && target_power < 1)) throw config_error("design.target_power: in (0,1)");
    if (effect_kind != "emax" && effect_kind != "null") {
        throw config_error("effect.kind: must be 'emax' or 'null'");
    }
    if (!(ed50 > 0)) throw config_error("effect.ed50: must be positive");
    if (!(sigma > 0)) throw config_error("outcome.sigma: must be positive");
    const double v = static_cast<double>(visit_weeks.size()) + 1.0;
    if (!(rho > -1.0 / (v - 1.0) && rho < 1.0)) {
        throw config_error("outcome.rho: outside the compound-symmetry range");
    }
    for (double r : grid_rho) {
        if (!(r > -1.0 / (v - 1.0) && r < 1.0)) {
            throw config_error("simulation.grid_rho: outside the compound-symmetry range");
        }
    }
    if (visit_weeks.empty()) throw config_error("outcome.visit_weeks: empty");
    for (size_t i = 1; i < visit_weeks.size(); ++i) {
        if (!(visit_weeks[i] > visit_weeks[i - 1])) {
            throw config_error("outcome.visit_weeks: must be strictly increasing");
        }
    }
    if (!(visit_weeks.front() > 0)) throw config_error("outcome.visit_weeks: must be positive");
    if (!(lpfv_t > 0)) throw config_error("recruitment.lpfv_t: must be positive");
    for (double f : completer_fracs) {
        if (!(f > 0 && f < 1)) throw config_error("interim.completer_fracs: each in (0,1)");
    }
    if (!(alpha > 0 && alpha < 0.5)) throw config_error("test.alpha: in (0, 0.5)");
    for (double e : emax) {
        if (!(e > 0)) throw config_error("candidates.emax: ed50 must be positive");
    }
    for (const auto& [e, h] : sigemax) {
        if (!(e > 0) || !(h > 0)) throw config_error("candidates.sigemax: ed50 and hill must be positive");
    }
    for (double p : quadratic_peak) {
        if (!(p > 0 && p < doses.back())) {
            throw config_error("candidates.quadratic_peak: peak must be an interior dose");
        }
    }
    if (catalog().empty()) throw config_error("candidates: catalog must not be empty");
    if (replications < 1) throw config_error("simulation.replications: must be >= 1");
    if (threads < 0) throw config_error("simulation.threads: must be >= 0");
    for (const std::string& e : grid_effect) {
        if (e != "emax" && e != "null") throw config_error("simulation.grid_effect: entries must be 'emax' or 'null'");
    }
    if (qmc.lattice_points < 1 || qmc.randomizations < 2) {
        throw config_error("mvn: lattice_points >= 1 and randomizations >= 2 required");
    }
    if (qmc.max_dim < 1 || qmc.max_dim > 25) throw config_error("mvn.max_dim: in 1..25");
    for (double t : appendix_grid) {
        if (!(t > 0 && t <= 1)) throw config_error("appendix.time_grid: entries in (0,1]");
    }
}

RunConfig parse_config(std::istream& in, const std::string& source_name) {
    RunConfig cfg;
    cfg.appendix_grid.clear();
    for (int i = 1; i <= 20; ++i) cfg.appendix_grid.push_back(0.05 * i);

    using Setter = std::function<void(const std::string&, const std::string&)>;
    std::map<std::string, Setter> schema;
    auto num = [](double& slot) {
        return [&slot](const std::string& v, const std::string& w) { slot = parse_num(v, w); };
    };
    auto int_num = [](int& slot) {
        return [&slot](const std::string& v, const std::string& w) {
            const double d = parse_num(v, w);
            if (d != std::floor(d)) throw config_error(w + ": expected an integer");
            slot = static_cast<int>(d);
        };
    };
    auto num_list = [](std::vector<double>& slot) {
        return [&slot](const std::string& v, const std::string& w) { slot = parse_num_list(v, w); };
    };

    schema["design.doses"] = num_list(cfg.doses);
    schema["design.alloc"] = num_list(cfg.alloc);
    schema["design.n_total"] = int_num(cfg.n_total);
    schema["design.target_power"] = num(cfg.target_power);
    schema["effect.kind"] = [&](const std::string& v, const std::string&) { cfg.effect_kind = v; };
    schema["effect.max_effect"] = num(cfg.max_effect);
    schema["effect.ed50"] = num(cfg.ed50);
    schema["effect.onset_rate"] = num(cfg.onset_rate);
    schema["effect.planned_max_effect"] = num(cfg.planned_max_effect);
    schema["outcome.sigma"] = num(cfg.sigma);
    schema["outcome.rho"] = num(cfg.rho);
    schema["outcome.visit_weeks"] = num_list(cfg.visit_weeks);
    schema["recruitment.lpfv_t"] = num(cfg.lpfv_t);
    schema["interim.completer_fracs"] = num_list(cfg.completer_fracs);
    schema["test.alpha"] = num(cfg.alpha);
    schema["candidates.emax"] = num_list(cfg.emax);
    schema["candidates.sigemax"] = [&](const std::string& v, const std::string& w) {
        cfg.sigemax = parse_pair_list(v, w);
    };
    schema["candidates.quadratic_peak"] = num_list(cfg.quadratic_peak);
    schema["simulation.replications"] = int_num(cfg.replications);
    schema["simulation.base_seed"] = [&](const std::string& v, const std::string& w) {
        try {
            cfg.base_seed = std::stoull(v);
        } catch (...) {
            throw config_error(w + ": not an unsigned integer: '" + v + "'");
        }
    };
    schema["simulation.grid_lpfv"] = num_list(cfg.grid_lpfv);
    schema["simulation.grid_rho"] = num_list(cfg.grid_rho);
    schema["simulation.grid_effect"] = [&](const std::string& v, const std::string&) {
        cfg.grid_effect = split_list(v);
    };
    schema["simulation.threads"] = int_num(cfg.threads);
    schema["mvn.lattice_points"] = int_num(cfg.qmc.lattice_points);
    schema["mvn.randomizations"] = int_num(cfg.qmc.randomizations);
    schema["mvn.max_dim"] = int_num(cfg.qmc.max_dim);
    schema["appendix.rhos"] = num_list(cfg.appendix_rhos);
    schema["appendix.time_grid"] = num_list(cfg.appendix_grid);

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw config_error(source_name + ":" + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error(source_name + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;
        auto it = schema.find(full);
        if (it == schema.end()) {
            throw config_error(source_name + ":" + std::to_string(lineno) + ": unknown key '" + full + "'");
        }
        it->second(value, source_name + ":" + std::to_string(lineno) + " (" + full + ")");
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    return parse_config(in, path);
}

namespace {

std::string join(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace

void print_config(const RunConfig& cfg, std::ostream& out) {
    out << "[design]\n";
    out << "doses = " << join(cfg.doses) << "\n";
    out << "alloc = " << join(cfg.alloc) << "\n";
    out << "n_total = " << cfg.n_total << "\n";
    out << "target_power = " << format_double(cfg.target_power) << "\n";
    out << "\n[effect]\n";
    out << "kind = " << cfg.effect_kind << "\n";
    out << "max_effect = " << format_double(cfg.max_effect) << "\n";
    out << "ed50 = " << format_double(cfg.ed50) << "\n";
    out << "onset_rate = " << format_double(cfg.onset_rate) << "\n";
    out << "planned_max_effect = " << format_double(cfg.planned_max_effect) << "\n";
    out << "\n[outcome]\n";
    out << "sigma = " << format_double(cfg.sigma) << "\n";
    out << "rho = " << format_double(cfg.rho) << "\n";
    out << "visit_weeks = " << join(cfg.visit_weeks) << "\n";
    out << "\n[recruitment]\n";
    out << "lpfv_t = " << format_double(cfg.lpfv_t) << "\n";
    out << "\n[interim]\n";
    out << "completer_fracs = " << join(cfg.completer_fracs) << "\n";
    out << "\n[test]\n";
    out << "alpha = " << format_double(cfg.alpha) << "\n";
    out << "\n[candidates]\n";
    out << "emax = " << join(cfg.emax) << "\n";
    out << "sigemax = ";
    for (size_t i = 0; i < cfg.sigemax.size(); ++i) {
        if (i) out << ", ";
        out << format_double(cfg.sigemax[i].first) << ":" << format_double(cfg.sigemax[i].second);
    }
    out << "\n";
    out << "quadratic_peak = " << join(cfg.quadratic_peak) << "\n";
    out << "\n[simulation]\n";
    out << "replications = " << cfg.replications << "\n";
    out << "base_seed = " << cfg.base_seed << "\n";
    out << "grid_lpfv = " << join(cfg.grid_lpfv) << "\n";
    out << "grid_rho = " << join(cfg.grid_rho) << "\n";
    out << "grid_effect = ";
    for (size_t i = 0; i < cfg.grid_effect.size(); ++i) {
        if (i) out << ", ";
        out << cfg.grid_effect[i];
    }
    out << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "\n[mvn]\n";
    out << "lattice_points = " << cfg.qmc.lattice_points << "\n";
    out << "randomizations = " << cfg.qmc.randomizations << "\n";
    out << "max_dim = " << cfg.qmc.max_dim << "\n";
    out << "\n[appendix]\n";
    out << "rhos = " << join(cfg.appendix_rhos) << "\n";
    out << "time_grid = " << join(cfg.appendix_grid) << "\n";
}

}  // namespace dfpower
