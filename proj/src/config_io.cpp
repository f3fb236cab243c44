#include "stapcal/config_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>

namespace stapcal {

using nlohmann::json;

namespace {

void reject_unknown_fields(const json& j, const std::set<std::string>& known,
                           const std::string& context) {
    if (!j.is_object()) throw std::invalid_argument(context + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw std::invalid_argument(context + ": unknown field \"" + item.key() + "\"");
        }
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument(std::string("field \"") + key + "\" has the wrong type");
        }
    }
}

void require_field(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) {
        throw std::invalid_argument(context + ": missing required field \"" + key + "\"");
    }
}

}  // namespace

json radar_to_json(const RadarConfig& cfg) {
    return json{{"num_elements", cfg.num_elements},
                {"num_pulses", cfg.num_pulses},
                {"carrier_wavelength", cfg.carrier_wavelength},
                {"element_spacing", cfg.element_spacing},
                {"prf", cfg.prf},
                {"platform_velocity", cfg.platform_velocity},
                {"platform_height", cfg.platform_height},
                {"cnr_db", cfg.cnr_db},
                {"noise_power", cfg.noise_power},
                {"num_clutter_patches", cfg.num_clutter_patches}};
}

RadarConfig radar_from_json(const json& j) {
    reject_unknown_fields(j,
                          {"num_elements", "num_pulses", "carrier_wavelength", "element_spacing",
                           "prf", "platform_velocity", "platform_height", "cnr_db", "noise_power",
                           "num_clutter_patches"},
                          "radar");
    RadarConfig cfg;  // Table II defaults
    const bool spacing_given = j.contains("element_spacing");
    read_field(j, "num_elements", cfg.num_elements);
    read_field(j, "num_pulses", cfg.num_pulses);
    read_field(j, "carrier_wavelength", cfg.carrier_wavelength);
    read_field(j, "element_spacing", cfg.element_spacing);
    read_field(j, "prf", cfg.prf);
    read_field(j, "platform_velocity", cfg.platform_velocity);
    read_field(j, "platform_height", cfg.platform_height);
    read_field(j, "cnr_db", cfg.cnr_db);
    read_field(j, "noise_power", cfg.noise_power);
    read_field(j, "num_clutter_patches", cfg.num_clutter_patches);
    if (!spacing_given) cfg.element_spacing = 0.5 * cfg.carrier_wavelength;
    cfg.validate();
    return cfg;
}

json spec_to_json(const ExperimentSpec& spec) {
    json algorithms = json::array();
    for (Algorithm a : spec.algorithms) algorithms.push_back(to_string(a));
    json error_cases = json::array();
    for (const ErrorCase& e : spec.error_cases) {
        error_cases.push_back(json{{"eps_max", e.eps_max}, {"phi_max", e.phi_max}});
    }
    json targets = json::array();
    for (const TargetSpec& t : spec.targets) {
        targets.push_back(
            json{{"doppler", t.doppler}, {"spatial", t.spatial}, {"snr_db", t.snr_db}});
    }
    return json{{"radar", radar_to_json(spec.radar)},
                {"grid", json{{"rho_s", spec.rho_s}, {"rho_d", spec.rho_d}}},
                {"solver", json{{"rho", spec.solver.rho},
                                {"beta", spec.solver.beta},
                                {"tau", spec.solver.tau},
                                {"sigma", json::array({spec.solver.sigma.real(),
                                                       spec.solver.sigma.imag()})},
                                {"zeta", spec.solver.zeta},
                                {"max_iter", spec.solver.max_iter}}},
                {"detector", json{{"mainlobe_spatial", spec.detector.mainlobe_spatial},
                                  {"num_secondary", spec.detector.num_secondary},
                                  {"num_guard", spec.detector.num_guard},
                                  {"threshold_db", spec.detector.threshold_db}}},
                {"error_cases", error_cases},
                {"targets", targets},
                {"algorithms", algorithms},
                {"num_trials", spec.num_trials},
                {"base_seed", spec.base_seed},
                {"output_dir", spec.output_dir},
                {"snap_targets_to_grid", spec.snap_targets_to_grid},
                {"pfa", spec.pfa},
                {"calibration_trials", spec.calibration_trials},
                {"pd_target_index", spec.pd_target_index},
                {"snr_grid_db", spec.snr_grid_db},
                {"pfa_grid", spec.pfa_grid},
                {"timing_sizes", spec.timing_sizes},
                {"workers", spec.workers}};
}

ExperimentSpec spec_from_json(const json& j) {
    reject_unknown_fields(
        j,
        {"radar", "grid", "solver", "detector", "error_cases", "targets", "algorithms",
         "num_trials", "base_seed", "output_dir", "snap_targets_to_grid", "pfa",
         "calibration_trials", "pd_target_index", "snr_grid_db", "pfa_grid", "timing_sizes",
         "workers"},
        "spec");
    require_field(j, "radar", "spec");
    require_field(j, "algorithms", "spec");
    require_field(j, "num_trials", "spec");
    require_field(j, "base_seed", "spec");

    ExperimentSpec spec;
    spec.radar = radar_from_json(j.at("radar"));
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        reject_unknown_fields(g, {"rho_s", "rho_d"}, "grid");
        read_field(g, "rho_s", spec.rho_s);
        read_field(g, "rho_d", spec.rho_d);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        reject_unknown_fields(s, {"rho", "beta", "tau", "sigma", "zeta", "max_iter"}, "solver");
        read_field(s, "rho", spec.solver.rho);
        read_field(s, "beta", spec.solver.beta);
        read_field(s, "tau", spec.solver.tau);
        read_field(s, "zeta", spec.solver.zeta);
        read_field(s, "max_iter", spec.solver.max_iter);
        if (auto it = s.find("sigma"); it != s.end()) {
            if (it->is_number()) {
                spec.solver.sigma = Complex(it->get<double>(), 0.0);
            } else if (it->is_array() && it->size() == 2) {
                spec.solver.sigma = Complex((*it)[0].get<double>(), (*it)[1].get<double>());
            } else {
                throw std::invalid_argument("solver.sigma must be a number or [re, im]");
            }
        }
    }
    if (j.contains("detector")) {
        const json& d = j.at("detector");
        reject_unknown_fields(d, {"mainlobe_spatial", "num_secondary", "num_guard", "threshold_db"},
                              "detector");
        read_field(d, "mainlobe_spatial", spec.detector.mainlobe_spatial);
        read_field(d, "num_secondary", spec.detector.num_secondary);
        read_field(d, "num_guard", spec.detector.num_guard);
        read_field(d, "threshold_db", spec.detector.threshold_db);
    }
    if (j.contains("error_cases")) {
        spec.error_cases.clear();
        for (const json& e : j.at("error_cases")) {
            reject_unknown_fields(e, {"eps_max", "phi_max"}, "error_cases");
            ErrorCase ec;
            read_field(e, "eps_max", ec.eps_max);
            read_field(e, "phi_max", ec.phi_max);
            spec.error_cases.push_back(ec);
        }
    }
    if (j.contains("targets")) {
        spec.targets.clear();
        for (const json& t : j.at("targets")) {
            reject_unknown_fields(t, {"doppler", "spatial", "snr_db"}, "targets");
            TargetSpec ts;
            read_field(t, "doppler", ts.doppler);
            read_field(t, "spatial", ts.spatial);
            read_field(t, "snr_db", ts.snr_db);
            spec.targets.push_back(ts);
        }
    }
    spec.algorithms.clear();
    for (const json& a : j.at("algorithms")) {
        spec.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
    }
    read_field(j, "num_trials", spec.num_trials);
    read_field(j, "base_seed", spec.base_seed);
    read_field(j, "output_dir", spec.output_dir);
    read_field(j, "snap_targets_to_grid", spec.snap_targets_to_grid);
    read_field(j, "pfa", spec.pfa);
    read_field(j, "calibration_trials", spec.calibration_trials);
    read_field(j, "pd_target_index", spec.pd_target_index);
    read_field(j, "snr_grid_db", spec.snr_grid_db);
    read_field(j, "pfa_grid", spec.pfa_grid);
    read_field(j, "timing_sizes", spec.timing_sizes);
    read_field(j, "workers", spec.workers);
    spec.validate();
    return spec;
}

ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_spec: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("load_spec: malformed JSON in " + path + ": " + e.what());
    }
    return spec_from_json(j);
}

void save_spec(const ExperimentSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_spec: cannot write " + path);
    out << spec_to_json(spec).dump(2) << '\n';
}

void apply_override(json& doc, const std::string& dotted_path, const std::string& value) {
    json* node = &doc;
    std::size_t start = 0;
    std::vector<std::string> segments;
    while (true) {
        const std::size_t dot = dotted_path.find('.', start);
        segments.push_back(dotted_path.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        if (!node->is_object() || !node->contains(segments[i])) {
            throw std::invalid_argument("override: no such path \"" + dotted_path + "\"");
        }
        node = &(*node)[segments[i]];
    }
    const std::string& leaf = segments.back();
    if (!node->is_object() || !node->contains(leaf)) {
        throw std::invalid_argument("override: no such path \"" + dotted_path + "\"");
    }
    json parsed = json::parse(value, nullptr, false);
    (*node)[leaf] = parsed.is_discarded() ? json(value) : parsed;
}

std::string spec_hash(const ExperimentSpec& spec) {
    const std::string dump = spec_to_json(spec).dump();  // nlohmann sorts object keys
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace stapcal
