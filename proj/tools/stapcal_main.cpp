#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stapcal/config_io.hpp"
#include "stapcal/harness.hpp"
#include "stapcal/selftest.hpp"

namespace {

constexpr const char* kVersion = "stapcal 0.1.0";

struct CommonOptions {
    std::string spec_path;
    std::string preset = "three-target";
    std::vector<std::string> overrides;
    std::string output_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = -1;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--spec", opts.spec_path, "Experiment spec JSON file");
    cmd->add_option("--preset", opts.preset, "Built-in scenario when no spec file is given")
        ->check(CLI::IsMember({"three-target", "single-target"}));
    cmd->add_option("--set", opts.overrides,
                    "Dotted-path override applied after spec load, e.g. solver.beta=0.25");
    cmd->add_option("--out", opts.output_dir, "Output directory (overrides the spec)");
    cmd->add_option("--seed", opts.seed, "Base seed (overrides the spec)")
        ->each([&opts](const std::string&) { opts.seed_given = true; });
    cmd->add_option("--workers", opts.workers, "Worker thread cap for Monte Carlo trials");
    cmd->add_flag("-v,--verbose", opts.verbose, "Verbose progress output");
}

stapcal::ExperimentSpec resolve_spec(const CommonOptions& opts) {
    nlohmann::json doc;
    if (!opts.spec_path.empty()) {
        std::ifstream in(opts.spec_path);
        if (!in) throw std::invalid_argument("cannot open spec file " + opts.spec_path);
        try {
            in >> doc;
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("malformed JSON in " + opts.spec_path + ": " + e.what());
        }
    } else {
        const stapcal::ExperimentSpec preset = opts.preset == "single-target"
                                                   ? stapcal::ExperimentSpec::single_target_preset()
                                                   : stapcal::ExperimentSpec::three_target_preset();
        doc = stapcal::spec_to_json(preset);
    }
    for (const std::string& ov : opts.overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("override must look like path=value: " + ov);
        }
        stapcal::apply_override(doc, ov.substr(0, eq), ov.substr(eq + 1));
    }
    stapcal::ExperimentSpec spec = stapcal::spec_from_json(doc);
    if (opts.seed_given) spec.base_seed = opts.seed;
    if (!opts.output_dir.empty()) {
        spec.output_dir = opts.output_dir;
    } else if (const char* root = std::getenv("STAPCAL_OUTPUT_ROOT"); root && *root) {
        spec.output_dir = std::string(root) + "/" + spec.output_dir;
    }
    if (opts.workers >= 0) spec.workers = opts.workers;
    spec.validate();
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse STAP with joint array gain/phase self-calibration"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOptions opts;
    std::string cal_algorithm = "jie-adm";
    int cal_case = 0;
    double cal_pfa = -1.0;
    int cal_trials = -1;

    CLI::App* cmd_profile =
        app.add_subcommand("profile", "Reconstruct spatio-Doppler profiles per error case");
    CLI::App* cmd_pd = app.add_subcommand("pd-curve", "Detection probability versus target SNR");
    CLI::App* cmd_roc = app.add_subcommand("roc", "Detection probability versus false-alarm rate");
    CLI::App* cmd_timing = app.add_subcommand("timing", "Solve wall time versus dictionary size");
    CLI::App* cmd_cal =
        app.add_subcommand("calibrate-threshold", "Monte Carlo CFAR threshold calibration");
    CLI::App* cmd_selftest =
        app.add_subcommand("selftest", "Run the oracle-equivalence and invariant battery");
    for (CLI::App* cmd : {cmd_profile, cmd_pd, cmd_roc, cmd_timing, cmd_cal}) {
        add_common(cmd, opts);
    }
    cmd_cal->add_option("--algorithm", cal_algorithm, "Algorithm to calibrate")
        ->check(CLI::IsMember({"jie-adm", "adm", "admt"}));
    cmd_cal->add_option("--case", cal_case, "Error-case index from the spec");
    cmd_cal->add_option("--pfa", cal_pfa, "False-alarm probability (default: spec pfa)");
    cmd_cal->add_option("--trials", cal_trials, "Calibration trial count (default: spec value)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (cmd_selftest->parsed()) {
            return stapcal::run_selftest(std::cout) == 0 ? 0 : 2;
        }
        const stapcal::ExperimentSpec spec = resolve_spec(opts);
        const std::string subcommand = app.get_subcommands().front()->get_name();
        stapcal::write_manifest(spec, subcommand, spec.output_dir + "/manifest.json");
        if (opts.verbose) {
            std::cerr << "spec hash " << stapcal::spec_hash(spec) << ", output "
                      << spec.output_dir << '\n';
        }

        if (cmd_profile->parsed()) {
            stapcal::run_profile_experiment(spec);
        } else if (cmd_pd->parsed()) {
            const auto points = stapcal::run_pd_vs_snr(spec, spec.snr_grid_db);
            stapcal::write_pd_csv(spec.output_dir + "/pd_curve.csv", points);
        } else if (cmd_roc->parsed()) {
            const auto points = stapcal::run_roc(spec, spec.pfa_grid);
            stapcal::write_roc_csv(spec.output_dir + "/roc.csv", points);
        } else if (cmd_timing->parsed()) {
            const auto points = stapcal::run_timing(spec, spec.timing_sizes);
            stapcal::write_timing_csv(spec.output_dir + "/timing.csv", points);
        } else if (cmd_cal->parsed()) {
            const double pfa = cal_pfa > 0.0 ? cal_pfa : spec.pfa;
            const int trials = cal_trials > 0 ? cal_trials : spec.calibration_trials;
            const auto cal = stapcal::calibrate_spec_threshold(
                spec, stapcal::algorithm_from_string(cal_algorithm), cal_case, pfa, trials);
            if (cal.quantile_unstable) {
                std::cerr << "warning: num_trials * pfa < 10; the quantile estimate is unstable\n";
            }
            nlohmann::json result{{"pfa", cal.pfa},
                                  {"trials", cal.num_trials},
                                  {"xi", cal.threshold_db},
                                  {"seed", cal.seed}};
            std::ofstream out(spec.output_dir + "/threshold.json");
            out << result.dump(2) << '\n';
            std::cout << result.dump(2) << '\n';
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
