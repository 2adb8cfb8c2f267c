// sepm: run scenarios, print routing truth tables and calibrate profiles.

#include "sepm/calibration.hpp"
#include "sepm/errors.hpp"
#include "sepm/profile.hpp"
#include "sepm/routing.hpp"
#include "sepm/scenario.hpp"
#include "sepm/sequencer.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/exceptions.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace sepm;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

int report_error(const std::exception& e, std::ostream& err) {
    if (const auto* sepm_error = dynamic_cast<const Error*>(&e)) {
        err << "error [" << error_code_name(sepm_error->code()) << "]: " << e.what() << '\n';
        return sepm_error->exit_code();
    }
    if (dynamic_cast<const YAML::Exception*>(&e) != nullptr) {
        err << "error [ParseError]: " << e.what() << '\n';
        return static_cast<int>(ErrorCode::parse);
    }
    err << "error: " << e.what() << '\n';
    return 1;
}

struct RunFlags {
    std::vector<std::string> scenarios;
    std::string out_dir = "out";
    bool dry_run = false;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::string profile_path;
    std::string registry_path;
};

Outcome run_one(const std::string& reference, const RunFlags& flags) {
    Outcome outcome;
    std::ostringstream out;
    std::ostringstream err;
    try {
        const auto path = scenario::resolve_scenario(reference);
        const auto sc = scenario::load_scenario(path);

        scenario::RunOptions options;
        options.seed = flags.seed;
        options.dry_run = flags.dry_run;
        const auto topology = routing::build_topology(sc.topology);
        if (!flags.registry_path.empty()) {
            options.registry = sequencer::load_registry(flags.registry_path, &topology);
        }

        const auto profile_path = !flags.profile_path.empty() ? fs::path(flags.profile_path)
                                  : sc.profile.empty()        ? profile::default_profile_path()
                                                              : profile::resolve_profile(sc.profile, path.parent_path());
        const auto result = scenario::run_scenario(sc, profile::load_profile(profile_path), options);

        if (flags.dry_run) {
            out << sc.name << ": dry run, " << result.schedule.commands.size() << " pulses compiled\n"
                << sequencer::format_schedule(result.schedule);
            outcome.out = out.str();
            return outcome;
        }

        const auto& ledger = result.report->ledger;
        out << sc.name << ": " << ledger.total_pulses() << " pulses, " << profile::format_number(ledger.total_energy())
            << " J switching, " << profile::format_number(sequencer::EnergyLedger::holding_energy())
            << " J holding\n";
        for (const auto& failure : result.report->failures) {
            out << "  failure at step " << failure.step << ": " << failure.message << '\n';
        }
        for (const auto& check : result.checks) {
            out << "  check " << check.name << ": " << profile::format_number(check.value) << ' ' << check.detail
                << (check.passed ? " [PASS]\n" : " [FAIL]\n");
        }
        const auto written = scenario::write_outputs(sc, result, fs::path(flags.out_dir) / sc.name);
        for (const auto& file : written) out << "  wrote " << file.string() << '\n';

        if (!result.report->failures.empty()) {
            outcome.code = static_cast<int>(ErrorCode::occlusion_failed);
        } else if (!result.checks_passed()) {
            outcome.code = static_cast<int>(ErrorCode::check_failed);
        }
    } catch (const std::exception& e) {
        outcome.code = report_error(e, err);
    }
    outcome.out = out.str();
    outcome.err = err.str();
    return outcome;
}

int cmd_run(const RunFlags& flags) {
    std::vector<Outcome> outcomes(flags.scenarios.size());
    const unsigned workers = std::max(1U, std::min<unsigned>(flags.jobs, static_cast<unsigned>(flags.scenarios.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < flags.scenarios.size(); i = next++) {
            outcomes[i] = run_one(flags.scenarios[i], flags);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    int code = 0;
    for (const auto& o : outcomes) {
        std::cout << o.out;
        std::cerr << o.err;
        if (code == 0) code = o.code;
    }
    return code;
}

int cmd_truthtable(const std::string& spec, bool csv, const std::string& out_path) {
    const auto topology = routing::build_topology(spec);
    const auto table = routing::truth_table(topology);
    std::ostringstream text;
    if (csv) {
        routing::write_truth_table_csv(table, text);
    } else {
        routing::print_truth_table(table, text);
    }
    if (out_path.empty()) {
        std::cout << text.str();
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write '" + out_path + "'");
        out << text.str();
    }
    return 0;
}

int cmd_calibrate(const std::string& profile_arg, const std::string& out_path, std::optional<int> max_iterations) {
    const fs::path path = profile_arg.empty() ? profile::default_profile_path() : fs::path(profile_arg);
    const auto original = profile::load_profile(path);
    try {
        auto report = calibration::calibrate(original, max_iterations);
        std::cout << "profile " << path.string() << '\n' << report.format();
        if (!report.changed(original)) {
            std::cout << "already calibrated, no change\n";
        }
        if (!out_path.empty()) {
            report.profile.name = original.name == "uncalibrated" ? "calibrated-default" : original.name;
            profile::save_profile(report.profile, out_path);
            std::cout << "wrote " << out_path << '\n';
        }
        return 0;
    } catch (const calibration::CalibrationInfeasible& e) {
        std::cout << "profile " << path.string() << '\n' << e.report().format();
        throw;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Switchable-polarity electropermanent valve network simulator"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run scenario files or bundled scenarios");
    run->add_option("scenarios", run_flags.scenarios, "Scenario paths or bundled names")->required();
    run->add_option("--out", run_flags.out_dir, "Output directory")->capture_default_str();
    run->add_flag("--dry-run", run_flags.dry_run, "Print the compiled schedule without executing it");
    run->add_option("--seed", run_flags.seed, "Seed for stochastic occlusion mode");
    run->add_option("--jobs", run_flags.jobs, "Scenarios run in parallel")->check(CLI::PositiveNumber);
    run->add_option("--profile", run_flags.profile_path, "Profile overriding the scenario's");
    run->add_option("--registry", run_flags.registry_path, "Initial valve registry");

    std::string table_spec;
    bool table_csv = false;
    std::string table_out;
    auto* table = app.add_subcommand("truthtable", "Print the truth table of a topology");
    table->add_option("topology", table_spec, "binary | tree:<k> | six-port | dual-tree | mix-decoder[:<k>]")
        ->required();
    table->add_flag("--csv", table_csv, "CSV instead of aligned text");
    table->add_option("--out", table_out, "Write to a file instead of stdout");

    std::string cal_profile;
    std::string cal_out;
    std::optional<int> cal_iterations;
    auto* cal = app.add_subcommand("calibrate", "Fit a profile's free parameters and report residuals");
    cal->add_option("profile", cal_profile, "Profile path (default: SEPM_PROFILE or the bundled default)");
    cal->add_option("--out", cal_out, "Write the calibrated profile here");
    cal->add_option("--max-iterations", cal_iterations, "Iteration budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorCode::usage);
    }

    try {
        if (*run) return cmd_run(run_flags);
        if (*table) return cmd_truthtable(table_spec, table_csv, table_out);
        if (*cal) return cmd_calibrate(cal_profile, cal_out, cal_iterations);
    } catch (const std::exception& e) {
        return report_error(e, std::cerr);
    }
    return static_cast<int>(ErrorCode::usage);
}
