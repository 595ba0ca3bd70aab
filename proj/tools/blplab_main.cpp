#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "blp/runner.hpp"
#include "blp/version.hpp"

namespace {

struct CommonArgs {
    std::string scenario_name;
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    bool tolerance_report = false;
    bool dump_snapshots = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t replicas = 0;
    bool replicas_set = false;
    double truncation = 0.0;
    bool truncation_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--scenario", args.scenario_name, "built-in scenario name");
    cmd->add_option("--config", args.config_path, "scenario file (JSON)");
    cmd->add_option("--out", args.out_dir, "output directory for artifacts");
    cmd->add_option("--jobs", args.jobs, "worker threads (default: available cores)");
    cmd->add_flag("--tolerance-report", args.tolerance_report,
                  "include the per-test tolerance table in the report");
    cmd->add_flag("--dump-snapshots", args.dump_snapshots,
                  "write per-particle snapshot CSV (simulate)");
    cmd->add_option("--seed", args.seed, "override the scenario seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--replicas", args.replicas, "override the replica count")
        ->each([&args](const std::string&) { args.replicas_set = true; });
    cmd->add_option("--truncation", args.truncation, "override the truncation level")
        ->each([&args](const std::string&) { args.truncation_set = true; });
}

int run(const std::string& command, const CommonArgs& args) {
    blp::Scenario scenario;
    try {
        if (!args.config_path.empty())
            scenario = blp::parse_scenario(args.config_path);
        else if (!args.scenario_name.empty())
            scenario = blp::builtin_scenario(args.scenario_name);
        else {
            std::fprintf(stderr, "error: provide --scenario NAME or --config FILE\n");
            return 2;
        }
    } catch (const blp::ScenarioError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    blp::RunOptions opt;
    opt.out_dir = args.out_dir;
    opt.jobs = args.jobs;
    opt.tolerance_report = args.tolerance_report;
    opt.dump_snapshots = args.dump_snapshots;
    if (args.seed_set) opt.seed = args.seed;
    if (args.replicas_set) opt.replicas = args.replicas;
    if (args.truncation_set) opt.truncation = args.truncation;

    try {
        blp::RunResult res = blp::run_command(command, scenario, opt);
        for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        std::printf("%s\n", res.report.dump(2).c_str());
        return res.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching Levy process laboratory: criterion checking and "
                 "Monte Carlo verification of additive martingales"};
    app.set_version_flag("--version", blp::kVersion);
    app.require_subcommand(1);

    CommonArgs args;
    const char* descriptions[][2] = {
        {"criteria", "evaluate admissibility and the UI / L^p criteria"},
        {"simulate", "simulate the particle system, write trajectory CSV"},
        {"spine", "simulate the spine and W*, write spine CSV"},
        {"verify", "run the scenario's Monte Carlo verification suite"},
        {"lp", "Proposition-style L^p boundedness experiment"},
    };
    for (const auto& d : descriptions) add_common(app.add_subcommand(d[0], d[1]), args);

    auto* list = app.add_subcommand("list", "list built-in scenarios");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& n : blp::builtin_scenario_names()) std::printf("%s\n", n.c_str());
        return 0;
    }
    for (const auto& d : descriptions)
        if (app.get_subcommand(d[0])->parsed()) return run(d[0], args);
    return 2;
}
