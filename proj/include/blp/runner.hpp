#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "blp/scenario.hpp"

namespace blp {

struct RunOptions {
    std::string out_dir;  // artifacts written when non-empty
    int jobs = 0;
    bool tolerance_report = false;
    bool dump_snapshots = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replicas;
    std::optional<double> truncation;
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 verdict mismatch in verify, 2 configuration error
    nlohmann::json report;
    std::vector<std::string> warnings;
};

// subcommands: criteria | simulate | spine | verify | lp
RunResult run_command(const std::string& command, const Scenario& scenario,
                      const RunOptions& options);

// report fragments, exposed for the bindings and tests
nlohmann::json criterion_report_json(const CriterionReport& rep);
nlohmann::json lp_report_json(const LpReport& rep);

// canonical double formatting used by every CSV writer ("%.17g")
std::string format_double(double v);

}  // namespace blp
