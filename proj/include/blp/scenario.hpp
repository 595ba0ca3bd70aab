#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "blp/cumulant.hpp"
#include "blp/mc.hpp"

namespace blp {

// carries every validation problem found, not just the first
struct ScenarioError : std::runtime_error {
    explicit ScenarioError(std::vector<std::string> errs);
    std::vector<std::string> errors;
};

// A declarative model + experiment description. Numeric fields accept plain
// JSON numbers or expression strings ("ln(2)", "1e-3") so paper-derived
// constants stay exact; the normalized document keeps the original spelling
// and round-trips losslessly.
struct Scenario {
    nlohmann::json doc;  // normalized document, defaults filled

    std::string name;
    double sigma2 = 0.0;
    double a = 0.0;
    double theta = 0.0;
    BranchingLevyMeasure measure;
    double truncation = kInf;
    double motion_cutoff = 0.0;
    double horizon = 0.0;
    std::vector<double> query_times;
    Caps caps;
    std::uint64_t replicas = 1000;
    std::uint64_t seed = 1;
    std::vector<std::string> experiments;
    bool has_lp = false;
    double lp_p = 2.0;
    double lp_q = 3.0;

    Triplet triplet() const { return {sigma2, a, measure, theta}; }
    McConfig mc_config(int jobs = 0) const;

    std::string canonical_text() const;
    std::uint64_t hash() const;  // FNV-1a over the canonical text
};

Scenario parse_scenario_json(const nlohmann::json& j);
Scenario parse_scenario(const std::string& path);  // validated scenario or ScenarioError

// built-in registry shipping the verification scenarios
std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(const std::string& name);

// experiment-parameter helpers with defaults (expression-valued)
double scenario_num(const Scenario& s, const std::string& key, double fallback);
std::uint64_t scenario_u64(const Scenario& s, const std::string& key,
                           std::uint64_t fallback);
std::vector<double> scenario_nums(const Scenario& s, const std::string& key,
                                  std::vector<double> fallback);
std::vector<std::string> scenario_strs(const Scenario& s, const std::string& key,
                                       std::vector<std::string> fallback);

}  // namespace blp
