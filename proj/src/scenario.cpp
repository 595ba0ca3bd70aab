#include "blp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "blp/expr.hpp"

namespace blp {

namespace {

std::string join_errors(const std::vector<std::string>& errs) {
    std::string out = "scenario validation failed:";
    for (const auto& e : errs) out += "\n  - " + e;
    return out;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> errs)
    : std::runtime_error(join_errors(errs)), errors(std::move(errs)) {}

namespace {

class Validator {
public:
    explicit Validator(const nlohmann::json& input) : in_(input) {}

    Scenario run() {
        if (!in_.is_object()) {
            errors_.push_back("scenario must be a JSON object");
            throw ScenarioError(std::move(errors_));
        }
        doc_ = in_;

        s_.name = str_field("name", "unnamed");
        s_.sigma2 = num_field("sigma2", "0");
        if (!(s_.sigma2 >= 0.0)) errors_.push_back("sigma2 must be >= 0");
        s_.a = num_field("a", "0");
        s_.theta = num_field("theta", "1");
        if (!(s_.theta >= 0.0)) errors_.push_back("theta must be >= 0");

        parse_measure();

        s_.truncation = num_field("truncation", "inf");
        if (!(s_.truncation > 0.0)) errors_.push_back("truncation must be > 0");
        s_.motion_cutoff = num_field("motion_cutoff", "0");
        if (s_.motion_cutoff < 0.0) errors_.push_back("motion_cutoff must be >= 0");
        s_.horizon = num_field("horizon", "1");
        if (!(s_.horizon >= 0.0)) errors_.push_back("horizon must be >= 0");
        s_.query_times = nums_field("query_times", {"1"});
        for (double q : s_.query_times)
            if (q < 0.0 || q > s_.horizon)
                errors_.push_back("query_times must lie in [0, horizon]");

        if (!doc_.contains("caps")) doc_["caps"] = nlohmann::json::object();
        auto& caps = doc_["caps"];
        if (!caps.contains("max_particles")) caps["max_particles"] = 200000;
        if (!caps.contains("max_events")) caps["max_events"] = 20000000;
        s_.caps.max_particles = caps["max_particles"].get<std::uint64_t>();
        s_.caps.max_events = caps["max_events"].get<std::uint64_t>();

        s_.replicas = u64_field("replicas", 1000);
        s_.seed = u64_field("seed", 1);

        if (doc_.contains("experiments")) {
            for (const auto& e : doc_["experiments"]) s_.experiments.push_back(e.get<std::string>());
        } else {
            doc_["experiments"] = nlohmann::json::array();
        }
        static const std::vector<std::string> known = {
            "martingale_mean", "degeneracy",   "change_of_measure",
            "yule_limit_law",  "lp_moment",    "spine_law",
            "wstar",           "coupling",     "tilted_growth"};
        for (const auto& e : s_.experiments)
            if (std::find(known.begin(), known.end(), e) == known.end())
                errors_.push_back("unknown experiment '" + e + "'");

        const bool wants_lp =
            std::find(s_.experiments.begin(), s_.experiments.end(), "lp_moment") !=
            s_.experiments.end();
        if (doc_.contains("lp")) {
            s_.has_lp = true;
            if (!doc_["lp"].contains("p"))
                errors_.push_back("lp experiments need lp.p");
            else
                s_.lp_p = num_of(doc_["lp"]["p"], "lp.p");
            if (!doc_["lp"].contains("q"))
                errors_.push_back("lp experiments need lp.q (kappa(q theta) clause)");
            else
                s_.lp_q = num_of(doc_["lp"]["q"], "lp.q");
            if (s_.has_lp && !(s_.lp_p > 1.0 && s_.lp_p <= 2.0))
                errors_.push_back("lp.p must lie in (1, 2]");
            if (s_.has_lp && doc_["lp"].contains("q") && !(s_.lp_q > s_.lp_p))
                errors_.push_back("lp.q must exceed lp.p");
        } else if (wants_lp) {
            errors_.push_back("experiment 'lp_moment' requires an lp section with p and q");
        }

        if (!errors_.empty()) throw ScenarioError(std::move(errors_));
        s_.doc = std::move(doc_);
        return std::move(s_);
    }

private:
    double num_of(const nlohmann::json& v, const std::string& what) {
        try {
            if (v.is_number()) return v.get<double>();
            if (v.is_string()) return eval_expression(v.get<std::string>());
        } catch (const std::exception& e) {
            errors_.push_back(what + ": " + e.what());
            return 0.0;
        }
        errors_.push_back(what + ": expected a number or expression string");
        return 0.0;
    }

    double num_field(const std::string& key, const std::string& dflt) {
        if (!doc_.contains(key)) doc_[key] = dflt;
        return num_of(doc_[key], key);
    }

    std::vector<double> nums_field(const std::string& key,
                                   const std::vector<std::string>& dflt) {
        if (!doc_.contains(key)) {
            doc_[key] = nlohmann::json::array();
            for (const auto& d : dflt) doc_[key].push_back(d);
        }
        std::vector<double> out;
        if (!doc_[key].is_array()) {
            errors_.push_back(key + ": expected an array");
            return out;
        }
        std::size_t i = 0;
        for (const auto& v : doc_[key]) out.push_back(num_of(v, key + "[" + std::to_string(i++) + "]"));
        std::sort(out.begin(), out.end());
        return out;
    }

    std::uint64_t u64_field(const std::string& key, std::uint64_t dflt) {
        if (!doc_.contains(key)) doc_[key] = dflt;
        if (!doc_[key].is_number_unsigned() && !doc_[key].is_number_integer()) {
            errors_.push_back(key + ": expected a non-negative integer");
            return dflt;
        }
        return doc_[key].get<std::uint64_t>();
    }

    std::string str_field(const std::string& key, const std::string& dflt) {
        if (!doc_.contains(key)) doc_[key] = dflt;
        return doc_[key].get<std::string>();
    }

    void parse_measure() {
        if (!doc_.contains("measure") || !doc_["measure"].is_object()) {
            errors_.push_back("measure section is required");
            return;
        }
        auto& m = doc_["measure"];
        const std::string family = m.value("family", "");
        try {
            if (family == "finite") {
                std::vector<FiniteDiscrete::Atom> atoms;
                if (m.contains("atoms")) {
                    std::size_t i = 0;
                    for (const auto& aj : m["atoms"]) {
                        const std::string tag = "measure.atoms[" + std::to_string(i++) + "]";
                        const double rate = num_of(aj.at("rate"), tag + ".rate");
                        if (!(rate > 0.0)) {
                            errors_.push_back(tag + ".rate must be > 0");
                            continue;
                        }
                        std::vector<double> entries;
                        std::size_t k = 0;
                        for (const auto& ej : aj.at("config"))
                            entries.push_back(
                                num_of(ej, tag + ".config[" + std::to_string(k++) + "]"));
                        try {
                            atoms.push_back({rate, PointConfiguration(std::move(entries))});
                        } catch (const std::exception& e) {
                            errors_.push_back(tag + ": " + e.what());
                        }
                    }
                }
                s_.measure = BranchingLevyMeasure::finite(std::move(atoms));
            } else if (family == "heavy_offspring") {
                const double scale =
                    m.contains("scale") ? num_of(m["scale"], "measure.scale") : 1.0;
                if (!m.contains("scale")) m["scale"] = "1";
                s_.measure = BranchingLevyMeasure::heavy_offspring(scale);
            } else if (family == "fragmentation") {
                const double alpha = num_of(m.at("alpha"), "measure.alpha");
                s_.measure = BranchingLevyMeasure::fragmentation(alpha);
                if (alpha > 0.0 && alpha < 2.0 && !(s_.theta > alpha))
                    errors_.push_back(
                        "exponential integrability (5) fails for the fragmentation "
                        "family: theta must exceed alpha");
            } else {
                errors_.push_back("unknown measure family '" + family + "'");
            }
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            errors_.push_back(std::string("measure: ") + e.what());
        }
    }

    const nlohmann::json& in_;
    nlohmann::json doc_;
    Scenario s_;
    std::vector<std::string> errors_;
};

}  // namespace

Scenario parse_scenario_json(const nlohmann::json& j) { return Validator(j).run(); }

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError({"cannot open scenario file '" + path + "'"});
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ScenarioError({std::string("JSON parse error: ") + e.what()});
    }
    return parse_scenario_json(j);
}

McConfig Scenario::mc_config(int jobs) const {
    McConfig cfg;
    cfg.triplet = triplet();
    cfg.truncation = truncation;
    cfg.motion_cutoff = motion_cutoff;
    cfg.caps = caps;
    cfg.seed = seed;
    cfg.replicas = replicas;
    cfg.jobs = jobs;
    return cfg;
}

std::string Scenario::canonical_text() const { return doc.dump(2) + "\n"; }

std::uint64_t Scenario::hash() const {
    const std::string text = canonical_text();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// built-in registry

namespace {

nlohmann::json builtin_doc(const std::string& name) {
    using nlohmann::json;
    if (name == "yule") {
        return json::parse(R"json({
          "name": "yule",
          "sigma2": "0", "a": "0", "theta": "1",
          "measure": {"family": "finite", "atoms": [{"rate": "1", "config": ["0", "0"]}]},
          "horizon": "8", "query_times": ["2", "4", "6", "8"],
          "replicas": 5000, "seed": 20260801,
          "experiments": ["martingale_mean", "yule_limit_law", "change_of_measure", "lp_moment"],
          "lp": {"p": "2", "q": "3"},
          "martingale_t": "6", "yule_t": "8", "lp_grid": ["2", "4", "6"],
          "com_times": ["1", "2"],
          "com_functionals": ["one", "count_le_3", "min1_w"]
        })json");
    }
    if (name == "bbm-ui") {
        return json::parse(R"json({
          "name": "bbm-ui",
          "sigma2": "1", "a": "0", "theta": "1",
          "measure": {"family": "finite", "atoms": [{"rate": "1", "config": ["0", "0"]}]},
          "horizon": "5", "query_times": ["1", "2", "5"],
          "replicas": 3000, "seed": 20260802,
          "experiments": ["martingale_mean", "change_of_measure", "spine_law", "wstar"],
          "martingale_t": "5",
          "com_times": ["1", "2"],
          "com_functionals": ["one", "count_le_3", "min1_w"],
          "spine_horizon": "50", "spine_slope_replicas": 4000, "spine_cf_replicas": 100000,
          "spine_rs": ["0.5", "1", "2"],
          "wstar_t1": "40", "wstar_t2": "80", "wstar_replicas": 2000
        })json");
    }
    if (name == "bbm-degenerate") {
        return json::parse(R"json({
          "name": "bbm-degenerate",
          "sigma2": "1", "a": "0", "theta": "1.6",
          "measure": {"family": "finite", "atoms": [{"rate": "1", "config": ["0", "0"]}]},
          "horizon": "8", "query_times": ["2", "4", "6", "8"],
          "replicas": 500, "seed": 20260803,
          "experiments": ["degeneracy", "tilted_growth"],
          "degeneracy_threshold": "0.1",
          "growth_grid": ["2", "4", "6"], "growth_bound": "10", "growth_replicas": 300
        })json");
    }
    if (name == "heavy-offspring") {
        return json::parse(R"json({
          "name": "heavy-offspring",
          "sigma2": "0", "a": "0", "theta": "1",
          "measure": {"family": "heavy_offspring", "scale": "1"},
          "horizon": "1", "query_times": ["1"],
          "replicas": 200, "seed": 20260804,
          "experiments": []
        })json");
    }
    if (name == "heavy-offspring-slow") {
        return json::parse(R"json({
          "name": "heavy-offspring-slow",
          "sigma2": "0", "a": "0", "theta": "1",
          "measure": {"family": "heavy_offspring", "scale": "0.05"},
          "horizon": "50", "query_times": ["10", "20", "30", "40", "50"],
          "replicas": 2000, "seed": 20260805,
          "experiments": ["degeneracy"],
          "degeneracy_threshold": "inf"
        })json");
    }
    if (name == "fragmentation") {
        return json::parse(R"json({
          "name": "fragmentation",
          "sigma2": "0", "a": "0", "theta": "1",
          "measure": {"family": "fragmentation", "alpha": "0.5"},
          "truncation": "2", "motion_cutoff": "1e-3",
          "horizon": "0.8", "query_times": ["0.2", "0.4", "0.6", "0.8"],
          "replicas": 200, "seed": 20260806,
          "caps": {"max_particles": 200000, "max_events": 40000000},
          "experiments": ["martingale_mean", "coupling"],
          "martingale_t": "0.8",
          "coupling_truncations": ["1", "2", "4"], "coupling_replicas": 20
        })json");
    }
    if (name == "pure-drift") {
        return json::parse(R"json({
          "name": "pure-drift",
          "sigma2": "0", "a": "1", "theta": "1",
          "measure": {"family": "finite", "atoms": []},
          "horizon": "5", "query_times": ["1", "5"],
          "replicas": 100, "seed": 20260807,
          "experiments": ["martingale_mean"],
          "martingale_t": "5"
        })json");
    }
    if (name == "smalljump") {
        return json::parse(R"json({
          "name": "smalljump",
          "sigma2": "0", "a": "0", "theta": "1",
          "measure": {"family": "finite", "atoms": [{"rate": "1", "config": ["ln(2)"]}]},
          "horizon": "50", "query_times": ["1", "50"],
          "replicas": 3000, "seed": 20260808,
          "experiments": ["martingale_mean", "spine_law"],
          "martingale_t": "50",
          "spine_horizon": "50", "spine_slope_replicas": 3000, "spine_cf_replicas": 100000,
          "spine_rs": ["0.5", "1", "2"]
        })json");
    }
    if (name == "mixed-censor") {
        return json::parse(R"json({
          "name": "mixed-censor",
          "sigma2": "0", "a": "0", "theta": "1",
          "measure": {"family": "finite", "atoms": [
            {"rate": "1", "config": ["0", "0"]},
            {"rate": "0.5", "config": ["-1.5", "-2"]}
          ]},
          "horizon": "2", "query_times": ["1", "2"],
          "replicas": 4000, "seed": 20260809,
          "experiments": ["martingale_mean", "change_of_measure"],
          "martingale_t": "2",
          "com_times": ["1", "2"],
          "com_functionals": ["one", "count_le_3", "min1_w"]
        })json");
    }
    throw ScenarioError({"unknown built-in scenario '" + name + "'"});
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
    return {"yule",           "bbm-ui",       "bbm-degenerate",
            "heavy-offspring", "heavy-offspring-slow", "fragmentation",
            "pure-drift",     "smalljump",    "mixed-censor"};
}

Scenario builtin_scenario(const std::string& name) {
    return parse_scenario_json(builtin_doc(name));
}

// ---------------------------------------------------------------------------

double scenario_num(const Scenario& s, const std::string& key, double fallback) {
    if (!s.doc.contains(key)) return fallback;
    const auto& v = s.doc[key];
    if (v.is_number()) return v.get<double>();
    return eval_expression(v.get<std::string>());
}

std::uint64_t scenario_u64(const Scenario& s, const std::string& key,
                           std::uint64_t fallback) {
    if (!s.doc.contains(key)) return fallback;
    return s.doc[key].get<std::uint64_t>();
}

std::vector<double> scenario_nums(const Scenario& s, const std::string& key,
                                  std::vector<double> fallback) {
    if (!s.doc.contains(key)) return fallback;
    std::vector<double> out;
    for (const auto& v : s.doc[key])
        out.push_back(v.is_number() ? v.get<double>()
                                    : eval_expression(v.get<std::string>()));
    return out;
}

std::vector<std::string> scenario_strs(const Scenario& s, const std::string& key,
                                       std::vector<std::string> fallback) {
    if (!s.doc.contains(key)) return fallback;
    std::vector<std::string> out;
    for (const auto& v : s.doc[key]) out.push_back(v.get<std::string>());
    return out;
}

}  // namespace blp
