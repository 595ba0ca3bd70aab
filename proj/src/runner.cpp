#include "blp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "blp/version.hpp"

namespace blp {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

const char* verdict_str(Verdict v) {
    switch (v) {
        case Verdict::Finite: return "finite";
        case Verdict::Divergent: return "divergent";
        default: return "undetermined";
    }
}

nlohmann::json integral_json(const IntegralValue& v) {
    nlohmann::json j;
    j["verdict"] = verdict_str(v.verdict);
    if (v.finite()) {
        j["value"] = v.value;
        j["error_bound"] = v.error_bound;
    }
    j["method"] = v.method;
    return j;
}

nlohmann::json estimate_json(const Estimate& e) {
    nlohmann::json j;
    j["mean"] = e.mean;
    j["std_error"] = e.std_error;
    j["n"] = e.n;
    if (!e.quantiles.empty()) {
        nlohmann::json q = nlohmann::json::object();
        for (const auto& [p, v] : e.quantiles) q[format_double(p)] = v;
        j["quantiles"] = q;
    }
    return j;
}

void write_text(const std::string& dir, const std::string& name,
                const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    out << content;
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scenario apply_overrides(const Scenario& base, const RunOptions& opt) {
    Scenario s = base;
    if (opt.seed) {
        s.seed = *opt.seed;
        s.doc["seed"] = *opt.seed;
    }
    if (opt.replicas) {
        s.replicas = *opt.replicas;
        s.doc["replicas"] = *opt.replicas;
    }
    if (opt.truncation) {
        s.truncation = *opt.truncation;
        s.doc["truncation"] = format_double(*opt.truncation);
    }
    return s;
}

nlohmann::json manifest_json(const std::string& command, const Scenario& s) {
    nlohmann::json m;
    m["command"] = command;
    m["scenario_name"] = s.name;
    m["scenario_hash"] = hash_hex(s.hash());
    m["seed"] = s.seed;
    m["replicas"] = s.replicas;
    m["truncation"] = format_double(s.truncation);
    m["tool_version"] = kVersion;
    m["format_version"] = kFormatVersion;
    return m;
}

struct RawCsv {
    std::string body = "experiment,label,replica,value\n";
    void add(const std::string& experiment, const std::string& label, std::uint64_t replica,
             double value) {
        body += experiment;
        body += ',';
        body += label;
        body += ',';
        body += std::to_string(replica);
        body += ',';
        body += format_double(value);
        body += '\n';
    }
};

// -------------------------------------------------------------------------
// criteria

nlohmann::json dichotomy_json(const Triplet& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (double c : {0.1, 1.0, 10.0}) {
        IntegralValue v = tail_integral_dichotomy(t, c);
        nlohmann::json j = integral_json(v);
        j["c"] = c;
        arr.push_back(j);
    }
    return arr;
}

RunResult cmd_criteria(const Scenario& s, const RunOptions& opt) {
    RunResult res;
    const Triplet t = s.triplet();
    const CriterionReport rep = check_criterion(t);
    res.report["scenario"] = s.name;
    res.report["criteria"] = criterion_report_json(rep);
    res.report["tail_integral_dichotomy"] = dichotomy_json(t);
    if (s.has_lp)
        res.report["lp"] = lp_report_json(check_lp(t, s.lp_p, s.lp_q, /*probe_q=*/true));
    (void)opt;
    return res;
}

// -------------------------------------------------------------------------
// simulate

RunResult cmd_simulate(const Scenario& s, const RunOptions& opt) {
    RunResult res;
    const std::uint64_t R = s.replicas;
    std::vector<Trajectory> trajs(R);
    parallel_replicas(R, opt.jobs, [&](std::uint64_t r) {
        SimParams p;
        p.triplet = s.triplet();
        p.horizon = s.horizon;
        p.query_times = s.query_times;
        p.truncation = s.truncation;
        p.motion_cutoff = s.motion_cutoff;
        p.caps = s.caps;
        p.seed = replica_seed(s.seed, r);
        p.record_snapshots = opt.dump_snapshots;
        trajs[r] = simulate(p);
    });

    std::string csv = "replica,time,n_particles,W,overflow\n";
    std::string snap_csv = "replica,time,particle_id,position\n";
    std::uint64_t overflowed = 0;
    for (std::uint64_t r = 0; r < R; ++r) {
        const Trajectory& tr = trajs[r];
        if (tr.overflow) ++overflowed;
        for (std::size_t j = 0; j < tr.query_times.size(); ++j) {
            csv += std::to_string(r) + "," + format_double(tr.query_times[j]) + "," +
                   std::to_string(tr.n_particles[j]) + "," +
                   format_double(tr.martingale[j]) + "," +
                   (tr.flagged[j] ? "1" : "0") + "\n";
            if (opt.dump_snapshots) {
                for (const auto& e : tr.snapshots[j])
                    snap_csv += std::to_string(r) + "," + format_double(tr.query_times[j]) +
                                "," + std::to_string(e.id) + "," +
                                format_double(e.position) + "\n";
            }
        }
    }

    res.report["scenario"] = s.name;
    res.report["replicas"] = R;
    res.report["overflowed"] = overflowed;
    res.report["kappa_used"] = trajs.empty() ? 0.0 : trajs[0].kappa_used;
    nlohmann::json per_time = nlohmann::json::array();
    for (std::size_t j = 0; j < s.query_times.size(); ++j) {
        std::vector<double> w;
        for (const auto& tr : trajs)
            if (!tr.flagged[j]) w.push_back(tr.martingale[j]);
        nlohmann::json e = estimate_json(summarize(std::move(w), {0.5}));
        e["time"] = s.query_times[j];
        per_time.push_back(e);
    }
    res.report["martingale"] = per_time;

    if (overflowed > 0)
        res.warnings.push_back("overflow: " + std::to_string(overflowed) + " of " +
                               std::to_string(R) +
                               " replicas hit caps; flagged rows carry the state at the "
                               "overflow time");

    if (!opt.out_dir.empty()) {
        write_text(opt.out_dir, "trajectory.csv", csv);
        if (opt.dump_snapshots) write_text(opt.out_dir, "snapshots.csv", snap_csv);
    }
    return res;
}

// -------------------------------------------------------------------------
// spine

RunResult cmd_spine(const Scenario& s, const RunOptions& opt) {
    RunResult res;
    const std::uint64_t R = s.replicas;
    std::vector<SpineTrajectory> spines(R);
    parallel_replicas(R, opt.jobs, [&](std::uint64_t r) {
        SpineParams p;
        p.triplet = s.triplet();
        p.horizon = s.horizon;
        p.query_times = s.query_times;
        p.truncation = s.truncation;
        p.motion_cutoff = s.motion_cutoff;
        p.seed = replica_seed(s.seed, r);
        spines[r] = simulate_spine(p);
    });

    std::string csv = "replica,time,xi_hat,wstar,n_atoms_so_far\n";
    for (std::uint64_t r = 0; r < R; ++r) {
        const SpineTrajectory& sp = spines[r];
        for (std::size_t j = 0; j < sp.query_times.size(); ++j)
            csv += std::to_string(r) + "," + format_double(sp.query_times[j]) + "," +
                   format_double(sp.xi[j]) + "," + format_double(sp.wstar[j]) + "," +
                   std::to_string(sp.atoms_so_far[j]) + "\n";
    }

    res.report["scenario"] = s.name;
    res.report["replicas"] = R;
    nlohmann::json per_time = nlohmann::json::array();
    for (std::size_t j = 0; j < s.query_times.size(); ++j) {
        std::vector<double> xi, ws;
        for (const auto& sp : spines) {
            xi.push_back(sp.xi[j]);
            ws.push_back(sp.wstar[j]);
        }
        nlohmann::json e;
        e["time"] = s.query_times[j];
        e["xi"] = estimate_json(summarize(std::move(xi)));
        e["wstar"] = estimate_json(summarize(std::move(ws), {0.5, 0.99}));
        per_time.push_back(e);
    }
    res.report["spine"] = per_time;

    if (!opt.out_dir.empty()) write_text(opt.out_dir, "spine.csv", csv);
    return res;
}

// -------------------------------------------------------------------------
// lp

RunResult cmd_lp(const Scenario& s, const RunOptions& opt) {
    RunResult res;
    if (!s.has_lp) {
        res.exit_code = 2;
        res.warnings.push_back("lp: scenario has no lp section (p, q required)");
        return res;
    }
    const Triplet t = s.triplet();
    const LpReport rep = check_lp(t, s.lp_p, s.lp_q, /*probe_q=*/true);
    res.report["scenario"] = s.name;
    res.report["lp"] = lp_report_json(rep);

    McConfig cfg = s.mc_config(opt.jobs);
    const std::vector<double> grid = scenario_nums(s, "lp_grid", s.query_times);
    LpMomentResult mom = lp_moment_check(cfg, s.lp_p, grid);
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t j = 0; j < mom.times.size(); ++j) {
        nlohmann::json e = estimate_json(mom.estimates[j]);
        e["time"] = mom.times[j];
        arr.push_back(e);
    }
    res.report["moment_estimates"] = arr;
    res.report["certified"] = rep.certified;
    if (!rep.certified)
        res.report["note"] =
            "not certified: the p-th moment of W may be unbounded; the estimator "
            "variance is not controlled";
    return res;
}

// -------------------------------------------------------------------------
// verify

FunctionalSpec parse_functional(const std::string& name) {
    if (name == "one") return {FunctionalKind::One, 0.0};
    if (name == "min1_w") return {FunctionalKind::MinOneW, 0.0};
    if (name.rfind("count_le_", 0) == 0)
        return {FunctionalKind::CountLe, std::stod(name.substr(9))};
    throw ScenarioError({"unknown change-of-measure functional '" + name + "'"});
}

RunResult cmd_verify(const Scenario& s, const RunOptions& opt) {
    RunResult res;
    const Triplet t = s.triplet();
    const CriterionReport checker = check_criterion(t);
    res.report["scenario"] = s.name;
    res.report["checker"] = criterion_report_json(checker);

    McConfig cfg = s.mc_config(opt.jobs);
    nlohmann::json experiments = nlohmann::json::array();
    RawCsv raw;
    bool all_pass = true;
    nlohmann::json tolerances = nlohmann::json::array();

    auto note_tolerance = [&](const std::string& name, const std::string& rule,
                              double false_alarm) {
        nlohmann::json j;
        j["experiment"] = name;
        j["rule"] = rule;
        j["per_test_false_alarm"] = false_alarm;
        tolerances.push_back(j);
    };

    for (const std::string& name : s.experiments) {
        nlohmann::json block;
        block["name"] = name;
        bool pass = true;

        if (name == "martingale_mean") {
            const double t_at = scenario_num(s, "martingale_t",
                                             s.query_times.empty() ? 1.0 : s.query_times.back());
            MartingaleMeanResult r = martingale_mean(cfg, t_at);
            block["t"] = t_at;
            block["estimate"] = estimate_json(r.estimate);
            block["overflowed"] = r.overflowed;
            const double tol = std::max(4.0 * r.estimate.std_error, 1e-12);
            block["tolerance"] = tol;
            pass = std::abs(r.estimate.mean - 1.0) <= tol && r.overflowed == 0;
            for (std::uint64_t i = 0; i < r.raw.size(); ++i)
                raw.add(name, format_double(t_at), i, r.raw[i]);
            note_tolerance(name, "|mean(W_t) - 1| <= 4 SE", 6.3e-5);
        } else if (name == "degeneracy") {
            const std::vector<double> grid = scenario_nums(s, "degeneracy_grid", s.query_times);
            const double thr = scenario_num(s, "degeneracy_threshold", 0.1);
            DegeneracyResult r = degeneracy_diagnostic(cfg, grid, thr);
            block["times"] = r.times;
            block["medians"] = r.medians;
            block["q90"] = r.q90;
            block["threshold"] = r.threshold;
            block["consistent_with_degeneracy"] = r.consistent_with_degeneracy;
            const bool expect_degenerate = checker.verdict == UIVerdict::Degenerate;
            pass = r.consistent_with_degeneracy == expect_degenerate;
            for (std::uint64_t i = 0; i < r.raw.size(); ++i)
                for (std::size_t j = 0; j < r.times.size(); ++j)
                    raw.add(name, format_double(r.times[j]), i, r.raw[i][j]);
            note_tolerance(name, "medians non-increasing; final median vs threshold",
                           0.0);
        } else if (name == "change_of_measure") {
            const auto functionals =
                scenario_strs(s, "com_functionals", {"one", "count_le_3", "min1_w"});
            const auto times = scenario_nums(s, "com_times", {1.0, 2.0});
            nlohmann::json combos = nlohmann::json::array();
            for (const auto& fname : functionals) {
                const FunctionalSpec f = parse_functional(fname);
                for (double tt : times) {
                    ChangeOfMeasureResult r = change_of_measure_check(cfg, f, tt);
                    nlohmann::json cj;
                    cj["functional"] = fname;
                    cj["t"] = tt;
                    cj["lhs"] = estimate_json(r.lhs);
                    cj["rhs"] = estimate_json(r.rhs);
                    cj["diff"] = estimate_json(r.diff);
                    cj["z"] = r.z;
                    const bool ok = std::abs(r.z) < 4.0;
                    cj["pass"] = ok;
                    pass = pass && ok;
                    combos.push_back(cj);
                    for (std::uint64_t i = 0; i < r.raw_lhs.size(); ++i) {
                        raw.add(name, "lhs:" + fname + ":" + format_double(tt), i,
                                r.raw_lhs[i]);
                        raw.add(name, "rhs:" + fname + ":" + format_double(tt), i,
                                r.raw_rhs[i]);
                    }
                }
            }
            block["combos"] = combos;
            note_tolerance(name, "|z| < 4 on paired differences", 6.3e-5);
        } else if (name == "yule_limit_law") {
            const double t_at = scenario_num(s, "yule_t", 8.0);
            YuleLimitResult r = yule_limit_law_check(cfg, t_at);
            block["t"] = t_at;
            block["ks_statistic"] = r.ks.statistic;
            block["p_value"] = r.ks.p_value;
            block["sample"] = estimate_json(r.sample);
            pass = r.ks.p_value > 0.001;
            for (std::uint64_t i = 0; i < r.raw.size(); ++i)
                raw.add(name, format_double(t_at), i, r.raw[i]);
            note_tolerance(name, "KS p-value > 0.001 against Exponential(1)", 1e-3);
        } else if (name == "lp_moment") {
            const std::vector<double> grid = scenario_nums(s, "lp_grid", s.query_times);
            LpMomentResult r = lp_moment_check(cfg, s.lp_p, grid);
            const LpReport lp = check_lp(t, s.lp_p, s.lp_q);
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t j = 0; j < r.times.size(); ++j) {
                nlohmann::json e = estimate_json(r.estimates[j]);
                e["time"] = r.times[j];
                arr.push_back(e);
            }
            block["p"] = s.lp_p;
            block["estimates"] = arr;
            block["certified"] = lp.certified;
            if (lp.certified && r.estimates.size() >= 3) {
                // bounded martingale: the moment increments must taper off
                for (std::size_t j = 2; j < r.estimates.size(); ++j) {
                    const double inc1 = r.estimates[j - 1].mean - r.estimates[j - 2].mean;
                    const double inc2 = r.estimates[j].mean - r.estimates[j - 1].mean;
                    const double slack = 4.0 * (r.estimates[j].std_error +
                                                r.estimates[j - 1].std_error +
                                                r.estimates[j - 2].std_error);
                    if (inc2 > inc1 + slack) pass = false;
                }
            }
            if (!lp.certified) block["flag"] = "non-certifiable: cond3 or growth clause fails";
            for (std::uint64_t i = 0; i < r.raw.size(); ++i)
                for (std::size_t j = 0; j < r.times.size(); ++j)
                    raw.add(name, format_double(r.times[j]), i, r.raw[i][j]);
            note_tolerance(name, "certified: moment increments taper within 4 SE", 1e-4);
        } else if (name == "spine_law") {
            const double horizon = scenario_num(s, "spine_horizon", 50.0);
            const std::uint64_t slope_reps = scenario_u64(s, "spine_slope_replicas", 3000);
            const std::uint64_t cf_reps = scenario_u64(s, "spine_cf_replicas", 100000);
            const std::vector<double> rs = scenario_nums(s, "spine_rs", {0.5, 1.0, 2.0});
            SpineLawResult r = spine_law_check(cfg, horizon, slope_reps, cf_reps, rs);
            block["horizon"] = horizon;
            block["slope"] = estimate_json(r.slope);
            block["kappa_prime"] = r.kappa_prime;
            block["z_slope"] = r.z_slope;
            pass = std::abs(r.z_slope) < 3.0;
            nlohmann::json cfj = nlohmann::json::array();
            for (const auto& pt : r.charfn) {
                nlohmann::json pj;
                pj["r"] = pt.r;
                pj["empirical_re"] = pt.empirical.real();
                pj["empirical_im"] = pt.empirical.imag();
                pj["theory_re"] = pt.theoretical.real();
                pj["theory_im"] = pt.theoretical.imag();
                pj["z_re"] = pt.z_re;
                pj["z_im"] = pt.z_im;
                const bool ok = std::abs(pt.z_re) < 5.0 && std::abs(pt.z_im) < 5.0;
                pj["pass"] = ok;
                pass = pass && ok;
                cfj.push_back(pj);
            }
            block["charfn"] = cfj;
            for (std::uint64_t i = 0; i < r.raw_slopes.size(); ++i)
                raw.add(name, "slope", i, r.raw_slopes[i]);
            note_tolerance(name, "slope within 3 SE; characteristic function within 5 SE",
                           3e-3);
        } else if (name == "wstar") {
            const double t1 = scenario_num(s, "wstar_t1", 10.0);
            const double t2 = scenario_num(s, "wstar_t2", 20.0);
            McConfig wcfg = cfg;
            wcfg.replicas = scenario_u64(s, "wstar_replicas", cfg.replicas);
            WstarStabilityResult r = wstar_stability_check(wcfg, t1, t2);
            block["t1"] = t1;
            block["t2"] = t2;
            block["q99_t1"] = r.q99_t1;
            block["q99_t2"] = r.q99_t2;
            block["rel_change"] = r.rel_change;
            block["nondecreasing"] = r.nondecreasing_all;
            pass = r.nondecreasing_all && r.rel_change < 0.2;
            for (std::uint64_t i = 0; i < r.raw_t1.size(); ++i) {
                raw.add(name, format_double(t1), i, r.raw_t1[i]);
                raw.add(name, format_double(t2), i, r.raw_t2[i]);
            }
            note_tolerance(name, "99th pct of W* stable (<20%) and pathwise monotone",
                           0.0);
        } else if (name == "coupling") {
            const std::vector<double> truncs =
                scenario_nums(s, "coupling_truncations", {1.0, 2.0, 4.0});
            McConfig ccfg = cfg;
            ccfg.replicas = scenario_u64(s, "coupling_replicas", 20);
            CouplingResult r = truncation_coupling_check(ccfg, truncs, s.query_times);
            block["truncations"] = r.truncations;
            block["comparisons"] = r.comparisons;
            block["violations"] = r.violations;
            block["max_violation"] = r.max_violation;
            pass = r.monotone;
            for (std::uint64_t i = 0; i < r.raw_violations.size(); ++i)
                raw.add(name, "violations", i, static_cast<double>(r.raw_violations[i]));
            note_tolerance(name, "pathwise monotone in the truncation level", 0.0);
        } else if (name == "tilted_growth") {
            const std::vector<double> grid = scenario_nums(s, "growth_grid", s.query_times);
            const double bound = scenario_num(s, "growth_bound", 10.0);
            McConfig gcfg = cfg;
            gcfg.replicas = scenario_u64(s, "growth_replicas", 300);
            TiltedGrowthResult r = tilted_growth_check(gcfg, grid, bound);
            block["times"] = r.times;
            block["fractions"] = r.fractions;
            block["bound"] = r.bound;
            pass = r.nondecreasing;
            for (std::uint64_t i = 0; i < r.raw_final_max.size(); ++i)
                raw.add(name, "final_max", i, r.raw_final_max[i]);
            note_tolerance(name, "exceedance fraction non-decreasing in t", 0.0);
        }

        block["pass"] = pass;
        all_pass = all_pass && pass;
        experiments.push_back(block);
    }

    res.report["experiments"] = experiments;
    res.report["all_pass"] = all_pass;
    if (opt.tolerance_report) res.report["tolerances"] = tolerances;
    res.exit_code = all_pass ? 0 : 1;
    if (!all_pass) res.warnings.push_back("verify: empirical results contradict the checker");

    if (!opt.out_dir.empty()) write_text(opt.out_dir, "raw.csv", raw.body);
    return res;
}

}  // namespace

nlohmann::json criterion_report_json(const CriterionReport& rep) {
    nlohmann::json j;
    j["admissible_4"] = rep.admissible_4;
    j["admissible_5"] = rep.admissible_5;
    j["cond4"] = integral_json(rep.cond4);
    j["cond5"] = integral_json(rep.cond5);
    j["kappa_theta"] = rep.kappa_theta;
    j["kappa_prime_theta"] = rep.kappa_prime_theta;
    j["cond1"] = rep.cond1;
    j["cond1_margin"] = rep.cond1_margin;
    j["boundary"] = rep.boundary;
    j["cond2"] = integral_json(rep.cond2);
    j["verdict"] = rep.verdict_name();
    return j;
}

nlohmann::json lp_report_json(const LpReport& rep) {
    nlohmann::json j;
    j["p"] = rep.p;
    j["q"] = rep.q;
    j["kappa_p_theta"] = rep.kappa_p;
    j["growth_margin"] = rep.kappa_ptheta_margin;
    j["growth_ok"] = rep.growth_ok;
    j["boundary"] = rep.boundary;
    j["cond3"] = integral_json(rep.cond3);
    j["q_ok"] = rep.q_ok;
    j["kappa_q_theta"] = rep.kappa_q;
    j["certified"] = rep.certified;
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : rep.probes) {
        nlohmann::json pj;
        pj["q"] = p.q;
        pj["kappa_finite"] = p.kappa_q == Verdict::Finite;
        if (p.kappa_q == Verdict::Finite) pj["kappa"] = p.kappa_q_value;
        probes.push_back(pj);
    }
    j["q_probes"] = probes;
    return j;
}

RunResult run_command(const std::string& command, const Scenario& scenario,
                      const RunOptions& options) {
    const Scenario s = apply_overrides(scenario, options);
    RunResult res;
    if (command == "criteria")
        res = cmd_criteria(s, options);
    else if (command == "simulate")
        res = cmd_simulate(s, options);
    else if (command == "spine")
        res = cmd_spine(s, options);
    else if (command == "verify")
        res = cmd_verify(s, options);
    else if (command == "lp")
        res = cmd_lp(s, options);
    else {
        res.exit_code = 2;
        res.warnings.push_back("unknown command '" + command + "'");
        return res;
    }
    if (!options.out_dir.empty()) {
        write_text(options.out_dir, "report.json", res.report.dump(2) + "\n");
        write_text(options.out_dir, "manifest.json", manifest_json(command, s).dump(2) + "\n");
        write_text(options.out_dir, "scenario.json", s.canonical_text());
    }
    return res;
}

}  // namespace blp
