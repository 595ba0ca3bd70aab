// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Replica counts, tolerances and seeds are pinned here; every
// statistical gate is a 3-5 SE test or a KS p-value as stated alongside it.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "blp/mc.hpp"
#include "blp/runner.hpp"
#include "blp/scenario.hpp"

using namespace blp;

namespace {

int failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %2d: %-28s %s  (%.1fs)\n", pass ? "PASS" : "FAIL", index,
                name, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

void run(int index, const char* name,
         const std::function<std::pair<bool, std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        auto [p, d] = body();
        pass = p;
        detail = d;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(index, name, pass, detail, secs);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

Triplet bbm(double theta) {
    return {1.0, 0.0, BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, 0.0})}}),
            theta};
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> criterion1_checker_exactness() {
    bool pass = true;
    for (double theta : {0.25, 0.7, 1.0, 1.3, 1.4142135623730951, 1.6, 2.0}) {
        if (std::abs(kappa(bbm(theta)).value - (0.5 * theta * theta + 1.0)) > 1e-12)
            pass = false;
        if (std::abs(kappa_prime(bbm(theta)).value - theta) > 1e-12) pass = false;
    }
    // bisect the verdict flip; Theorem 1 flips at theta* = sqrt(2 beta)
    double lo = 1.0, hi = 2.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (check_criterion(bbm(mid)).verdict == UIVerdict::UI ? lo : hi) = mid;
    }
    const double theta_star = std::sqrt(2.0);
    if (std::abs(0.5 * (lo + hi) - theta_star) > 1e-6) pass = false;
    // at the numerically critical point the margin is flagged as boundary
    CriterionReport at = check_criterion(bbm(theta_star));
    if (!at.boundary) pass = false;
    return {pass, fmt("flip at %.9f (theta*=%.9f), boundary flag %s",
                      0.5 * (lo + hi), theta_star, at.boundary ? "on" : "off")};
}

std::pair<bool, std::string> criterion2_heavy_checker() {
    Triplet heavy{0.0, 0.0, BranchingLevyMeasure::heavy_offspring(1.0), 1.0};
    CriterionReport rep = check_criterion(heavy);
    const bool pass = rep.admissible_4 && rep.admissible_5 && rep.cond1 &&
                      rep.cond2.verdict == Verdict::Divergent &&
                      rep.verdict == UIVerdict::Degenerate;
    return {pass, fmt("cond5=%.6f cond1 margin=%.4f cond2=%s -> %s", rep.cond5.value,
                      rep.cond1_margin,
                      rep.cond2.verdict == Verdict::Divergent ? "divergent" : "finite",
                      rep.verdict_name().c_str())};
}

std::pair<bool, std::string> criterion3_martingale_identity() {
    McConfig yule = builtin_scenario("yule").mc_config();
    yule.replicas = 5000;
    MartingaleMeanResult y = martingale_mean(yule, 6.0);
    const bool y_ok = std::abs(y.estimate.mean - 1.0) <= 4.0 * y.estimate.std_error;

    McConfig bbm_cfg = builtin_scenario("bbm-ui").mc_config();
    bbm_cfg.replicas = 3000;
    MartingaleMeanResult b = martingale_mean(bbm_cfg, 5.0);
    const bool b_ok = std::abs(b.estimate.mean - 1.0) <= 4.0 * b.estimate.std_error;

    return {y_ok && b_ok && y.overflowed == 0 && b.overflowed == 0,
            fmt("yule W_6: %.4f+-%.4f | bbm W_5: %.4f+-%.4f", y.estimate.mean,
                y.estimate.std_error, b.estimate.mean, b.estimate.std_error)};
}

std::pair<bool, std::string> criterion4_yule_limit_law() {
    McConfig cfg = builtin_scenario("yule").mc_config();
    cfg.replicas = 5000;
    YuleLimitResult ks = yule_limit_law_check(cfg, 8.0);
    bool pass = ks.ks.p_value > 0.001;

    LpMomentResult mom = lp_moment_check(cfg, 2.0, {2.0, 4.0, 6.0});
    std::string detail = fmt("KS p=%.4f;", ks.ks.p_value);
    for (std::size_t j = 0; j < mom.times.size(); ++j) {
        const double expected = 2.0 - std::exp(-mom.times[j]);
        const bool ok = std::abs(mom.estimates[j].mean - expected) <=
                        4.0 * mom.estimates[j].std_error;
        pass = pass && ok;
        detail += fmt(" E[W_%g^2]=%.3f(target %.3f)", mom.times[j],
                      mom.estimates[j].mean, expected);
    }
    return {pass, detail};
}

std::pair<bool, std::string> criterion5_degeneracy_cond1() {
    McConfig cfg = builtin_scenario("bbm-degenerate").mc_config();
    cfg.replicas = 500;
    DegeneracyResult r = degeneracy_diagnostic(cfg, {2.0, 4.0, 6.0, 8.0}, 0.1);
    const bool pass = r.medians_nonincreasing && r.final_median < 0.1;
    return {pass, fmt("medians %.3f %.3f %.3f %.3f (threshold 0.1)", r.medians[0],
                      r.medians[1], r.medians[2], r.medians[3])};
}

std::pair<bool, std::string> criterion6_degeneracy_cond2() {
    McConfig cfg = builtin_scenario("heavy-offspring-slow").mc_config();
    cfg.replicas = 2000;
    DegeneracyResult r = degeneracy_diagnostic(cfg, {10.0, 20.0, 30.0, 40.0, 50.0}, kInf);
    return {r.medians_nonincreasing,
            fmt("medians %.4f %.4f %.4f %.4f %.4f", r.medians[0], r.medians[1],
                r.medians[2], r.medians[3], r.medians[4])};
}

std::pair<bool, std::string> criterion7_spine_law() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"bbm-ui", "smalljump"}) {
        Scenario s = builtin_scenario(name);
        McConfig cfg = s.mc_config();
        SpineLawResult r = spine_law_check(cfg, 50.0, 4000, 100000, {0.5, 1.0, 2.0});
        if (std::abs(r.z_slope) >= 3.0) pass = false;
        double worst_cf = 0.0;
        for (const auto& pt : r.charfn) {
            worst_cf = std::max({worst_cf, std::abs(pt.z_re), std::abs(pt.z_im)});
            if (std::abs(pt.z_re) >= 5.0 || std::abs(pt.z_im) >= 5.0) pass = false;
        }
        detail += fmt("%s slope z=%.2f cf-z(max)=%.2f; ", name, r.z_slope, worst_cf);
    }
    return {pass, detail};
}

std::pair<bool, std::string> criterion8_spinal_decomposition() {
    bool pass = true;
    std::string detail;
    const std::vector<FunctionalSpec> fs = {{FunctionalKind::One, 0.0},
                                            {FunctionalKind::CountLe, 3.0},
                                            {FunctionalKind::MinOneW, 0.0}};
    for (const char* name : {"yule", "bbm-ui"}) {
        McConfig cfg = builtin_scenario(name).mc_config();
        cfg.replicas = 5000;
        double worst = 0.0;
        for (const auto& f : fs)
            for (double t : {1.0, 2.0}) {
                ChangeOfMeasureResult r = change_of_measure_check(cfg, f, t);
                worst = std::max(worst, std::abs(r.z));
                if (std::abs(r.z) >= 4.0) pass = false;
            }
        detail += fmt("%s max|z|=%.2f; ", name, worst);
    }
    return {pass, detail};
}

std::pair<bool, std::string> criterion9_truncation_coupling() {
    McConfig cfg = builtin_scenario("fragmentation").mc_config();
    cfg.replicas = 30;
    CouplingResult r =
        truncation_coupling_check(cfg, {1.0, 2.0, 4.0}, {0.2, 0.4, 0.6, 0.8});
    return {r.monotone, fmt("%llu comparisons, %llu violations",
                            static_cast<unsigned long long>(r.comparisons),
                            static_cast<unsigned long long>(r.violations))};
}

std::pair<bool, std::string> criterion10_wstar_stability() {
    // Stated gate: q99 of W* within 20% between t=10 and t=20. For BBM at
    // theta=1 the W* tail is Pareto(1) (sup of the mean-one exponential
    // spine martingale), and the true q99 still grows ~65% over this window
    // before saturating by t~40, so this gate cannot pass; the saturated
    // window is reported alongside for context. See the decisions ledger.
    McConfig cfg = builtin_scenario("bbm-ui").mc_config();
    cfg.replicas = 2000;
    WstarStabilityResult r = wstar_stability_check(cfg, 10.0, 20.0);
    const bool pass = r.nondecreasing_all && r.rel_change < 0.2;
    WstarStabilityResult sat = wstar_stability_check(cfg, 40.0, 80.0);
    return {pass, fmt("q99: %.1f -> %.1f (rel %.3f, gate <0.2), monotone %s; "
                      "saturated window 40->80: %.1f -> %.1f (rel %.3f)",
                      r.q99_t1, r.q99_t2, r.rel_change,
                      r.nondecreasing_all ? "yes" : "no", sat.q99_t1, sat.q99_t2,
                      sat.rel_change)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::pair<bool, std::string> criterion11_determinism() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "blp_acceptance_det";
    fs::remove_all(base);

    bool pass = true;
    std::string detail;
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"simulate", "fragmentation"}, {"spine", "smalljump"}, {"criteria", "bbm-ui"}};
    for (const auto& [cmd, scen] : runs) {
        Scenario s = builtin_scenario(scen);
        s.replicas = std::min<std::uint64_t>(s.replicas, 50);
        s.doc["replicas"] = s.replicas;
        RunOptions opt;
        opt.jobs = 2;
        std::vector<std::string> dirs;
        for (int i = 0; i < 2; ++i) {
            opt.out_dir = (base / (cmd + scen + std::to_string(i))).string();
            RunResult res = run_command(cmd, s, opt);
            if (res.exit_code != 0) pass = false;
            dirs.push_back(opt.out_dir);
        }
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            const auto name = entry.path().filename();
            if (slurp(entry.path()) != slurp(fs::path(dirs[1]) / name)) {
                pass = false;
                detail += fmt("%s/%s differs; ", cmd.c_str(), name.string().c_str());
            }
        }
    }
    fs::remove_all(base);
    if (detail.empty()) detail = "byte-identical artifacts across reruns";
    return {pass, detail};
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    run(1, "checker exactness (BBM)", criterion1_checker_exactness);
    run(2, "heavy-offspring checker", criterion2_heavy_checker);
    run(3, "martingale identity", criterion3_martingale_identity);
    run(4, "Yule limit law", criterion4_yule_limit_law);
    run(5, "degeneracy (cond1 fails)", criterion5_degeneracy_cond1);
    run(6, "degeneracy (cond2 fails)", criterion6_degeneracy_cond2);
    run(7, "spine law", criterion7_spine_law);
    run(8, "spinal decomposition", criterion8_spinal_decomposition);
    run(9, "truncation coupling", criterion9_truncation_coupling);
    run(10, "W* boundedness (UI)", criterion10_wstar_stability);
    run(11, "determinism", criterion11_determinism);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures;
}
