#include "blp/mc.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace blp {

Estimate summarize(std::vector<double> values, const std::vector<double>& probs) {
    Estimate out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        const double term = v - comp;
        const double s = sum + term;
        comp = (s - sum) - term;
        sum = s;
    }
    out.mean = sum / static_cast<double>(out.n);
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    if (out.n > 1)
        out.std_error = std::sqrt(ss / static_cast<double>(out.n - 1)) /
                        std::sqrt(static_cast<double>(out.n));
    if (!probs.empty()) {
        std::sort(values.begin(), values.end());
        for (double p : probs) {
            const double h = (static_cast<double>(values.size()) - 1.0) * p;
            const std::size_t lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, values.size() - 1);
            out.quantiles[p] = values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
        }
    }
    return out;
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    KsResult out;
    if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = cdf(sample[i]);
        d = std::max(d, std::abs(F - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
    }
    out.statistic = d;
    // asymptotic Kolmogorov distribution with Stephens' finite-n correction;
    // the alternating series converges only for large lambda, so switch to the
    // theta-function form below 1.18 (Marsaglia's crossover)
    const double sqrt_n = std::sqrt(n);
    const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    double p;
    if (lambda < 1.18) {
        const double t = std::exp(-3.14159265358979323846 * 3.14159265358979323846 /
                                  (8.0 * lambda * lambda));
        const double cdf = std::sqrt(2.0 * 3.14159265358979323846) / lambda *
                           (t + std::pow(t, 9) + std::pow(t, 25) + std::pow(t, 49));
        p = 1.0 - cdf;
    } else {
        p = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                                std::exp(-2.0 * k * k * lambda * lambda);
            p += term;
            if (std::abs(term) < 1e-12) break;
        }
    }
    out.p_value = std::clamp(p, 0.0, 1.0);
    return out;
}

void parallel_replicas(std::uint64_t replicas, int jobs,
                       const std::function<void(std::uint64_t)>& fn) {
    unsigned n_jobs = jobs > 0 ? static_cast<unsigned>(jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
    n_jobs = std::min<std::uint64_t>(n_jobs, std::max<std::uint64_t>(1, replicas));
    if (n_jobs <= 1) {
        for (std::uint64_t r = 0; r < replicas; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_jobs);
    for (unsigned j = 0; j < n_jobs; ++j) {
        pool.emplace_back([&, j] {
            for (std::uint64_t r = j; r < replicas; r += n_jobs) fn(r);
        });
    }
    for (auto& th : pool) th.join();
}

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) {
    return derive_key(master, replica, 0x52'45'50'4cULL);
}

namespace {

SimParams make_sim_params(const McConfig& cfg, std::vector<double> query_times,
                          std::uint64_t replica) {
    SimParams p;
    p.triplet = cfg.triplet;
    p.horizon = query_times.empty() ? 0.0 : *std::max_element(query_times.begin(),
                                                              query_times.end());
    p.query_times = std::move(query_times);
    p.truncation = cfg.truncation;
    p.motion_cutoff = cfg.motion_cutoff;
    p.caps = cfg.caps;
    p.seed = replica_seed(cfg.seed, replica);
    return p;
}

SpineParams make_spine_params(const McConfig& cfg, std::vector<double> query_times,
                              std::uint64_t replica) {
    SpineParams p;
    p.triplet = cfg.triplet;
    p.horizon = query_times.empty() ? 0.0 : *std::max_element(query_times.begin(),
                                                              query_times.end());
    p.query_times = std::move(query_times);
    p.truncation = cfg.truncation;
    p.motion_cutoff = cfg.motion_cutoff;
    p.seed = replica_seed(cfg.seed, replica);
    return p;
}

}  // namespace

MartingaleMeanResult martingale_mean(const McConfig& cfg, double t) {
    std::vector<double> w(cfg.replicas);
    std::vector<std::uint8_t> bad(cfg.replicas, 0);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        Trajectory traj = simulate(make_sim_params(cfg, {t}, r));
        w[r] = traj.martingale[0];
        bad[r] = traj.flagged[0] ? 1 : 0;
    });
    MartingaleMeanResult out;
    out.t = t;
    std::vector<double> clean;
    clean.reserve(cfg.replicas);
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
        if (bad[r])
            ++out.overflowed;
        else
            clean.push_back(w[r]);
    }
    out.raw = clean;
    out.estimate = summarize(std::move(clean), {0.05, 0.25, 0.5, 0.75, 0.95});
    return out;
}

DegeneracyResult degeneracy_diagnostic(const McConfig& cfg, std::vector<double> grid,
                                       double final_median_threshold) {
    std::sort(grid.begin(), grid.end());
    std::vector<std::vector<double>> w(cfg.replicas);
    std::vector<std::uint8_t> bad(cfg.replicas, 0);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        Trajectory traj = simulate(make_sim_params(cfg, grid, r));
        w[r] = traj.martingale;
        bad[r] = traj.overflow ? 1 : 0;
    });
    DegeneracyResult out;
    out.times = grid;
    out.threshold = final_median_threshold;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> col;
        col.reserve(cfg.replicas);
        for (std::uint64_t r = 0; r < cfg.replicas; ++r)
            if (!bad[r]) col.push_back(w[r][j]);
        Estimate e = summarize(std::move(col), {0.5, 0.9});
        out.medians.push_back(e.quantiles[0.5]);
        out.q90.push_back(e.quantiles[0.9]);
    }
    for (std::uint64_t r = 0; r < cfg.replicas; ++r)
        if (bad[r]) ++out.overflowed;
    out.raw = w;
    out.medians_nonincreasing = true;
    for (std::size_t j = 1; j < out.medians.size(); ++j)
        if (out.medians[j] > out.medians[j - 1] + 1e-12) out.medians_nonincreasing = false;
    out.final_median = out.medians.empty() ? 0.0 : out.medians.back();
    out.consistent_with_degeneracy =
        out.medians_nonincreasing && out.final_median < final_median_threshold;
    return out;
}

double eval_functional(const FunctionalSpec& f, std::uint64_t n_particles, double w) {
    switch (f.kind) {
        case FunctionalKind::One: return 1.0;
        case FunctionalKind::CountLe:
            return static_cast<double>(n_particles) <= f.k ? 1.0 : 0.0;
        case FunctionalKind::MinOneW: return std::min(1.0, w);
    }
    return 0.0;
}

const char* functional_name(FunctionalKind k) {
    switch (k) {
        case FunctionalKind::One: return "one";
        case FunctionalKind::CountLe: return "count_le";
        case FunctionalKind::MinOneW: return "min1_w";
    }
    return "?";
}

ChangeOfMeasureResult change_of_measure_check(const McConfig& cfg, const FunctionalSpec& f,
                                              double t) {
    std::vector<double> lhs(cfg.replicas), rhs(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        Trajectory z = simulate(make_sim_params(cfg, {t}, r));
        lhs[r] = z.martingale[0] * eval_functional(f, z.n_particles[0], z.martingale[0]);

        TiltedSystemParams tp;
        tp.triplet = cfg.triplet;
        tp.horizon = t;
        tp.query_times = {t};
        tp.truncation = cfg.truncation;
        tp.motion_cutoff = cfg.motion_cutoff;
        tp.caps = cfg.caps;
        tp.seed = replica_seed(cfg.seed, r);  // paired with the Z run
        Trajectory zh = simulate_tilted_system(tp);
        rhs[r] = eval_functional(f, zh.n_particles[0], zh.martingale[0]);
    });
    ChangeOfMeasureResult out;
    out.t = t;
    std::vector<double> diff(cfg.replicas);
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) diff[r] = lhs[r] - rhs[r];
    out.raw_lhs = lhs;
    out.raw_rhs = rhs;
    out.lhs = summarize(std::move(lhs));
    out.rhs = summarize(std::move(rhs));
    out.diff = summarize(std::move(diff));
    out.z = out.diff.std_error > 0.0 ? out.diff.mean / out.diff.std_error : 0.0;
    return out;
}

YuleLimitResult yule_limit_law_check(const McConfig& cfg, double t) {
    std::vector<double> w(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        Trajectory traj = simulate(make_sim_params(cfg, {t}, r));
        w[r] = traj.martingale[0];
    });
    YuleLimitResult out;
    out.t = t;
    out.ks = ks_test(w, [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); });
    out.raw = w;
    out.sample = summarize(std::move(w), {0.5});
    return out;
}

LpMomentResult lp_moment_check(const McConfig& cfg, double p, std::vector<double> grid) {
    std::sort(grid.begin(), grid.end());
    std::vector<std::vector<double>> wp(cfg.replicas);
    std::vector<std::uint8_t> bad(cfg.replicas, 0);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        Trajectory traj = simulate(make_sim_params(cfg, grid, r));
        wp[r].reserve(grid.size());
        for (double w : traj.martingale) wp[r].push_back(std::pow(w, p));
        bad[r] = traj.overflow ? 1 : 0;
    });
    LpMomentResult out;
    out.p = p;
    out.times = grid;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> col;
        for (std::uint64_t r = 0; r < cfg.replicas; ++r)
            if (!bad[r]) col.push_back(wp[r][j]);
        out.estimates.push_back(summarize(std::move(col)));
    }
    for (std::uint64_t r = 0; r < cfg.replicas; ++r)
        if (bad[r]) ++out.overflowed;
    out.raw = wp;
    return out;
}

SpineLawResult spine_law_check(const McConfig& cfg, double horizon,
                               std::uint64_t slope_replicas, std::uint64_t cf_replicas,
                               const std::vector<double>& rs) {
    SpineLawResult out;
    out.horizon = horizon;

    const Triplet eff{cfg.triplet.sigma2, cfg.triplet.a,
                      cfg.triplet.measure.with_truncation(cfg.truncation)
                          .with_motion_cutoff(cfg.motion_cutoff),
                      cfg.triplet.theta};
    out.kappa_prime = kappa_prime(eff).value;

    std::vector<double> slopes(slope_replicas);
    parallel_replicas(slope_replicas, cfg.jobs, [&](std::uint64_t r) {
        SpineTrajectory s = simulate_spine(make_spine_params(cfg, {horizon}, r));
        slopes[r] = s.xi[0] / horizon;
    });
    out.raw_slopes = slopes;
    out.slope = summarize(std::move(slopes));
    out.z_slope = out.slope.std_error > 0.0
                      ? (out.slope.mean - out.kappa_prime) / out.slope.std_error
                      : 0.0;

    std::vector<double> xi1(cf_replicas);
    const std::uint64_t cf_offset = 1ULL << 40;  // disjoint from the slope replicas
    parallel_replicas(cf_replicas, cfg.jobs, [&](std::uint64_t r) {
        SpineTrajectory s = simulate_spine(make_spine_params(cfg, {1.0}, cf_offset + r));
        xi1[r] = s.xi[0];
    });
    for (double r : rs) {
        SpineLawResult::CharPoint pt;
        pt.r = r;
        std::vector<double> re(cf_replicas), im(cf_replicas);
        for (std::uint64_t i = 0; i < cf_replicas; ++i) {
            re[i] = std::cos(r * xi1[i]);
            im[i] = std::sin(r * xi1[i]);
        }
        Estimate ere = summarize(std::move(re));
        Estimate eim = summarize(std::move(im));
        pt.empirical = {ere.mean, eim.mean};
        const ComplexIntegral phi = spine_exponent(eff, r);
        pt.theoretical = std::exp(phi.value);
        pt.se_re = ere.std_error;
        pt.se_im = eim.std_error;
        pt.z_re = pt.se_re > 0.0
                      ? (pt.empirical.real() - pt.theoretical.real()) / pt.se_re
                      : 0.0;
        pt.z_im = pt.se_im > 0.0
                      ? (pt.empirical.imag() - pt.theoretical.imag()) / pt.se_im
                      : 0.0;
        out.charfn.push_back(pt);
    }
    return out;
}

WstarStabilityResult wstar_stability_check(const McConfig& cfg, double t1, double t2) {
    std::vector<double> w1(cfg.replicas), w2(cfg.replicas);
    std::vector<std::uint8_t> ok(cfg.replicas, 1);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        SpineTrajectory s = simulate_spine(make_spine_params(cfg, {t1, t2}, r));
        w1[r] = s.wstar[0];
        w2[r] = s.wstar[1];
        for (std::size_t j = 1; j < s.wstar.size(); ++j)
            if (s.wstar[j] < s.wstar[j - 1]) ok[r] = 0;
    });
    WstarStabilityResult out;
    out.t1 = t1;
    out.t2 = t2;
    out.raw_t1 = w1;
    out.raw_t2 = w2;
    Estimate e1 = summarize(std::move(w1), {0.99});
    Estimate e2 = summarize(std::move(w2), {0.99});
    out.q99_t1 = e1.quantiles[0.99];
    out.q99_t2 = e2.quantiles[0.99];
    out.rel_change = std::abs(out.q99_t2 - out.q99_t1) / std::max(1e-300, out.q99_t1);
    for (auto v : ok)
        if (!v) out.nondecreasing_all = false;
    return out;
}

CouplingResult truncation_coupling_check(const McConfig& cfg,
                                         std::vector<double> truncations,
                                         std::vector<double> query_times) {
    std::sort(truncations.begin(), truncations.end());
    std::sort(query_times.begin(), query_times.end());
    CouplingResult out;
    out.truncations = truncations;
    std::vector<std::uint64_t> viol(cfg.replicas, 0);
    std::vector<double> worst(cfg.replicas, 0.0);
    std::vector<std::uint64_t> counts(cfg.replicas, 0);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        std::vector<std::vector<double>> sums;
        for (double n : truncations) {
            McConfig c = cfg;
            c.truncation = n;
            Trajectory traj = simulate(make_sim_params(c, query_times, r));
            std::vector<double> s(traj.martingale.size());
            for (std::size_t j = 0; j < s.size(); ++j)
                s[j] = traj.martingale[j] *
                       std::exp(traj.query_times[j] * traj.kappa_used);
            sums.push_back(std::move(s));
        }
        for (std::size_t i = 1; i < sums.size(); ++i) {
            for (std::size_t j = 0; j < query_times.size(); ++j) {
                ++counts[r];
                const double coarse = sums[i - 1][j];
                const double fine = sums[i][j];
                const double slack = 1e-12 * std::max(1.0, fine);
                if (coarse > fine + slack) {
                    ++viol[r];
                    worst[r] = std::max(worst[r], (coarse - fine) / std::max(1.0, fine));
                }
            }
        }
    });
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
        out.comparisons += counts[r];
        out.violations += viol[r];
        out.max_violation = std::max(out.max_violation, worst[r]);
    }
    out.raw_violations = viol;
    out.monotone = out.violations == 0;
    return out;
}

TiltedGrowthResult tilted_growth_check(const McConfig& cfg, std::vector<double> grid,
                                       double bound) {
    std::sort(grid.begin(), grid.end());
    std::vector<std::vector<double>> wmax(cfg.replicas);
    parallel_replicas(cfg.replicas, cfg.jobs, [&](std::uint64_t r) {
        TiltedSystemParams tp;
        tp.triplet = cfg.triplet;
        tp.horizon = grid.back();
        tp.query_times = grid;
        tp.truncation = cfg.truncation;
        tp.motion_cutoff = cfg.motion_cutoff;
        tp.caps = cfg.caps;
        tp.seed = replica_seed(cfg.seed, r);
        Trajectory traj = simulate_tilted_system(tp);
        double running = 0.0;
        wmax[r].reserve(grid.size());
        for (double w : traj.martingale) {
            running = std::max(running, w);
            wmax[r].push_back(running);
        }
    });
    TiltedGrowthResult out;
    out.times = grid;
    out.bound = bound;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::uint64_t count = 0;
        for (std::uint64_t r = 0; r < cfg.replicas; ++r)
            if (wmax[r][j] > bound) ++count;
        out.fractions.push_back(static_cast<double>(count) /
                                static_cast<double>(cfg.replicas));
    }
    for (std::uint64_t r = 0; r < cfg.replicas; ++r)
        out.raw_final_max.push_back(wmax[r].empty() ? 0.0 : wmax[r].back());
    for (std::size_t j = 1; j < out.fractions.size(); ++j)
        if (out.fractions[j] < out.fractions[j - 1]) out.nondecreasing = false;
    return out;
}

}  // namespace blp
