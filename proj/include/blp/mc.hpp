#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "blp/engine.hpp"
#include "blp/spine.hpp"

namespace blp {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;
    std::map<double, double> quantiles;
};

// mean, standard error and the requested quantiles (type-7 interpolation)
Estimate summarize(std::vector<double> values, const std::vector<double>& probs = {});

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// two-sided Kolmogorov-Smirnov against a continuous reference CDF,
// asymptotic p-value
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

// ---------------------------------------------------------------------------

struct McConfig {
    Triplet triplet;
    double truncation = kInf;
    double motion_cutoff = 0.0;
    Caps caps;
    std::uint64_t seed = 1;
    std::uint64_t replicas = 1000;
    int jobs = 0;  // 0: hardware concurrency
};

// run fn(replica) for each replica index, fanned out over jobs threads;
// callers store results by index so reductions stay deterministic
void parallel_replicas(std::uint64_t replicas, int jobs,
                       const std::function<void(std::uint64_t)>& fn);

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica);

struct MartingaleMeanResult {
    double t = 0.0;
    Estimate estimate;
    std::uint64_t overflowed = 0;
    std::vector<double> raw;  // per-replica W_t (overflowed replicas excluded)
};
// E[W_t] = 1 (mean-one martingale)
MartingaleMeanResult martingale_mean(const McConfig& cfg, double t);

struct DegeneracyResult {
    std::vector<double> times;
    std::vector<double> medians;
    std::vector<double> q90;
    bool medians_nonincreasing = false;
    double final_median = 0.0;
    double threshold = 0.0;
    bool consistent_with_degeneracy = false;
    std::uint64_t overflowed = 0;
    std::vector<std::vector<double>> raw;  // raw[replica][grid index]
};
// quantile diagnostics for W_inf = 0: medians must fall, never means
DegeneracyResult degeneracy_diagnostic(const McConfig& cfg, std::vector<double> grid,
                                       double final_median_threshold);

enum class FunctionalKind { One, CountLe, MinOneW };
struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::One;
    double k = 0.0;  // threshold for CountLe
};
double eval_functional(const FunctionalSpec& f, std::uint64_t n_particles, double w);
const char* functional_name(FunctionalKind k);

struct ChangeOfMeasureResult {
    Estimate lhs;   // E[W_t F(Z_t)]
    Estimate rhs;   // E[F(hat Z_t)]
    Estimate diff;  // paired differences (same replica seed on both sides)
    double z = 0.0;
    double t = 0.0;
    std::vector<double> raw_lhs;
    std::vector<double> raw_rhs;
};
// the spinal identity E[W_t F(Z_t)] = E[F(hat Z_t)] for bounded F
ChangeOfMeasureResult change_of_measure_check(const McConfig& cfg, const FunctionalSpec& f,
                                              double t);

struct YuleLimitResult {
    KsResult ks;
    Estimate sample;  // W_t across replicas
    double t = 0.0;
    std::vector<double> raw;
};
// classical oracle: for the Yule scenario W_t -> Exponential(1)
YuleLimitResult yule_limit_law_check(const McConfig& cfg, double t);

struct LpMomentResult {
    double p = 0.0;
    std::vector<double> times;
    std::vector<Estimate> estimates;  // E[W_t^p] per grid point
    std::uint64_t overflowed = 0;
    std::vector<std::vector<double>> raw;  // raw[replica][grid index]
};
LpMomentResult lp_moment_check(const McConfig& cfg, double p, std::vector<double> grid);

struct SpineLawResult {
    double horizon = 0.0;
    Estimate slope;        // xi_T / T across replicas
    double kappa_prime = 0.0;
    double z_slope = 0.0;
    struct CharPoint {
        double r = 0.0;
        std::complex<double> empirical;
        std::complex<double> theoretical;
        double se_re = 0.0, se_im = 0.0;
        double z_re = 0.0, z_im = 0.0;
    };
    std::vector<CharPoint> charfn;  // empirical E[e^{i r xi_1}] vs exp(Phi-hat(r))
    std::vector<double> raw_slopes;
};
SpineLawResult spine_law_check(const McConfig& cfg, double horizon,
                               std::uint64_t slope_replicas, std::uint64_t cf_replicas,
                               const std::vector<double>& rs);

struct WstarStabilityResult {
    double t1 = 0.0, t2 = 0.0;
    double q99_t1 = 0.0, q99_t2 = 0.0;
    double rel_change = 0.0;
    bool nondecreasing_all = true;  // W* pathwise non-decreasing at query times
    std::vector<double> raw_t1;
    std::vector<double> raw_t2;
};
WstarStabilityResult wstar_stability_check(const McConfig& cfg, double t1, double t2);

struct CouplingResult {
    std::vector<double> truncations;
    std::uint64_t comparisons = 0;
    std::uint64_t violations = 0;
    double max_violation = 0.0;  // worst relative excess of the coarser sum
    bool monotone = true;
    std::vector<std::uint64_t> raw_violations;  // per replica
};
// same seed, increasing truncation levels: the theta-weighted population sums
// must grow pathwise (censoring removes mass only); compared on the common
// unnormalized scale with 1e-12 relative slack for summation order
CouplingResult truncation_coupling_check(const McConfig& cfg,
                                         std::vector<double> truncations,
                                         std::vector<double> query_times);

struct TiltedGrowthResult {
    std::vector<double> times;
    std::vector<double> fractions;  // P(max over grid points <= t of hat W > bound)
    double bound = 0.0;
    bool nondecreasing = true;
    std::vector<double> raw_final_max;  // per-replica running max at the last grid point
};
// degenerate regimes: limsup hat-W = inf, so the exceedance fraction grows in t
TiltedGrowthResult tilted_growth_check(const McConfig& cfg, std::vector<double> grid,
                                       double bound);

}  // namespace blp
