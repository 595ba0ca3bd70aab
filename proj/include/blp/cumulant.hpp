#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "blp/measure.hpp"

namespace blp {

// The full model: Brownian variance, drift, branching Levy measure and the
// weight parameter theta (fixed once per model).
struct Triplet {
    double sigma2 = 0.0;
    double a = 0.0;
    BranchingLevyMeasure measure;
    double theta = 0.0;
};

struct KappaValue {
    Verdict verdict = Verdict::Finite;
    double value = 0.0;
    double error_bound = 0.0;
};

// kappa(theta) for the triplet's own theta
KappaValue kappa(const Triplet& t);
// kappa at a different real argument (used by the L^p clauses)
KappaValue kappa_at(const Triplet& t, double z_real);
// kappa(theta + i r); the only complex arguments the theory needs
ComplexIntegral kappa_complex(const Triplet& t, double r);

KappaValue kappa_prime(const Triplet& t);

// characteristic exponent Phi(r) of the single-particle motion
ComplexIntegral levy_exponent(const Triplet& t, double r);

// Phi-hat(r) = kappa(theta + i r) - kappa(theta)
ComplexIntegral spine_exponent(const Triplet& t, double r);
// the same quantity from the Levy-Khintchine form of the spine
// characteristics; the two must agree to ~1e-10 (identity test)
ComplexIntegral spine_exponent_direct(const Triplet& t, double r);

// a-hat
KappaValue spine_drift(const Triplet& t);

// drift of the simulated motion between events: a - integral of
// x1 1_{|x1|<1} over the effective event set (finite for effective measures)
KappaValue motion_drift_effective(const Triplet& t);
// spine version: a + theta sigma^2 - same compensation integral
KappaValue spine_drift_effective(const Triplet& t);

// ---------------------------------------------------------------------------

enum class UIVerdict { UI, Degenerate, Undetermined };

// margins within this band (scaled by max(1,|kappa|)) are flagged as numerically
// on the boundary; Theorem 1 is sharp at equality
inline constexpr double kBoundaryTol = 1e-12;

struct CriterionReport {
    bool admissible_4 = false;
    bool admissible_5 = false;
    IntegralValue cond4;
    IntegralValue cond5;
    double kappa_theta = 0.0;
    double kappa_prime_theta = 0.0;
    bool cond1 = false;
    double cond1_margin = 0.0;  // theta kappa'(theta) - kappa(theta), negative iff cond1
    bool boundary = false;      // |margin| below numerical resolution
    IntegralValue cond2;
    UIVerdict verdict = UIVerdict::Undetermined;

    std::string verdict_name() const;
};

// decide uniform integrability of W from the triplet (Theorem 1)
CriterionReport check_criterion(const Triplet& t);

struct LpProbe {
    double q = 0.0;
    Verdict kappa_q = Verdict::Undetermined;
    double kappa_q_value = 0.0;
};

struct LpReport {
    double p = 0.0;
    double q = 0.0;
    double kappa_p = 0.0;
    double kappa_ptheta_margin = 0.0;  // kappa(p theta) - p kappa(theta)
    bool growth_ok = false;            // kappa(p theta) < p kappa(theta), strict
    bool boundary = false;
    IntegralValue cond3;
    bool q_ok = false;  // kappa(q theta) < inf
    double kappa_q = 0.0;
    bool certified = false;  // all three clauses hold
    std::vector<LpProbe> probes;
};

// Proposition 1: L^p boundedness certificate; probes additional q values when
// `probe_q` is set (the paper gives no guidance on choosing q)
LpReport check_lp(const Triplet& t, double p, double q, bool probe_q = false);

// independent evaluation of the tail-integral dichotomy at scale c;
// finite exactly when cond2 is (the dichotomy is c-independent)
IntegralValue tail_integral_dichotomy(const Triplet& t, double c);

}  // namespace blp
