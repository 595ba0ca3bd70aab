#include "blp/cumulant.hpp"

#include <cmath>

namespace blp {

namespace {

KappaValue kappa_real_at(const Triplet& t, double z) {
    ComplexIntegral integral =
        integrate_measure_complex(t.measure, ComplexKind::Kappa, {z, 0.0}, t.theta, 0.0);
    KappaValue out;
    out.verdict = integral.verdict;
    if (integral.verdict != Verdict::Finite) return out;
    out.value = 0.5 * t.sigma2 * z * z + t.a * z + integral.value.real();
    out.error_bound = integral.error_bound;
    return out;
}

}  // namespace

KappaValue kappa(const Triplet& t) { return kappa_real_at(t, t.theta); }

KappaValue kappa_at(const Triplet& t, double z_real) { return kappa_real_at(t, z_real); }

ComplexIntegral kappa_complex(const Triplet& t, double r) {
    const std::complex<double> z{t.theta, r};
    ComplexIntegral out =
        integrate_measure_complex(t.measure, ComplexKind::Kappa, z, t.theta, 0.0);
    if (out.verdict != Verdict::Finite) return out;
    out.value += 0.5 * t.sigma2 * z * z + t.a * z;
    return out;
}

KappaValue kappa_prime(const Triplet& t) {
    IntegralValue integral = integrate_measure(t.measure, ScalarKind::KappaPrime, t.theta);
    KappaValue out;
    out.verdict = integral.verdict;
    if (!integral.finite()) return out;
    out.value = t.sigma2 * t.theta + t.a + integral.value;
    out.error_bound = integral.error_bound;
    return out;
}

ComplexIntegral levy_exponent(const Triplet& t, double r) {
    ComplexIntegral out =
        integrate_measure_complex(t.measure, ComplexKind::Levy, {0.0, 0.0}, t.theta, r);
    if (out.verdict != Verdict::Finite) return out;
    out.value += std::complex<double>(-0.5 * t.sigma2 * r * r, t.a * r);
    return out;
}

ComplexIntegral spine_exponent(const Triplet& t, double r) {
    ComplexIntegral at_z = kappa_complex(t, r);
    if (at_z.verdict != Verdict::Finite) return at_z;
    KappaValue at_theta = kappa(t);
    if (at_theta.verdict != Verdict::Finite) {
        at_z.verdict = at_theta.verdict;
        return at_z;
    }
    at_z.value -= at_theta.value;
    at_z.error_bound += at_theta.error_bound;
    return at_z;
}

ComplexIntegral spine_exponent_direct(const Triplet& t, double r) {
    ComplexIntegral out = integrate_measure_complex(t.measure, ComplexKind::SpineDirect,
                                                    {0.0, 0.0}, t.theta, r);
    if (out.verdict != Verdict::Finite) return out;
    KappaValue ahat = spine_drift(t);
    if (ahat.verdict != Verdict::Finite) {
        out.verdict = ahat.verdict;
        return out;
    }
    out.value += std::complex<double>(-0.5 * t.sigma2 * r * r, ahat.value * r);
    out.error_bound += ahat.error_bound * std::abs(r);
    return out;
}

KappaValue spine_drift(const Triplet& t) {
    IntegralValue integral =
        integrate_measure(t.measure, ScalarKind::SpineDriftTerm, t.theta);
    KappaValue out;
    out.verdict = integral.verdict;
    if (!integral.finite()) return out;
    out.value = t.a + t.theta * t.sigma2 + integral.value;
    out.error_bound = integral.error_bound;
    return out;
}

KappaValue motion_drift_effective(const Triplet& t) {
    IntegralValue comp = integrate_measure(t.measure, ScalarKind::DriftComp, t.theta);
    KappaValue out;
    out.verdict = comp.verdict;
    if (!comp.finite()) return out;
    out.value = t.a - comp.value;
    out.error_bound = comp.error_bound;
    return out;
}

KappaValue spine_drift_effective(const Triplet& t) {
    KappaValue out = motion_drift_effective(t);
    if (out.verdict != Verdict::Finite) return out;
    out.value += t.theta * t.sigma2;
    return out;
}

// ---------------------------------------------------------------------------

std::string CriterionReport::verdict_name() const {
    switch (verdict) {
        case UIVerdict::UI: return "UI";
        case UIVerdict::Degenerate: return "Degenerate";
        default: return "Undetermined";
    }
}

CriterionReport check_criterion(const Triplet& t) {
    CriterionReport rep;
    rep.cond4 = integrate_measure(t.measure, ScalarKind::Cond4, t.theta);
    rep.cond5 = integrate_measure(t.measure, ScalarKind::Cond5, t.theta);
    rep.admissible_4 = rep.cond4.finite();
    rep.admissible_5 = rep.cond5.finite();
    if (!rep.admissible_4 || !rep.admissible_5) {
        rep.verdict = UIVerdict::Undetermined;
        return rep;
    }

    const KappaValue k = kappa(t);
    const KappaValue kp = kappa_prime(t);
    if (k.verdict != Verdict::Finite || kp.verdict != Verdict::Finite) {
        rep.verdict = UIVerdict::Undetermined;
        return rep;
    }
    rep.kappa_theta = k.value;
    rep.kappa_prime_theta = kp.value;
    rep.cond1_margin = t.theta * kp.value - k.value;
    rep.cond1 = rep.cond1_margin < 0.0;
    rep.boundary =
        std::abs(rep.cond1_margin) < kBoundaryTol * std::max(1.0, std::abs(k.value));

    rep.cond2 = integrate_measure(t.measure, ScalarKind::Cond2, t.theta);
    if (rep.cond2.verdict == Verdict::Undetermined) {
        rep.verdict = UIVerdict::Undetermined;
        return rep;
    }
    // equality theta kappa' = kappa counts as failure of (cond1): W_inf = 0
    rep.verdict = (rep.cond1 && rep.cond2.finite()) ? UIVerdict::UI : UIVerdict::Degenerate;
    return rep;
}

LpReport check_lp(const Triplet& t, double p, double q, bool probe_q) {
    if (!(p > 1.0 && p <= 2.0)) throw MeasureError("check_lp: p must lie in (1, 2]");
    if (!(q > p)) throw MeasureError("check_lp: q must exceed p");
    LpReport rep;
    rep.p = p;
    rep.q = q;

    const KappaValue k_theta = kappa(t);
    const KappaValue k_p = kappa_at(t, p * t.theta);
    if (k_theta.verdict == Verdict::Finite && k_p.verdict == Verdict::Finite) {
        rep.kappa_p = k_p.value;
        rep.kappa_ptheta_margin = k_p.value - p * k_theta.value;
        rep.growth_ok = rep.kappa_ptheta_margin < 0.0;
        rep.boundary = std::abs(rep.kappa_ptheta_margin) <
                       kBoundaryTol * std::max(1.0, std::abs(k_p.value));
    }

    rep.cond3 = integrate_measure(t.measure, ScalarKind::Cond3, t.theta, p);

    const KappaValue k_q = kappa_at(t, q * t.theta);
    rep.q_ok = k_q.verdict == Verdict::Finite;
    rep.kappa_q = rep.q_ok ? k_q.value : kInf;

    rep.certified = rep.growth_ok && rep.cond3.finite() && rep.q_ok;

    if (probe_q) {
        for (double qq : {p + 0.1, p + 0.5, 2.0 * p}) {
            LpProbe probe;
            probe.q = qq;
            const KappaValue kv = kappa_at(t, qq * t.theta);
            probe.kappa_q = kv.verdict;
            probe.kappa_q_value = kv.verdict == Verdict::Finite ? kv.value : kInf;
            rep.probes.push_back(probe);
        }
    }
    return rep;
}

IntegralValue tail_integral_dichotomy(const Triplet& t, double c) {
    if (!(c > 0.0)) throw MeasureError("tail_integral_dichotomy: c must be > 0");
    return integrate_measure(t.measure, ScalarKind::Dichotomy, t.theta, c);
}

}  // namespace blp
