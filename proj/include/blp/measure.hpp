#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "blp/point_config.hpp"
#include "blp/rng.hpp"

namespace blp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct MeasureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Verdict { Finite, Divergent, Undetermined };

// Result of a Lambda-integral with a certified error bound, or a divergence
// certificate. `method` names the oracle that produced it.
struct IntegralValue {
    Verdict verdict = Verdict::Finite;
    double value = 0.0;
    double error_bound = 0.0;
    std::string method;

    bool finite() const { return verdict == Verdict::Finite; }
};

struct ComplexIntegral {
    Verdict verdict = Verdict::Finite;
    std::complex<double> value{0.0, 0.0};
    double error_bound = 0.0;
};

// Lambda-integrals used across the checker, the engine and the spine. Scalar
// kinds integrate a real functional of the (censored) configuration; complex
// kinds the integrands of kappa / Phi / Phi-hat.
enum class ScalarKind {
    TotalRate,        // Lambda_eff(P)
    BranchRate,       // events with a death or at least one child
    MotionRate,       // events moving only the parent
    TiltedRate,       // integral of <x, e_theta>
    Cond4,            // integral of 1 ^ x_1^2
    Cond5,            // 1_{x1>1} e^{theta x1} + sum_{k>=2} e^{theta xk}
    KappaPrime,       // x1 (e^{theta x1} - 1_{|x1|<1}) + sum_{k>=2} xk e^{theta xk}
    SpineDriftTerm,   // sum_k xk e^{theta xk} 1_{|xk|<1} - x1 1_{|x1|<1}
    DriftComp,        // x1 1_{|x1|<1}  (effective measures only)
    Cond2,            // <x,e>(log <x,e> - 1)^+
    Cond3,            // <x,e>^p 1_{<x,e> > 2}, p = param
    Dichotomy,        // <x,e>(log(<x,e>-1))^+ / c, c = param
};

enum class ComplexKind {
    Kappa,        // e^{z x1} - 1 - z x1 1_{|x1|<1} + sum_{k>=2} e^{z xk}
    Levy,         // e^{i r x1} - 1 - i r x1 1_{|x1|<1}
    SpineDirect,  // sum_k e^{theta xk} (e^{i r xk} - 1 - i r xk 1_{|xk|<1})
};

// per-config integrands; deleted entries contribute nothing, death configs
// contribute -1 to kappa/Levy (killing term)
double scalar_integrand(ScalarKind kind, const PointConfiguration& c, double theta,
                        double param);
std::complex<double> complex_integrand(ComplexKind kind, const PointConfiguration& c,
                                       std::complex<double> z, double theta, double r);

// ---------------------------------------------------------------------------
// Measure variants

struct FiniteDiscrete {
    struct Atom {
        double rate;
        PointConfiguration config;
    };
    std::vector<Atom> atoms;
};

// A countable atom family m -> (rate, configuration) together with the
// analytic tail bounds that make series evaluation certified.
class CountableFamily {
public:
    virtual ~CountableFamily() = default;
    virtual std::string name() const = 0;
    virtual std::int64_t first_index() const = 0;
    virtual double rate(std::int64_t m) const = 0;
    virtual PointConfiguration config(std::int64_t m) const = 0;

    // estimate of sum over m > M of the kind's integrand, or a divergence
    // certificate; `theta`/`param` as in scalar_integrand
    virtual IntegralValue scalar_tail(ScalarKind kind, std::int64_t M, double theta,
                                      double param) const = 0;
    virtual ComplexIntegral complex_tail(ComplexKind kind, std::int64_t M,
                                         std::complex<double> z, double theta,
                                         double r) const = 0;

    virtual std::int64_t partial_terms() const { return 100000; }
};

struct CountableDiscrete {
    std::shared_ptr<const CountableFamily> family;
};

// heavy-offspring family: for m >= 3 the atom is m particles at the origin
// with rate scale * m^-2 (log m)^-2; sum lambda_m (m-1) converges while
// sum lambda_m m log m diverges
std::shared_ptr<const CountableFamily> make_heavy_offspring(double scale);

// binary fragmentation: parameter u in [1/2, 1), configuration
// (log u, log(1-u)), dislocation density (1-u)^{-1-alpha}; requires
// 0 < alpha < 2, and theta > alpha for admissibility
struct Fragmentation {
    double alpha;

    double density(double u) const;                 // dislocation density at u
    PointConfiguration config_at(double u) const;   // (log u, log(1-u))
};

// ---------------------------------------------------------------------------

// A branching Levy measure together with the explicit approximation state:
// `truncation`  - pi_n censoring level (entries below -n deleted),
// `motion_cutoff` - motion jumps smaller than this are dropped from the
//                   simulated event set (their compensation is mean-zero).
// Both default to "none"; the criterion checker runs on the pristine measure,
// the engine on an effective one with finite event rate.
class BranchingLevyMeasure {
public:
    using Payload = std::variant<FiniteDiscrete, CountableDiscrete, Fragmentation>;

    BranchingLevyMeasure() : payload_(FiniteDiscrete{}) {}
    explicit BranchingLevyMeasure(Payload p);

    static BranchingLevyMeasure finite(std::vector<FiniteDiscrete::Atom> atoms);
    static BranchingLevyMeasure heavy_offspring(double scale);
    static BranchingLevyMeasure fragmentation(double alpha);

    const Payload& payload() const { return payload_; }
    const FiniteDiscrete* as_finite() const { return std::get_if<FiniteDiscrete>(&payload_); }
    const CountableDiscrete* as_countable() const {
        return std::get_if<CountableDiscrete>(&payload_);
    }
    const Fragmentation* as_fragmentation() const {
        return std::get_if<Fragmentation>(&payload_);
    }

    double truncation() const { return truncation_; }
    double motion_cutoff() const { return motion_cutoff_; }

    BranchingLevyMeasure with_truncation(double n) const;
    BranchingLevyMeasure with_motion_cutoff(double eps) const;

    bool is_zero() const;  // no atoms at all (pure Levy motion degenerates to drift)

    std::string family_name() const;

private:
    Payload payload_;
    double truncation_ = kInf;
    double motion_cutoff_ = 0.0;
};

// image measure under pi_n; finite-discrete atom lists are rewritten (atoms
// mapping to the forbidden configuration are dropped), parametric variants
// record the level and apply it at sampling/integration time
BranchingLevyMeasure truncate(const BranchingLevyMeasure& m, double n);

// evaluate a Lambda-integral over the measure's effective domain
IntegralValue integrate_measure(const BranchingLevyMeasure& m, ScalarKind kind,
                                double theta, double param = 0.0);
ComplexIntegral integrate_measure_complex(const BranchingLevyMeasure& m, ComplexKind kind,
                                          std::complex<double> z, double theta, double r);

// ---------------------------------------------------------------------------
// Tilting and sampling

struct TiltedMeasure {
    BranchingLevyMeasure base;
    double theta = 0.0;

    // total rate of Lambda-hat over the effective domain
    IntegralValue total_rate() const;
    // per-atom tilted rates for finite-discrete bases (censored images,
    // forbidden/death atoms excluded)
    std::vector<double> atom_rates() const;
};

// size-biased measure <x,e_theta> Lambda(dx); throws MeasureError if the
// exponential integrability condition fails at theta
TiltedMeasure tilt(const BranchingLevyMeasure& m, double theta);

// k with probability e^{theta x_k} / <x, e_theta> (1-based); throws
// std::invalid_argument when the configuration has no finite entries
std::size_t sample_spine_index(const PointConfiguration& c, double theta, Rng& rng);

// Draws configurations from an effective measure, optionally tilted.
// In `keep_null_events` mode (used by the engine) finite/countable proposals
// use the uncensored atom rates and censor per draw, so that runs with
// different truncation levels consume identical randomness; events whose
// image is the forbidden configuration come back as no-ops.
class AtomSampler {
public:
    struct Draw {
        PointConfiguration config;  // censored image
        bool null_event = false;    // forbidden image (jump 0, no children)
    };

    AtomSampler(const BranchingLevyMeasure& m, std::optional<double> tilt_theta,
                bool keep_null_events);

    double total_rate() const { return total_rate_; }
    Draw draw(Rng& rng) const;

private:
    Draw draw_discrete(Rng& rng) const;
    Draw draw_fragmentation(Rng& rng) const;

    const BranchingLevyMeasure measure_;
    std::optional<double> tilt_theta_;
    bool keep_null_;
    double total_rate_ = 0.0;

    // discrete variants: explicit weight table (lazy prefix for countable)
    std::vector<double> weights_;
    std::vector<PointConfiguration> configs_;

    // fragmentation: s = 1-u domain [s_min, 1/2] and tilted mixture weights
    double s_min_ = 0.0;
    double w_motion_component_ = 0.0;  // integral of (1-s)^theta s^{-1-alpha}
    double w_child_component_ = 0.0;   // integral of s^{theta-1-alpha} over retained
};

// (waiting time, configuration): waiting time is Exp(total tilted rate), the
// configuration is drawn with probability proportional to its tilted rate
std::pair<double, PointConfiguration> sample_atom(const TiltedMeasure& tilted,
                                                  double truncation, Rng& rng);

// fragmentation helpers shared with the engine
double fragmentation_s_min(const BranchingLevyMeasure& m);

}  // namespace blp
