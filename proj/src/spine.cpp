#include "blp/spine.hpp"

#include <algorithm>
#include <cmath>

namespace blp {

namespace {

// shared spine state: tilted event stream + Levy motion of hat-xi
class SpineWalker {
public:
    SpineWalker(const Triplet& eff_triplet, std::uint64_t seed)
        : sampler_(eff_triplet.measure, eff_triplet.theta, /*keep_null_events=*/false),
          rng_(derive_key(seed, 0, 0)),
          sigma_(std::sqrt(eff_triplet.sigma2)),
          theta_(eff_triplet.theta) {
        const KappaValue k = kappa(eff_triplet);
        if (k.verdict != Verdict::Finite)
            throw MeasureError("simulate_spine: effective cumulant not finite");
        kappa_eff_ = k.value;
        const KappaValue drift = spine_drift_effective(eff_triplet);
        if (drift.verdict != Verdict::Finite)
            throw MeasureError("simulate_spine: spine drift not finite; truncate further");
        drift_ = drift.value;
        rate_ = sampler_.total_rate();
        next_event_ = rate_ > 0.0 ? rng_.exponential(rate_) : kInf;
    }

    double next_event() const { return next_event_; }
    double xi() const { return xi_; }
    double wstar() const { return wstar_; }
    double kappa_eff() const { return kappa_eff_; }

    void advance(double t) {
        if (t <= clock_) return;
        const double dt = t - clock_;
        xi_ += drift_ * dt;
        if (sigma_ > 0.0) xi_ += sigma_ * std::sqrt(dt) * rng_.normal();
        clock_ = t;
    }

    // process the pending event; returns the recorded atom
    SpineAtom fire() {
        const double t = next_event_;
        advance(t);
        PointConfiguration c = sampler_.draw(rng_).config;
        const std::size_t star = sample_spine_index(c, theta_, rng_);
        SpineAtom atom{t, std::move(c), star, xi_};
        // W* collects the non-selected entries, discounted at the birth time
        for (std::size_t k = 1; k <= atom.config.size(); ++k) {
            if (k == star) continue;
            wstar_ += std::exp(theta_ * (atom.xi_pre + atom.config.entry(k)) -
                               t * kappa_eff_);
        }
        xi_ += atom.config.entry(star);
        next_event_ = t + rng_.exponential(rate_);
        return atom;
    }

private:
    AtomSampler sampler_;
    Rng rng_;
    double sigma_;
    double theta_;
    double kappa_eff_ = 0.0;
    double drift_ = 0.0;
    double rate_ = 0.0;
    double xi_ = 0.0;
    double clock_ = 0.0;
    double wstar_ = 0.0;
    double next_event_ = kInf;
};

}  // namespace

SpineTrajectory simulate_spine(const SpineParams& params) {
    const BranchingLevyMeasure eff =
        params.triplet.measure.with_truncation(params.truncation)
            .with_motion_cutoff(params.motion_cutoff);
    const Triplet eff_triplet{params.triplet.sigma2, params.triplet.a, eff,
                              params.triplet.theta};
    SpineWalker walker(eff_triplet, params.seed);

    SpineTrajectory out;
    out.query_times = params.query_times;
    std::sort(out.query_times.begin(), out.query_times.end());
    out.kappa_used = walker.kappa_eff();
    out.theta = params.triplet.theta;

    for (double q : out.query_times) {
        while (walker.next_event() <= q) out.atoms.push_back(walker.fire());
        walker.advance(q);
        out.xi.push_back(walker.xi());
        out.wstar.push_back(walker.wstar());
        out.atoms_so_far.push_back(out.atoms.size());
    }
    return out;
}

std::vector<double> compute_wstar(const SpineTrajectory& spine, double theta,
                                  double kappa_theta) {
    std::vector<double> out;
    out.reserve(spine.query_times.size());
    std::size_t next_atom = 0;
    double acc = 0.0;
    for (double q : spine.query_times) {
        while (next_atom < spine.atoms.size() && spine.atoms[next_atom].time <= q) {
            const SpineAtom& atom = spine.atoms[next_atom];
            for (std::size_t k = 1; k <= atom.config.size(); ++k) {
                if (k == atom.star) continue;
                acc += std::exp(theta * (atom.xi_pre + atom.config.entry(k)) -
                                atom.time * kappa_theta);
            }
            ++next_atom;
        }
        out.push_back(acc);
    }
    return out;
}

double first_big_jump_time(const SpineTrajectory& spine, double n) {
    for (const auto& atom : spine.atoms)
        if (atom.config.entry(atom.star) < -n) return atom.time;
    return kInf;
}

Trajectory simulate_tilted_system(const TiltedSystemParams& params) {
    const BranchingLevyMeasure eff =
        params.triplet.measure.with_truncation(params.truncation)
            .with_motion_cutoff(params.motion_cutoff);
    const Triplet eff_triplet{params.triplet.sigma2, params.triplet.a, eff,
                              params.triplet.theta};

    SpineWalker walker(eff_triplet, params.seed);
    Population pop(eff_triplet, params.caps);
    const std::uint64_t spine_key = derive_key(params.seed, 1, 0);

    Trajectory traj;
    traj.query_times = params.query_times;
    std::sort(traj.query_times.begin(), traj.query_times.end());
    traj.kappa_used = walker.kappa_eff();
    traj.theta = params.triplet.theta;

    std::uint32_t atom_index = 0;
    for (double q : traj.query_times) {
        while (!pop.overflow() && walker.next_event() <= q) {
            const double te = walker.next_event();
            if (!pop.process_until(te)) break;
            const SpineAtom atom = walker.fire();
            ++atom_index;
            for (std::size_t k = 1; k <= atom.config.size(); ++k) {
                if (k == atom.star) continue;
                pop.spawn(spine_key, atom_index, static_cast<std::uint32_t>(k), te,
                          atom.xi_pre + atom.config.entry(k));
            }
            if (pop.over_caps()) pop.mark_overflow(te);
        }
        if (!pop.overflow() && pop.process_until(q)) pop.freeze(q);
        // frozen at the overflow time once caps were hit (advance is a no-op then)
        const double t = pop.overflow() ? pop.overflow_time() : q;
        walker.advance(t);
        traj.n_particles.push_back(1 + pop.size());
        const double sum = std::exp(traj.theta * walker.xi()) +
                           pop.sum_exp_theta(traj.theta);
        traj.martingale.push_back(std::exp(-t * walker.kappa_eff()) * sum);
        traj.flagged.push_back(pop.overflow());
    }
    traj.overflow = pop.overflow();
    traj.overflow_time = pop.overflow_time();
    traj.total_events = pop.events();
    return traj;
}

}  // namespace blp
