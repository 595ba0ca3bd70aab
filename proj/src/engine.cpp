#include "blp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blp {

MeasureSplit split_measure(const BranchingLevyMeasure& m) {
    MeasureSplit out;
    out.motion_rate = integrate_measure(m, ScalarKind::MotionRate, 0.0);
    out.branch_rate = integrate_measure(m, ScalarKind::BranchRate, 0.0);
    if (out.branch_rate.verdict == Verdict::Divergent)
        throw MeasureError("split_measure: branching rate infinite; truncate further");
    if (const auto* fd = m.as_finite()) {
        for (std::size_t i = 0; i < fd->atoms.size(); ++i) {
            PointConfiguration c = fd->atoms[i].config.truncated(m.truncation());
            if (c.is_forbidden_atom()) continue;
            if (!c.is_empty() && c.child_count() == 0)
                out.motion_atoms.push_back(i);
            else
                out.branch_atoms.push_back(i);
        }
    }
    return out;
}

double sample_motion_increment(double sigma2, double a_eff, const MotionJumpSpec& jumps,
                               double dt, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_motion_increment: dt must be > 0");
    double inc = a_eff * dt;
    if (sigma2 > 0.0) inc += std::sqrt(sigma2 * dt) * rng.normal();
    if (jumps.rate > 0.0) {
        inc += jumps.jump * static_cast<double>(rng.poisson(jumps.rate * dt));
        if (std::abs(jumps.jump) < 1.0) inc -= dt * jumps.rate * jumps.jump;
    }
    return inc;
}

double additive_martingale(std::span<const double> positions, double theta,
                           double kappa_theta, double t) {
    double sum = 0.0, comp = 0.0;
    for (double x : positions) {
        const double term = std::exp(theta * x) - comp;
        const double s = sum + term;
        comp = (s - sum) - term;
        sum = s;
    }
    return std::exp(-t * kappa_theta) * sum;
}

BranchingLevyMeasure effective_measure(const SimParams& params) {
    return params.triplet.measure.with_truncation(params.truncation)
        .with_motion_cutoff(params.motion_cutoff);
}

// ---------------------------------------------------------------------------

Population::Population(const Triplet& effective_triplet, const Caps& caps)
    : caps_(caps),
      sampler_(effective_triplet.measure, std::nullopt, /*keep_null_events=*/true),
      sigma_(std::sqrt(effective_triplet.sigma2)) {
    const KappaValue k = kappa(effective_triplet);
    if (k.verdict != Verdict::Finite)
        throw MeasureError("Population: effective cumulant not finite");
    kappa_eff_ = k.value;
    const KappaValue drift = motion_drift_effective(effective_triplet);
    if (drift.verdict != Verdict::Finite)
        throw MeasureError("Population: drift compensation not finite; truncate further");
    drift_ = drift.value;
    event_rate_ = sampler_.total_rate();
}

void Population::spawn(std::uint64_t parent_key, std::uint32_t event_idx,
                       std::uint32_t entry, double time, double position) {
    std::uint32_t slot;
    if (!free_slots_.empty()) {
        slot = free_slots_.back();
        free_slots_.pop_back();
    } else {
        slot = static_cast<std::uint32_t>(arena_.size());
        arena_.emplace_back();
    }
    Particle& p = arena_[slot];
    p.key = derive_key(parent_key, event_idx, entry);
    p.rng = Rng(p.key);
    p.position = position;
    p.clock = time;
    p.event_count = 0;
    p.id = next_id_++;
    p.epoch = ++epoch_counter_;
    p.alive = true;
    ++population_;
    if (event_rate_ > 0.0)
        heap_.push({time + p.rng.exponential(event_rate_), slot, p.epoch, p.id});
}

void Population::advance(Particle& p, double t) {
    if (t <= p.clock) return;
    const double dt = t - p.clock;
    p.position += drift_ * dt;
    if (sigma_ > 0.0) p.position += sigma_ * std::sqrt(dt) * p.rng.normal();
    p.clock = t;
}

bool Population::process_until(double t) {
    if (overflow_) return false;
    while (!heap_.empty() && heap_.top().time <= t) {
        const HeapEntry e = heap_.top();
        heap_.pop();
        if (!arena_[e.slot].alive || arena_[e.slot].epoch != e.epoch) continue;

        advance(arena_[e.slot], e.time);
        const AtomSampler::Draw draw = sampler_.draw(arena_[e.slot].rng);
        const std::uint32_t ev_idx = ++arena_[e.slot].event_count;
        ++events_;
        // copy before spawning: growing the arena invalidates references
        const double pre_pos = arena_[e.slot].position;
        const std::uint64_t parent_key = arena_[e.slot].key;

        if (!draw.null_event) {
            const PointConfiguration& c = draw.config;
            // children start at the parent's pre-jump position
            for (std::size_t k = 2; k <= c.size(); ++k)
                spawn(parent_key, ev_idx, static_cast<std::uint32_t>(k), e.time,
                      pre_pos + c.entry(k));
            if (c.is_empty()) {
                arena_[e.slot].alive = false;
                free_slots_.push_back(e.slot);
                --population_;
            } else {
                arena_[e.slot].position = pre_pos + c.x1();
            }
        }
        if (arena_[e.slot].alive) {
            Particle& p = arena_[e.slot];
            heap_.push({e.time + p.rng.exponential(event_rate_), e.slot, p.epoch, p.id});
        }

        if (population_ > caps_.max_particles || events_ > caps_.max_events) {
            overflow_ = true;
            overflow_time_ = e.time;
            freeze(e.time);
            return false;
        }
    }
    return true;
}

void Population::freeze(double t) {
    for (auto& p : arena_)
        if (p.alive) advance(p, t);
}

double Population::sum_exp_theta(double theta) const {
    double sum = 0.0, comp = 0.0;
    for (const auto& p : arena_) {
        if (!p.alive) continue;
        const double term = std::exp(theta * p.position) - comp;
        const double s = sum + term;
        comp = (s - sum) - term;
        sum = s;
    }
    return sum;
}

void Population::collect(std::vector<SnapshotEntry>& out) const {
    for (const auto& p : arena_)
        if (p.alive) out.push_back({p.id, p.position});
}

// ---------------------------------------------------------------------------

Trajectory simulate(const SimParams& params) {
    for (double q : params.query_times)
        if (q < 0.0 || q > params.horizon)
            throw std::invalid_argument("simulate: query times must lie in [0, horizon]");

    const BranchingLevyMeasure eff = effective_measure(params);
    const Triplet eff_triplet{params.triplet.sigma2, params.triplet.a, eff,
                              params.triplet.theta};
    Population pop(eff_triplet, params.caps);

    Trajectory traj;
    traj.query_times = params.query_times;
    std::sort(traj.query_times.begin(), traj.query_times.end());
    traj.kappa_used = pop.kappa_effective();
    traj.theta = params.triplet.theta;

    pop.spawn(params.seed, 0, 0, 0.0, 0.0);

    for (double q : traj.query_times) {
        if (pop.process_until(q)) pop.freeze(q);
        const double t = pop.overflow() ? pop.overflow_time() : q;
        traj.n_particles.push_back(pop.size());
        traj.martingale.push_back(std::exp(-t * pop.kappa_effective()) *
                                  pop.sum_exp_theta(traj.theta));
        traj.flagged.push_back(pop.overflow());
        if (params.record_snapshots) {
            std::vector<SnapshotEntry> snap;
            pop.collect(snap);
            traj.snapshots.push_back(std::move(snap));
        }
    }
    traj.overflow = pop.overflow();
    traj.overflow_time = pop.overflow_time();
    traj.total_events = pop.events();
    return traj;
}

}  // namespace blp
