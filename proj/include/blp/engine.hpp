#pragma once

#include <cstdint>
#include <memory>
#include <queue>
#include <span>
#include <vector>

#include "blp/cumulant.hpp"
#include "blp/measure.hpp"
#include "blp/rng.hpp"

namespace blp {

struct Caps {
    std::uint64_t max_particles = 200000;
    std::uint64_t max_events = 20000000;
};

// split of a (truncated) measure into the part that only moves the parent and
// the finite-rate remainder carrying deaths and births
struct MeasureSplit {
    IntegralValue motion_rate;
    IntegralValue branch_rate;
    std::vector<std::size_t> motion_atoms;  // finite-discrete: atom indices
    std::vector<std::size_t> branch_atoms;
};

// throws MeasureError when the branching rate is infinite (truncate further)
MeasureSplit split_measure(const BranchingLevyMeasure& m);

// deterministic-size jump component for the motion increment: compound
// Poisson above the small-jump cutoff, with exact drift compensation of the
// compensated range
struct MotionJumpSpec {
    double rate = 0.0;
    double jump = 0.0;
};

// Gaussian(a_eff dt, sigma2 dt) + jump * Poisson(rate dt) - dt * rate * jump * 1_{|jump|<1}
double sample_motion_increment(double sigma2, double a_eff, const MotionJumpSpec& jumps,
                               double dt, Rng& rng);

// e^{-t kappa} sum over positions of e^{theta x}, compensated summation
double additive_martingale(std::span<const double> positions, double theta,
                           double kappa_theta, double t);

struct SnapshotEntry {
    std::uint64_t id;
    double position;
};

struct Trajectory {
    std::vector<double> query_times;
    std::vector<std::uint64_t> n_particles;
    std::vector<double> martingale;
    std::vector<bool> flagged;  // true from the overflow time on
    bool overflow = false;
    double overflow_time = kInf;
    std::uint64_t total_events = 0;
    double kappa_used = 0.0;  // normalization constant of the effective triplet
    double theta = 0.0;
    std::vector<std::vector<SnapshotEntry>> snapshots;  // when requested
};

struct SimParams {
    Triplet triplet;
    double horizon = 0.0;
    std::vector<double> query_times;
    double truncation = kInf;
    double motion_cutoff = 0.0;
    Caps caps;
    std::uint64_t seed = 1;
    bool record_snapshots = false;
};

// the effective measure the engine actually simulates
BranchingLevyMeasure effective_measure(const SimParams& params);

// Flat arena of particles evolving under the untilted effective dynamics.
// Each particle owns an RNG stream keyed by its genealogy, so runs that
// differ only in the truncation level couple pathwise: particles alive in
// both see identical randomness. Shared by the plain engine and the tilted
// (spinal) system, which injects spine children as extra roots.
class Population {
public:
    Population(const Triplet& effective_triplet, const Caps& caps);

    void spawn(std::uint64_t parent_key, std::uint32_t event_idx, std::uint32_t entry,
               double time, double position);

    // run all scheduled events with time <= t; returns false once caps are hit
    bool process_until(double t);
    // advance every living particle's motion state to time t
    void freeze(double t);

    double sum_exp_theta(double theta) const;
    std::uint64_t size() const { return population_; }
    std::uint64_t events() const { return events_; }
    bool overflow() const { return overflow_; }
    double overflow_time() const { return overflow_time_; }
    void collect(std::vector<SnapshotEntry>& out) const;

    double event_rate() const { return event_rate_; }
    double motion_drift() const { return drift_; }
    double kappa_effective() const { return kappa_eff_; }

    // cap accounting for callers that inject particles directly
    bool over_caps() const {
        return population_ > caps_.max_particles || events_ > caps_.max_events;
    }
    void mark_overflow(double t) {
        if (overflow_) return;
        overflow_ = true;
        overflow_time_ = t;
        freeze(t);
    }

private:
    struct Particle {
        double position = 0.0;
        double clock = 0.0;
        Rng rng;
        std::uint64_t key = 0;
        std::uint32_t event_count = 0;
        std::uint64_t id = 0;
        std::uint64_t epoch = 0;
        bool alive = false;
    };

    struct HeapEntry {
        double time;
        std::uint32_t slot;
        std::uint64_t epoch;
        std::uint64_t id;
        bool operator<(const HeapEntry& o) const {
            if (time != o.time) return time > o.time;  // min-heap
            return id > o.id;
        }
    };

    void advance(Particle& p, double t);

    Caps caps_;
    AtomSampler sampler_;
    double sigma_;
    double kappa_eff_ = 0.0;
    double drift_ = 0.0;
    double event_rate_ = 0.0;

    std::vector<Particle> arena_;
    std::vector<std::uint32_t> free_slots_;
    std::priority_queue<HeapEntry> heap_;
    std::uint64_t population_ = 0;
    std::uint64_t next_id_ = 0;
    std::uint64_t epoch_counter_ = 0;
    std::uint64_t events_ = 0;
    bool overflow_ = false;
    double overflow_time_ = kInf;
};

// Event-driven simulation of the branching Levy process of the effective
// triplet (pi_n censoring + motion cutoff applied to the event set).
// Deterministic given the seed.
Trajectory simulate(const SimParams& params);

}  // namespace blp
