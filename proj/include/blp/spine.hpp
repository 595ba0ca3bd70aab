#pragma once

#include <cstdint>
#include <vector>

#include "blp/engine.hpp"

namespace blp {

struct SpineAtom {
    double time = 0.0;
    PointConfiguration config;  // censored mark of the tilted point process
    std::size_t star = 0;       // selected index (1-based)
    double xi_pre = 0.0;        // spine position just before the jump
};

struct SpineTrajectory {
    std::vector<double> query_times;
    std::vector<double> xi;                    // hat-xi at query times
    std::vector<double> wstar;                 // W* at query times
    std::vector<std::uint64_t> atoms_so_far;   // atom count per query time
    std::vector<SpineAtom> atoms;
    double kappa_used = 0.0;
    double theta = 0.0;
};

struct SpineParams {
    Triplet triplet;
    double horizon = 0.0;
    std::vector<double> query_times;
    double truncation = kInf;
    double motion_cutoff = 0.0;
    std::uint64_t seed = 1;
};

// Spine Levy process hat-xi: Brownian part, drift, and jumps x_* at the atoms
// of the tilted point process, small selected jumps compensated exactly as in
// the construction. W* is accumulated from the non-selected entries.
SpineTrajectory simulate_spine(const SpineParams& params);

// recompute the W* path from the stored atoms (exact sum; reproducibility check)
std::vector<double> compute_wstar(const SpineTrajectory& spine, double theta,
                                  double kappa_theta);

// first atom whose selected jump falls below -n: the time at which the spine
// particle would be killed under pi_n censoring; +inf if none
double first_big_jump_time(const SpineTrajectory& spine, double n);

struct TiltedSystemParams {
    Triplet triplet;
    double horizon = 0.0;
    std::vector<double> query_times;
    double truncation = kInf;
    double motion_cutoff = 0.0;
    Caps caps;
    std::uint64_t seed = 1;
};

// Spinal decomposition: the spine evolves under the tilted dynamics and at
// each atom the non-selected entries root independent copies of the original
// (untilted) process. Returns the population trajectory of hat-Z with the
// tilted martingale hat-W.
Trajectory simulate_tilted_system(const TiltedSystemParams& params);

}  // namespace blp
