#include "doctest.h"

#include <cmath>

#include "blp/spine.hpp"

using namespace blp;

namespace {

const double kLn2 = std::log(2.0);

Triplet yule() {
    return {0.0, 0.0, BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, 0.0})}}),
            1.0};
}

Triplet bbm(double theta) {
    return {1.0, 0.0, BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, 0.0})}}),
            theta};
}

Triplet smalljump() {
    return {0.0, 0.0, BranchingLevyMeasure::finite({{1.0, PointConfiguration({kLn2})}}),
            1.0};
}

SpineParams spine_params(const Triplet& t, std::vector<double> qs, std::uint64_t seed) {
    SpineParams p;
    p.triplet = t;
    p.query_times = std::move(qs);
    p.horizon = p.query_times.back();
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("Yule spine never moves and W* sums e^{-s} over atoms") {
    SpineTrajectory s = simulate_spine(spine_params(yule(), {1.0, 3.0, 6.0}, 991));
    for (double x : s.xi) CHECK(x == 0.0);
    // every atom contributes exactly e^{-s} (one non-selected child at 0)
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < s.query_times.size(); ++j) {
        while (k < s.atoms.size() && s.atoms[k].time <= s.query_times[j]) {
            CHECK(s.atoms[k].config.size() == 2);
            acc += std::exp(-s.atoms[k].time);
            ++k;
        }
        CHECK(s.wstar[j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("Yule tilted atom rate is 2") {
    const int R = 2000;
    double total = 0.0;
    for (int r = 0; r < R; ++r) {
        SpineTrajectory s = simulate_spine(spine_params(yule(), {5.0}, derive_key(7, r, 0)));
        total += static_cast<double>(s.atoms_so_far[0]);
    }
    const double mean = total / R;  // Poisson(2 * 5): sd = sqrt(10)
    CHECK(std::abs(mean - 10.0) < 4.0 * std::sqrt(10.0 / R));
}

TEST_CASE("spine slope estimates kappa'(theta)") {
    // BBM: xi_t = B_t + t
    const int R = 1500;
    double sum = 0.0, ss = 0.0;
    for (int r = 0; r < R; ++r) {
        SpineTrajectory s = simulate_spine(spine_params(bbm(1.0), {50.0}, derive_key(8, r, 0)));
        const double v = s.xi[0] / 50.0;
        sum += v;
        ss += v * v;
    }
    const double mean = sum / R;
    const double se = std::sqrt((ss / R - mean * mean) / R);
    CHECK(std::abs(mean - 1.0) < 3.0 * se);

    // smalljump: tilted jump rate 2, jumps log 2, compensating drift -log 2
    double jsum = 0.0, jss = 0.0;
    for (int r = 0; r < R; ++r) {
        SpineTrajectory s =
            simulate_spine(spine_params(smalljump(), {1.0}, derive_key(9, r, 0)));
        jsum += s.xi[0];
        jss += s.xi[0] * s.xi[0];
    }
    const double jmean = jsum / R;
    const double jse = std::sqrt((jss / R - jmean * jmean) / R);
    CHECK(std::abs(jmean - kLn2) < 4.0 * jse);
}

TEST_CASE("W* paths are non-decreasing and reproducible from the atoms") {
    for (int r = 0; r < 50; ++r) {
        SpineTrajectory s = simulate_spine(
            spine_params(bbm(1.0), {1.0, 2.0, 5.0, 10.0}, derive_key(10, r, 0)));
        for (std::size_t j = 1; j < s.wstar.size(); ++j)
            CHECK(s.wstar[j] >= s.wstar[j - 1]);
        const std::vector<double> recomputed = compute_wstar(s, s.theta, s.kappa_used);
        REQUIRE(recomputed.size() == s.wstar.size());
        for (std::size_t j = 0; j < s.wstar.size(); ++j)
            CHECK(std::abs(recomputed[j] - s.wstar[j]) <=
                  1e-12 * std::max(1.0, s.wstar[j]));
    }
}

TEST_CASE("first big jump time follows the censored-rate exponential") {
    // mixture: Yule atom plus a negative-displacement atom (-1.5, -2);
    // the tilted rate of the negative atom is 0.5 (e^{-1.5} + e^{-2}) and any
    // selection from it falls below -1
    Triplet t{0.0, 0.0,
              BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, 0.0})},
                                            {0.5, PointConfiguration({-1.5, -2.0})}}),
              1.0};
    const double rho = 0.5 * (std::exp(-1.5) + std::exp(-2.0));
    const double horizon = 2.0;
    const int R = 3000;
    int hits = 0;
    for (int r = 0; r < R; ++r) {
        SpineTrajectory s = simulate_spine(spine_params(t, {horizon}, derive_key(11, r, 0)));
        if (first_big_jump_time(s, 1.0) <= horizon) ++hits;
    }
    const double p = -std::expm1(-rho * horizon);
    const double se = std::sqrt(p * (1.0 - p) / R);
    CHECK(std::abs(static_cast<double>(hits) / R - p) < 4.0 * se);

    // a spine with only positive jumps is never killed
    SpineTrajectory s = simulate_spine(spine_params(smalljump(), {5.0}, 123));
    CHECK(first_big_jump_time(s, 1.0) == kInf);
}

TEST_CASE("tilted system starts from a single unit particle") {
    TiltedSystemParams p;
    p.triplet = yule();
    p.horizon = 1.0;
    p.query_times = {0.0, 1.0};
    p.seed = 17;
    Trajectory traj = simulate_tilted_system(p);
    CHECK(traj.n_particles[0] == 1);
    CHECK(traj.martingale[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(traj.n_particles[1] >= 1);
}

TEST_CASE("degenerate tilted martingale drifts beyond any bound") {
    // theta = 1.6 BBM: fraction of paths with max hat-W > 10 grows with t
    TiltedSystemParams p;
    p.triplet = bbm(1.6);
    p.horizon = 6.0;
    p.query_times = {2.0, 4.0, 6.0};
    p.seed = 20260810;
    const int R = 300;
    std::vector<double> frac(3, 0.0);
    for (int r = 0; r < R; ++r) {
        TiltedSystemParams q = p;
        q.seed = derive_key(p.seed, r, 0);
        Trajectory traj = simulate_tilted_system(q);
        double running = 0.0;
        for (std::size_t j = 0; j < traj.martingale.size(); ++j) {
            running = std::max(running, traj.martingale[j]);
            if (running > 10.0) frac[j] += 1.0;
        }
    }
    CHECK(frac[0] <= frac[1]);
    CHECK(frac[1] <= frac[2]);
    CHECK(frac[2] > frac[0]);  // genuinely increasing over this horizon
}

TEST_CASE("tilted system is deterministic given the seed") {
    TiltedSystemParams p;
    p.triplet = bbm(1.0);
    p.horizon = 2.0;
    p.query_times = {1.0, 2.0};
    p.seed = 424242;
    Trajectory a = simulate_tilted_system(p);
    Trajectory b = simulate_tilted_system(p);
    for (std::size_t j = 0; j < a.martingale.size(); ++j) {
        CHECK(a.martingale[j] == b.martingale[j]);
        CHECK(a.n_particles[j] == b.n_particles[j]);
    }
}
