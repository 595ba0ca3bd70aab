#include "doctest.h"

#include <cmath>

#include "blp/measure.hpp"

using namespace blp;

namespace {

const double kLn2 = std::log(2.0);

BranchingLevyMeasure yule_measure() {
    return BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, 0.0})}});
}

}  // namespace

TEST_CASE("construction rejects bad atoms") {
    CHECK_THROWS_AS(BranchingLevyMeasure::finite({{0.0, PointConfiguration({0.0, 0.0})}}),
                    MeasureError);
    CHECK_THROWS_AS(BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0})}}),
                    MeasureError);  // forbidden atom
    CHECK_THROWS_AS(BranchingLevyMeasure::fragmentation(2.5), MeasureError);
    CHECK_THROWS_AS(BranchingLevyMeasure::fragmentation(-0.1), MeasureError);
}

TEST_CASE("truncate rewrites finite atom lists") {
    auto m = BranchingLevyMeasure::finite({{0.5, PointConfiguration({0.5, -3.0, -7.0})}});
    BranchingLevyMeasure t = truncate(m, 5.0);
    const auto* fd = t.as_finite();
    REQUIRE(fd != nullptr);
    REQUIRE(fd->atoms.size() == 1);
    CHECK(fd->atoms[0].rate == 0.5);
    CHECK(fd->atoms[0].config.size() == 2);
    CHECK(fd->atoms[0].config.entry(2) == -3.0);
}

TEST_CASE("truncate drops atoms censored to the forbidden configuration") {
    auto m = BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, -5.0})},
                                           {2.0, PointConfiguration({0.0, 0.0})}});
    BranchingLevyMeasure t = truncate(m, 1.0);
    REQUIRE(t.as_finite() != nullptr);
    CHECK(t.as_finite()->atoms.size() == 1);  // the (0,-5) atom became (0,-inf,...)
    CHECK(t.as_finite()->atoms[0].rate == 2.0);
    CHECK_THROWS_AS(truncate(m, 0.0), MeasureError);
}

TEST_CASE("truncated fragmentation has finite birth intensity from quadrature") {
    auto frag = BranchingLevyMeasure::fragmentation(0.5).with_truncation(2.0);
    IntegralValue birth = integrate_measure(frag, ScalarKind::BranchRate, 0.0);
    REQUIRE(birth.finite());
    // closed form: (e^{n alpha} - 2^alpha)/alpha at n=2, alpha=1/2
    const double exact = (std::exp(1.0) - std::sqrt(2.0)) * 2.0;
    CHECK(birth.value == doctest::Approx(exact).epsilon(1e-9));

    IntegralValue untruncated =
        integrate_measure(BranchingLevyMeasure::fragmentation(0.5), ScalarKind::BranchRate, 0.0);
    CHECK(untruncated.verdict == Verdict::Divergent);
}

TEST_CASE("tilt computes size-biased rates") {
    TiltedMeasure t1 = tilt(yule_measure(), 1.0);
    CHECK(t1.total_rate().value == doctest::Approx(2.0).epsilon(1e-14));

    TiltedMeasure t2 = tilt(BranchingLevyMeasure::finite({{1.0, PointConfiguration({kLn2})}}), 1.0);
    CHECK(t2.total_rate().value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t2.atom_rates()[0] == doctest::Approx(2.0));
}

TEST_CASE("tilt reports non-integrability when (5) fails") {
    // fragmentation with theta <= alpha
    auto frag = BranchingLevyMeasure::fragmentation(0.5);
    CHECK_THROWS_AS(tilt(frag, 0.3), MeasureError);
    CHECK_NOTHROW(tilt(frag, 1.0));
}

TEST_CASE("heavy-offspring tilted rate matches a brute-force series") {
    auto heavy = BranchingLevyMeasure::heavy_offspring(1.0);
    IntegralValue r = integrate_measure(heavy, ScalarKind::TiltedRate, 1.0);
    REQUIRE(r.finite());
    // sum of m^-1 log^-2 m over m >= 3, bracketed through the integral test
    double brute = 0.0;
    const int M = 2000000;
    for (int m = M; m >= 3; --m) {
        const double L = std::log(static_cast<double>(m));
        brute += 1.0 / (static_cast<double>(m) * L * L);
    }
    const double lo = brute + 1.0 / std::log(static_cast<double>(M + 1));
    const double hi = brute + 1.0 / std::log(static_cast<double>(M));
    CHECK(r.value > lo - 1e-9);
    CHECK(r.value < hi + 1e-9);
}

TEST_CASE("sample_atom: waiting times and categorical selection") {
    Rng rng(2024);
    TiltedMeasure single = tilt(yule_measure(), 1.0);  // tilted rate 2
    double mean_wait = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean_wait += sample_atom(single, kInf, rng).first;
    mean_wait /= n;
    // Exp(2): mean 1/2, sd 1/2
    CHECK(std::abs(mean_wait - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));

    // two atoms with tilted rates 1 and 3: second chosen with probability 3/4
    auto two = BranchingLevyMeasure::finite({{0.5, PointConfiguration({kLn2})},
                                             {1.5, PointConfiguration({0.0, 0.0})}});
    // rates: atom1 tilted = 0.5 * 2 = 1; atom2 tilted = 1.5 * 2 = 3
    TiltedMeasure tm = tilt(two, 1.0);
    CHECK(tm.total_rate().value == doctest::Approx(4.0));
    int second = 0;
    for (int i = 0; i < n; ++i)
        if (sample_atom(tm, kInf, rng).second.size() == 2) ++second;
    const double freq = static_cast<double>(second) / n;
    const double se = std::sqrt(0.75 * 0.25 / n);
    CHECK(std::abs(freq - 0.75) < 4.0 * se);
}

TEST_CASE("sample_atom signals when no branching events exist") {
    auto zero = BranchingLevyMeasure::finite({});
    Rng rng(1);
    auto [wait, config] = sample_atom(TiltedMeasure{zero, 1.0}, kInf, rng);
    CHECK(wait == kInf);
    CHECK(config.is_empty());
}

TEST_CASE("tilted fragmentation sampler matches quadrature weights") {
    auto frag = BranchingLevyMeasure::fragmentation(0.5)
                    .with_truncation(4.0)
                    .with_motion_cutoff(1e-3);
    AtomSampler sampler(frag, 1.0, false);
    const double total = sampler.total_rate();
    REQUIRE(total > 0.0);

    // bin the dislocation parameter s = 1-u; recover s from the drawn config
    const std::vector<double> edges = {fragmentation_s_min(frag), 0.05, 0.15, 0.3, 0.5};
    auto bin_weight = [&](double lo, double hi) {
        // tilted density ((1-s)^theta + 1{s >= e^-n} s^theta) s^{-1-alpha}
        const int steps = 20000;
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            const double s = lo + (hi - lo) * (i + 0.5) / steps;
            double w = std::pow(1.0 - s, 1.0);
            if (s >= std::exp(-4.0)) w += s;
            acc += w * std::pow(s, -1.5) * (hi - lo) / steps;
        }
        return acc;
    };

    Rng rng(99);
    const int n = 100000;
    std::vector<int> counts(edges.size() - 1, 0);
    for (int i = 0; i < n; ++i) {
        const PointConfiguration c = sampler.draw(rng).config;
        const double s =
            c.size() >= 2 ? std::exp(c.entry(2)) : 1.0 - std::exp(c.entry(1));
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            if (s >= edges[b] && s < edges[b + 1] + (b + 2 == edges.size() ? 1e-12 : 0.0))
                counts[b]++;
    }
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        const double p = bin_weight(edges[b], edges[b + 1]) / total;
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(static_cast<double>(counts[b]) / n - p) < 3.0 * se + 1e-4);
    }
}

TEST_CASE("spine index selection frequencies") {
    Rng rng(4);
    const int n = 100000;

    PointConfiguration sym({0.0, 0.0});
    int first = 0;
    for (int i = 0; i < n; ++i)
        if (sample_spine_index(sym, 1.0, rng) == 1) ++first;
    CHECK(std::abs(first / static_cast<double>(n) - 0.5) <
          4.0 * std::sqrt(0.25 / n));

    PointConfiguration skew({std::log(3.0), 0.0});
    first = 0;
    for (int i = 0; i < n; ++i)
        if (sample_spine_index(skew, 1.0, rng) == 1) ++first;
    CHECK(std::abs(first / static_cast<double>(n) - 0.75) <
          4.0 * std::sqrt(0.75 * 0.25 / n));

    PointConfiguration lone({0.0, kDeleted});
    for (int i = 0; i < 100; ++i) CHECK(sample_spine_index(lone, 2.0, rng) == 1);

    CHECK_THROWS_AS(sample_spine_index(PointConfiguration(), 1.0, rng),
                    std::invalid_argument);
}

TEST_CASE("tilt and truncate commute on retained finite atoms") {
    Rng rng(5150);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<FiniteDiscrete::Atom> atoms;
        const int n_atoms = 1 + static_cast<int>(rng.uniform01() * 4);
        for (int i = 0; i < n_atoms; ++i) {
            std::vector<double> e;
            double cur = 2.0 * rng.uniform01() + 0.1;  // keep x1 above the level
            e.push_back(cur);
            const int kids = static_cast<int>(rng.uniform01() * 3);
            for (int k = 0; k < kids; ++k) {
                cur -= 3.0 * rng.uniform01();
                e.push_back(cur);
            }
            atoms.push_back({0.1 + rng.uniform01(), PointConfiguration(e)});
        }
        auto m = BranchingLevyMeasure::finite(atoms);
        const double theta = 1.5 * rng.uniform01();
        const double level = 2.0;

        // route 1: truncate then tilt
        std::vector<double> r1 = tilt(truncate(m, level), theta).atom_rates();
        // route 2: tilt then truncate the base
        TiltedMeasure tm = tilt(m, theta);
        tm.base = truncate(tm.base, level);
        std::vector<double> r2 = tm.atom_rates();

        REQUIRE(r1.size() == r2.size());
        for (std::size_t i = 0; i < r1.size(); ++i)
            CHECK(r1[i] == doctest::Approx(r2[i]).epsilon(1e-13));
    }
}

TEST_CASE("samplers never produce the forbidden atom") {
    // atom (0, -3) censors to the forbidden configuration at level 1
    auto m = BranchingLevyMeasure::finite({{1.0, PointConfiguration({0.0, -3.0})},
                                           {1.0, PointConfiguration({0.5, 0.2})}})
                 .with_truncation(1.0);
    Rng rng(11);
    AtomSampler null_mode(m, std::nullopt, true);
    AtomSampler measure_mode(m, std::nullopt, false);
    for (int i = 0; i < 2000; ++i) {
        const auto d1 = null_mode.draw(rng);
        if (!d1.null_event) CHECK_FALSE(d1.config.is_forbidden_atom());
        const auto d2 = measure_mode.draw(rng);
        CHECK_FALSE(d2.null_event);
        CHECK_FALSE(d2.config.is_forbidden_atom());
    }
    // measure semantics exclude the censored-to-forbidden atom from the rate
    CHECK(measure_mode.total_rate() == doctest::Approx(1.0));
    CHECK(null_mode.total_rate() == doctest::Approx(2.0));
}
