#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "blp/point_config.hpp"
#include "blp/rng.hpp"

using namespace blp;

TEST_CASE("weighted sum on the worked examples") {
    CHECK(PointConfiguration({0.0, 0.0, kDeleted}).weighted_sum(1.0) == doctest::Approx(2.0));
    CHECK(PointConfiguration({kDeleted, kDeleted}).weighted_sum(2.0) == 0.0);
    CHECK(PointConfiguration({std::log(2.0), -1.0}).weighted_sum(1.0) ==
          doctest::Approx(2.0 + std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("constructor enforces the ranking invariant") {
    CHECK_THROWS_AS(PointConfiguration({-8.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(PointConfiguration({0.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(PointConfiguration({std::numeric_limits<double>::infinity()}),
                    std::invalid_argument);
    // equal entries are fine (ranking is not strict)
    CHECK_NOTHROW(PointConfiguration({0.5, 0.5, 0.5}));
}

TEST_CASE("deleted entries form an implicit tail") {
    PointConfiguration c({0.5, -3.0, kDeleted});
    CHECK(c.size() == 2);
    CHECK(c.entry(1) == 0.5);
    CHECK(c.entry(3) == kDeleted);
    CHECK(c.entry(100) == kDeleted);
    CHECK(c.child_count() == 1);
}

TEST_CASE("truncation censors a suffix") {
    PointConfiguration c({0.5, -3.0, -7.0});
    PointConfiguration t = c.truncated(5.0);
    CHECK(t.size() == 2);
    CHECK(t.entry(1) == 0.5);
    CHECK(t.entry(2) == -3.0);
    CHECK(t.entry(3) == kDeleted);

    // x1 below the level kills the whole configuration
    CHECK(PointConfiguration({-8.0, -9.0}).truncated(5.0).is_empty());
}

TEST_CASE("forbidden atom detection") {
    CHECK(PointConfiguration({0.0}).is_forbidden_atom());
    CHECK(PointConfiguration({0.0, kDeleted}).is_forbidden_atom());
    CHECK_FALSE(PointConfiguration({0.0, 0.0}).is_forbidden_atom());
    CHECK_FALSE(PointConfiguration({1.0}).is_forbidden_atom());
    CHECK_FALSE(PointConfiguration().is_forbidden_atom());
}

TEST_CASE("censoring is monotone in the level and never adds mass") {
    Rng rng(777);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> entries;
        const int n = 1 + static_cast<int>(rng.uniform01() * 6);
        double cur = 3.0 * rng.uniform01();
        for (int i = 0; i < n; ++i) {
            cur -= 4.0 * rng.uniform01();
            entries.push_back(cur);
        }
        PointConfiguration c(entries);
        const double theta = 2.0 * rng.uniform01();
        const double full = c.weighted_sum(theta);
        double prev = 0.0;
        for (double level : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            const double w = c.truncated(level).weighted_sum(theta);
            CHECK(w <= full + 1e-15);
            CHECK(w >= prev - 1e-15);  // non-decreasing in the level
            prev = w;
        }
    }
}
