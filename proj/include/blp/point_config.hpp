#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace blp {

// Sentinel for a non-existing particle. Entries at -inf contribute 0 to any
// exponential weight and compare below every finite displacement.
inline constexpr double kDeleted = -std::numeric_limits<double>::infinity();

inline bool is_deleted(double x) { return x == kDeleted; }

// Ranked (non-increasing) sequence of particle displacements relative to the
// parent. Only finite entries are stored; the implicit tail is -inf. Entry 1
// is the parent's own jump, entries 2,3,... are newborn children.
class PointConfiguration {
public:
    PointConfiguration() = default;

    // Accepts -inf entries anywhere in the (non-increasing) input; they are
    // trimmed since ranking forces them to form a suffix. Throws
    // std::invalid_argument if the input is not non-increasing or contains
    // +inf/NaN.
    explicit PointConfiguration(std::vector<double> entries);

    static PointConfiguration empty() { return PointConfiguration(); }

    std::size_t size() const { return entries_.size(); }
    bool is_empty() const { return entries_.empty(); }

    // k is 1-based as in x_1, x_2, ...; out-of-range entries are -inf
    double entry(std::size_t k) const {
        return (k >= 1 && k <= entries_.size()) ? entries_[k - 1] : kDeleted;
    }
    double x1() const { return entry(1); }

    std::span<const double> entries() const { return entries_; }

    // number of finite entries beyond the first (newborn children)
    std::size_t child_count() const { return entries_.empty() ? 0 : entries_.size() - 1; }

    // the atom Lambda is forbidden to carry: (0, -inf, -inf, ...)
    bool is_forbidden_atom() const { return entries_.size() == 1 && entries_[0] == 0.0; }

    // <x, e_theta> = sum_k exp(theta * x_k), -inf entries contributing 0
    double weighted_sum(double theta) const;

    // sum over k >= 2 of exp(theta * x_k)
    double offspring_weight(double theta) const;

    // image under pi_n: entries < -n deleted (a suffix, by ranking)
    PointConfiguration truncated(double n) const;

    std::string to_string() const;

    bool operator==(const PointConfiguration& o) const { return entries_ == o.entries_; }

private:
    std::vector<double> entries_;
};

}  // namespace blp
