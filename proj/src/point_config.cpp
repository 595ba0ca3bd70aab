#include "blp/point_config.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace blp {

PointConfiguration::PointConfiguration(std::vector<double> entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double x = entries[i];
        if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
            throw std::invalid_argument("PointConfiguration: entries must lie in [-inf, inf)");
        if (i > 0 && x > entries[i - 1])
            throw std::invalid_argument("PointConfiguration: entries must be non-increasing");
    }
    while (!entries.empty() && is_deleted(entries.back())) entries.pop_back();
    entries_ = std::move(entries);
}

double PointConfiguration::weighted_sum(double theta) const {
    double sum = 0.0;
    for (double x : entries_) sum += std::exp(theta * x);
    return sum;
}

double PointConfiguration::offspring_weight(double theta) const {
    double sum = 0.0;
    for (std::size_t i = 1; i < entries_.size(); ++i) sum += std::exp(theta * entries_[i]);
    return sum;
}

PointConfiguration PointConfiguration::truncated(double n) const {
    std::vector<double> kept;
    kept.reserve(entries_.size());
    for (double x : entries_) {
        if (x < -n) break;  // ranked: everything after is smaller
        kept.push_back(x);
    }
    PointConfiguration out;
    out.entries_ = std::move(kept);
    return out;
}

std::string PointConfiguration::to_string() const {
    std::string s = "(";
    char buf[64];
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i) s += ", ";
        std::snprintf(buf, sizeof(buf), "%.17g", entries_[i]);
        s += buf;
    }
    if (entries_.empty()) s += "-inf";
    s += ")";
    return s;
}

}  // namespace blp
