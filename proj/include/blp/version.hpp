#pragma once

namespace blp {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;  // CSV / report schema version

}  // namespace blp
