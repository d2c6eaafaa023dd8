#pragma once

namespace synthmean {

inline constexpr const char *kToolName = "synthmean";
inline constexpr const char *kVersion = "0.1.0";

} // namespace synthmean
