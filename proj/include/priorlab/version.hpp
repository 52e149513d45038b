#pragma once

namespace priorlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace priorlab
