#pragma once

namespace elfit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace elfit
