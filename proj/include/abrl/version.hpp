#pragma once

namespace abrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace abrl
