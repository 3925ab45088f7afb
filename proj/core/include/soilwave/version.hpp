#pragma once

namespace soilwave {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace soilwave
