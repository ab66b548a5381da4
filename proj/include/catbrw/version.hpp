#pragma once

namespace catbrw {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace catbrw
