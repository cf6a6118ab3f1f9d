#pragma once

#include <string_view>

namespace cvfade {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace cvfade
