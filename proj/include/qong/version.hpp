#pragma once

namespace qong {

inline constexpr const char* version = "0.1.0";
inline constexpr int format_version = 1;

} // namespace qong
