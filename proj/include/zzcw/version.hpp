#pragma once

namespace zzcw {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchema = "zigzag-cw/1";

}  // namespace zzcw
