#pragma once

namespace ekb {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ekb
