#pragma once

namespace cbound {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cbound
