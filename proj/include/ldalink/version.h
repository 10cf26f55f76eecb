#pragma once

namespace ldalink {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ldalink
