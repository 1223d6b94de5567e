#pragma once

namespace multiridge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace multiridge
