#pragma once

namespace premir {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace premir
