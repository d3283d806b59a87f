#pragma once

namespace beamsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace beamsim
