#pragma once

namespace leafsev {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace leafsev
