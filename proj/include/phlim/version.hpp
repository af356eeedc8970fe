#pragma once

namespace phlim {

inline constexpr const char* kVersion = "0.1.0";

} // namespace phlim
