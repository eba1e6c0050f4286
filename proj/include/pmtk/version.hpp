#pragma once

namespace pmtk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pmtk
