#pragma once

namespace multiscale {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace multiscale
