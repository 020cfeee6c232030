#pragma once

namespace folia {

inline constexpr const char* kVersion = "0.1.0";

} // namespace folia
