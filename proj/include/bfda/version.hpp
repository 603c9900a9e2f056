#pragma once

namespace bfda {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bfda
