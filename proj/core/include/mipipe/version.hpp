#pragma once

namespace mipipe {
inline constexpr const char* kVersion = "0.1.0";
}
