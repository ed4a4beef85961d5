#pragma once

namespace rbm {
inline constexpr const char* kVersion = "0.1.0";
}
