#pragma once

namespace tphenotype {
inline constexpr const char* kVersion = "0.1.0";
}
