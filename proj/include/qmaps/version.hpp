#pragma once

namespace qm {

inline constexpr const char* kVersion = "qmaps 0.1.0";

}  // namespace qm
