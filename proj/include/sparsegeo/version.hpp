#pragma once

namespace sparsegeo {

inline constexpr const char* kVersionString = "sparsegeo 0.1.0";

}  // namespace sparsegeo
