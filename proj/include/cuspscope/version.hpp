#pragma once

namespace cuspscope {

inline constexpr const char* version = "0.1.0";

} // namespace cuspscope
