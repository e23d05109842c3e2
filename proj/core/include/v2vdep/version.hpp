#pragma once

namespace v2vdep {

inline constexpr const char* library_version = "0.1.0";

}  // namespace v2vdep
