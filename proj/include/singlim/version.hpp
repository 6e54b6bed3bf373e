#pragma once

namespace singlim {

inline constexpr const char* kVersion = "0.1.0";

}
