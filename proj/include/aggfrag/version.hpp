#pragma once

namespace aggfrag {

inline constexpr const char* version_string = "0.1.0";

}
