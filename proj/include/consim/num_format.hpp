#pragma once

#include <string>

namespace consim {

// Shortest decimal string that parses back to exactly the same double
// (tries 15, 16, then 17 significant digits). Infinities and NaN render as
// "inf", "-inf", "nan".
std::string format_double(double value);

} // namespace consim
