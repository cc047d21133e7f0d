#pragma once

#include <string>
#include <string_view>

namespace newsrisk {

/// Porter (1980) suffix-stripping stemmer for lowercase ASCII words, following
/// the reference C implementation (including its "bli" -> "ble" and "logi"
/// -> "log" departures from the original rule list). Words of length <= 2 are
/// returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace newsrisk
