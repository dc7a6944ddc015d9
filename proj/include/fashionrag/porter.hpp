#pragma once

#include <string>
#include <string_view>

namespace fashionrag::text {

// Porter stem of a lowercase ASCII word; other input is returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace fashionrag::text
