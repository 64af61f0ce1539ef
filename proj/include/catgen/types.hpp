#pragma once

#include <cstdint>

namespace catgen {

using TokenId = std::int32_t;
using CategoryId = std::int32_t;

}  // namespace catgen
