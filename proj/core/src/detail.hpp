#pragma once

#include "xai/frame.hpp"
#include "xai/models.hpp"

namespace xai::models::detail {

// DataError naming the first feature that holds a NaN.
void require_complete(const Frame& x, const Schema& schema);

}  // namespace xai::models::detail
