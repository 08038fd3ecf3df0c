#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace xai {

// Shortest decimal text that round-trips to the same double. Non-finite
// values print as "NaN", "Inf" and "-Inf".
std::string format_double(double value);

// "NA" for an empty optional.
std::string format_optional(const std::optional<double>& value);

// Quotes a CSV field when it contains a delimiter, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace xai
