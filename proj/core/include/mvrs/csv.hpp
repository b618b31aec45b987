#pragma once

// Dataset files: a header line "y,x1,...,xp" followed by numeric rows.

#include <string>

#include "mvrs/model.hpp"

namespace mvrs {

// Streaming load; validates the header, every cell, and the family's response
// domain. Row numbers in errors count data rows from one.
Dataset load_csv(const std::string& path, Family f);

// Writes with enough digits that a round trip reproduces every value exactly.
void save_csv(const std::string& path, const Dataset& data);

}  // namespace mvrs
