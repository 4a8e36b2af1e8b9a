#pragma once

#include <string>
#include <vector>

namespace uor::csv {

// Full-precision decimal rendering; round-trips doubles exactly.
std::string fmt(double v);

void write(const std::string& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

// Returns all rows including the header. Unquoted simple CSV.
std::vector<std::vector<std::string>> read(const std::string& path);

}  // namespace uor::csv
