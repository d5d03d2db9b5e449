#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace fpedge {

/// "%.17g", with non-finite values spelled nan / inf / -inf.
std::string format_double(double x);

/// Comma-separated file with a header row. Cells are written verbatim.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Pretty-printed JSON with sorted keys and a trailing newline.
void write_json(const std::string& path, const nlohmann::json& value);

/// Creates the directory (and parents) if missing.
void ensure_directory(const std::string& path);

}  // namespace fpedge
