#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace pdhj {

/// Shortest-exact decimal rendering; byte-stable across runs.
std::string fmt(double v);

std::string csv_line(const std::vector<std::string>& cells);

void write_text_file(const std::filesystem::path& file, const std::string& content);

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& j);

}  // namespace pdhj
