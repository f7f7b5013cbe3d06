#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tad {

// Shortest decimal form that round-trips the exact double.
std::string format_double(double v);

// Fixed two-decimal rendering for report tables.
std::string format_fixed2(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Splits on '\n'; a trailing newline does not produce an empty last line.
std::vector<std::string> split_lines(const std::string& text);
std::vector<std::string> split_on(const std::string& line, char sep);

std::string join_csv_row(const std::vector<std::string>& fields);

void ensure_directory(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace tad
