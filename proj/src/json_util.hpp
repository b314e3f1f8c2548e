#pragma once

#include "wkforge/errors.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace wkforge::detail {

using json = nlohmann::json;

// Parses a JSON document; syntax errors become ParseError with line:column.
json parse_document(const std::string& content, const std::string& source_name);

std::string read_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: to <path>.tmp then rename.
void write_file(const std::filesystem::path& path, const std::string& content);

[[noreturn]] void field_error(const std::string& source_name, const std::string& pointer, const std::string& what);

const json& require(const json& obj, const char* key, const std::string& source, const std::string& pointer);
std::string require_string(const json& obj, const char* key, const std::string& source, const std::string& pointer,
                           bool non_empty = false);
double require_number(const json& obj, const char* key, const std::string& source, const std::string& pointer);
const json& require_array(const json& obj, const char* key, const std::string& source, const std::string& pointer);
std::string optional_string(const json& obj, const char* key, const std::string& source, const std::string& pointer,
                            std::string fallback = {});
void require_object(const json& j, const std::string& source, const std::string& pointer);

} // namespace wkforge::detail
