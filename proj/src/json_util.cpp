#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace wkforge::detail {

json parse_document(const std::string& content, const std::string& source_name) {
    try {
        return json::parse(content);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, content.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (content[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::ParseError, source_name + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                               ": malformed JSON (" + e.what() + ")");
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorCode::InvalidInput, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void field_error(const std::string& source_name, const std::string& pointer, const std::string& what) {
    throw Error(ErrorCode::ParseError, source_name + ": field '" + (pointer.empty() ? "/" : pointer) + "': " + what);
}

void require_object(const json& j, const std::string& source, const std::string& pointer) {
    if (!j.is_object()) field_error(source, pointer, "expected an object");
}

const json& require(const json& obj, const char* key, const std::string& source, const std::string& pointer) {
    require_object(obj, source, pointer);
    auto it = obj.find(key);
    if (it == obj.end()) field_error(source, pointer + "/" + key, "missing");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& source, const std::string& pointer,
                           bool non_empty) {
    const json& v = require(obj, key, source, pointer);
    if (!v.is_string()) field_error(source, pointer + "/" + key, "expected a string");
    auto s = v.get<std::string>();
    if (non_empty && s.empty()) field_error(source, pointer + "/" + key, "must be non-empty");
    return s;
}

double require_number(const json& obj, const char* key, const std::string& source, const std::string& pointer) {
    const json& v = require(obj, key, source, pointer);
    if (!v.is_number()) field_error(source, pointer + "/" + key, "expected a number");
    return v.get<double>();
}

const json& require_array(const json& obj, const char* key, const std::string& source, const std::string& pointer) {
    const json& v = require(obj, key, source, pointer);
    if (!v.is_array()) field_error(source, pointer + "/" + key, "expected an array");
    return v;
}

std::string optional_string(const json& obj, const char* key, const std::string& source, const std::string& pointer,
                            std::string fallback) {
    require_object(obj, source, pointer);
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_string()) field_error(source, pointer + "/" + key, "expected a string");
    return it->get<std::string>();
}

} // namespace wkforge::detail
