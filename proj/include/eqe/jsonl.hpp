#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace eqe {

using Json = nlohmann::json;

/// Calls `fn(record, line_number)` for each non-blank line of a JSONL
/// stream. Line numbers are 1-based. Throws DataError on malformed JSON.
void for_each_jsonl(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn);
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

/// Field accessors that throw DataError("missing field <name> at line N")
/// or a type error naming the field.
std::string require_string(const Json& rec, std::string_view field, std::size_t line);
std::int64_t require_int(const Json& rec, std::string_view field, std::size_t line);
double require_number(const Json& rec, std::string_view field, std::size_t line);
bool require_bool(const Json& rec, std::string_view field, std::size_t line);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace eqe
