#include "eqe/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "eqe/common.hpp"

namespace eqe {

namespace {

std::string at_line(std::string_view what, std::string_view field, std::size_t line) {
  std::ostringstream os;
  os << what << ' ' << field << " at line " << line;
  return os.str();
}

const Json& field_or_throw(const Json& rec, std::string_view field, std::size_t line) {
  if (!rec.is_object()) throw DataError("record is not an object at line " + std::to_string(line));
  const auto it = rec.find(std::string(field));
  if (it == rec.end() || it->is_null()) throw DataError(at_line("missing field", field, line));
  return *it;
}

}  // namespace

void for_each_jsonl(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw DataError("malformed JSON at line " + std::to_string(lineno));
    }
    fn(rec, lineno);
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    for_each_jsonl(in, fn);
  } catch (const DataError& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

std::string require_string(const Json& rec, std::string_view field, std::size_t line) {
  const Json& v = field_or_throw(rec, field, line);
  if (!v.is_string()) throw DataError(at_line("field must be a string:", field, line));
  return v.get<std::string>();
}

std::int64_t require_int(const Json& rec, std::string_view field, std::size_t line) {
  const Json& v = field_or_throw(rec, field, line);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
  }
  throw DataError(at_line("field must be an integer:", field, line));
}

double require_number(const Json& rec, std::string_view field, std::size_t line) {
  const Json& v = field_or_throw(rec, field, line);
  if (!v.is_number()) throw DataError(at_line("field must be a number:", field, line));
  return v.get<double>();
}

bool require_bool(const Json& rec, std::string_view field, std::size_t line) {
  const Json& v = field_or_throw(rec, field, line);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i == 0 || i == 1) return i == 1;
  }
  throw DataError(at_line("field must be a boolean:", field, line));
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::ostringstream os;
  for (const auto& r : records) os << r.dump() << '\n';
  write_text_file(path, os.str());
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace eqe
