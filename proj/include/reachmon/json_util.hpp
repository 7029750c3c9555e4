#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "reachmon/errors.hpp"
#include "reachmon/value.hpp"

namespace reachmon {

// Insertion-ordered JSON keeps every serialized artifact byte-deterministic.
using Json = nlohmann::ordered_json;

inline Value value_from_json(const Json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  fail("schema_violation", where + ": expected scalar (bool/int/real/string)");
}

inline Json value_to_json(const Value& v) {
  switch (kind_of(v)) {
    case Kind::Bool: return std::get<bool>(v);
    case Kind::Int: return std::get<std::int64_t>(v);
    case Kind::Real: return std::get<double>(v);
    case Kind::Str: return std::get<std::string>(v);
  }
  return nullptr;
}

inline Json parse_json(const std::string& text, const std::string& where) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) fail("schema_violation", where + ": malformed JSON");
  return j;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io_error", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io_error", "cannot write " + path);
  out << content;
}

}  // namespace reachmon
