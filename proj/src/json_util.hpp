#ifndef ROADTUBES_JSON_UTIL_HPP
#define ROADTUBES_JSON_UTIL_HPP

// Internal helpers for strict field access on parsed JSON documents.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "roadtubes/errors.hpp"

namespace roadtubes::jsonutil {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline const Json& require_field(const Json& obj, const char* key,
                                 const std::string& where) {
  if (!obj.is_object()) {
    throw RoadError(ErrorKind::malformed, where + ": expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw RoadError(ErrorKind::missing_field,
                    where + ": missing required field \"" + key + "\"");
  }
  return *it;
}

inline std::string require_string(const Json& obj, const char* key,
                                  const std::string& where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_string()) {
    throw RoadError(ErrorKind::malformed,
                    where + ": field \"" + key + "\" must be a string");
  }
  return v.get<std::string>();
}

inline double require_number(const Json& obj, const char* key,
                             const std::string& where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_number()) {
    throw RoadError(ErrorKind::malformed,
                    where + ": field \"" + key + "\" must be a number");
  }
  return v.get<double>();
}

inline std::int64_t require_int(const Json& obj, const char* key,
                                const std::string& where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_number_integer()) {
    throw RoadError(ErrorKind::malformed,
                    where + ": field \"" + key + "\" must be an integer");
  }
  return v.get<std::int64_t>();
}

inline const Json& require_array(const Json& obj, const char* key,
                                 const std::string& where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_array()) {
    throw RoadError(ErrorKind::malformed,
                    where + ": field \"" + key + "\" must be an array");
  }
  return v;
}

inline const Json& require_object(const Json& obj, const char* key,
                                  const std::string& where) {
  const Json& v = require_field(obj, key, where);
  if (!v.is_object()) {
    throw RoadError(ErrorKind::malformed,
                    where + ": field \"" + key + "\" must be an object");
  }
  return v;
}

inline Json parse_document(std::string_view text, const std::string& where) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw RoadError(ErrorKind::malformed, where + ": invalid JSON");
  }
  return doc;
}

}  // namespace roadtubes::jsonutil

#endif
