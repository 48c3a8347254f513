#pragma once

// Validator for the JSON Schema subset used by the report schemas: type,
// const, enum, required, properties, additionalProperties, items, minimum,
// maximum, exclusiveMinimum and local "#/$defs/..." references.

#include <string>
#include <vector>

#include "json.hpp"

namespace spgls::testing {

class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json root) : root_(std::move(root)) {}

  std::vector<std::string> validate(const nlohmann::json& doc) const {
    std::vector<std::string> errors;
    check(root_, doc, "$", errors);
    return errors;
  }

 private:
  static bool has_type(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
  }

  const nlohmann::json& resolve(const nlohmann::json& schema) const {
    if (!schema.contains("$ref")) return schema;
    const std::string ref = schema["$ref"].get<std::string>();
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw std::runtime_error("unsupported $ref " + ref);
    return root_.at("$defs").at(ref.substr(prefix.size()));
  }

  void check(const nlohmann::json& schema_in, const nlohmann::json& v, const std::string& path,
             std::vector<std::string>& errors) const {
    const nlohmann::json& schema = resolve(schema_in);
    if (schema.contains("type")) {
      const auto& t = schema["type"];
      bool ok = false;
      if (t.is_string()) {
        ok = has_type(v, t.get<std::string>());
      } else {
        for (const auto& alt : t) ok = ok || has_type(v, alt.get<std::string>());
      }
      if (!ok) {
        errors.push_back(path + ": expected type " + t.dump() + ", got " + v.dump());
        return;
      }
    }
    if (schema.contains("const") && v != schema["const"]) {
      errors.push_back(path + ": expected " + schema["const"].dump());
    }
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& e : schema["enum"]) found = found || e == v;
      if (!found) errors.push_back(path + ": " + v.dump() + " not in " + schema["enum"].dump());
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (schema.contains("minimum") && x < schema["minimum"].get<double>()) {
        errors.push_back(path + ": below minimum");
      }
      if (schema.contains("maximum") && x > schema["maximum"].get<double>()) {
        errors.push_back(path + ": above maximum");
      }
      if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>()) {
        errors.push_back(path + ": not above exclusiveMinimum");
      }
    }
    if (v.is_object()) {
      if (schema.contains("required")) {
        for (const auto& key : schema["required"]) {
          if (!v.contains(key.get<std::string>())) {
            errors.push_back(path + ": missing " + key.get<std::string>());
          }
        }
      }
      const nlohmann::json empty = nlohmann::json::object();
      const auto& props = schema.contains("properties") ? schema["properties"] : empty;
      for (const auto& [key, val] : v.items()) {
        if (props.contains(key)) {
          check(props[key], val, path + "." + key, errors);
        } else if (schema.contains("additionalProperties")) {
          const auto& extra = schema["additionalProperties"];
          if (extra.is_boolean()) {
            if (!extra.get<bool>()) errors.push_back(path + ": unexpected key " + key);
          } else {
            check(extra, val, path + "." + key, errors);
          }
        }
      }
    }
    if (v.is_array() && schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        check(schema["items"], v[i], path + "[" + std::to_string(i) + "]", errors);
      }
    }
  }

  nlohmann::json root_;
};

}  // namespace spgls::testing
