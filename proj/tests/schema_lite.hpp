// Minimal JSON Schema checker covering the subset used by the report schemas
// in schemas/: type, properties, required, items, enum, minItems. Returns the
// first violation as a path-prefixed message, empty string when valid.
#pragma once

#include <string>

#include <json.hpp>

namespace schema_lite {

inline bool type_matches(const nlohmann::json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "number") return value.is_number();
    if (type == "integer") return value.is_number_integer();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    return false;
}

inline std::string validate(const nlohmann::json& value, const nlohmann::json& schema,
                            const std::string& path = "$") {
    if (schema.contains("type")) {
        const auto& type = schema["type"];
        bool ok = false;
        if (type.is_string()) {
            ok = type_matches(value, type.get<std::string>());
        } else {
            for (const auto& t : type)
                if (type_matches(value, t.get<std::string>())) ok = true;
        }
        if (!ok) return path + ": expected type " + type.dump() + ", got " + value.dump();
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& candidate : schema["enum"])
            if (candidate == value) ok = true;
        if (!ok) return path + ": value " + value.dump() + " not in enum";
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>()))
                    return path + ": missing required key " + key.get<std::string>();
        if (schema.contains("properties"))
            for (auto it = schema["properties"].begin(); it != schema["properties"].end();
                 ++it)
                if (value.contains(it.key())) {
                    std::string err =
                        validate(value[it.key()], it.value(), path + "." + it.key());
                    if (!err.empty()) return err;
                }
    }
    if (value.is_array()) {
        if (schema.contains("minItems") &&
            value.size() < schema["minItems"].get<size_t>())
            return path + ": fewer than minItems elements";
        if (schema.contains("items")) {
            size_t i = 0;
            for (const auto& element : value) {
                std::string err = validate(element, schema["items"],
                                           path + "[" + std::to_string(i) + "]");
                if (!err.empty()) return err;
                ++i;
            }
        }
    }
    return "";
}

}  // namespace schema_lite
