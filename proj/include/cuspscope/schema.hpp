#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace cuspscope {

// Validator for the JSON Schema subset used by the run-config schema:
// type, enum, properties, required, additionalProperties (bool or schema),
// items, minItems, maxItems, minimum, maximum, exclusiveMinimum, and local
// "$ref": "#/$defs/<name>" references.
class SchemaValidator {
public:
    explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {}

    std::vector<std::string> validate(const nlohmann::json& instance) const {
        std::vector<std::string> errors;
        check(instance, root_, "$", errors, 0);
        return errors;
    }

private:
    nlohmann::json root_;

    const nlohmann::json& resolve(const std::string& ref) const {
        const std::string prefix = "#/$defs/";
        require(ref.rfind(prefix, 0) == 0, ErrorKind::config, "unsupported schema reference " + ref);
        const auto& defs = root_.at("$defs");
        std::string name = ref.substr(prefix.size());
        require(defs.contains(name), ErrorKind::config, "unresolved schema reference " + ref);
        return defs.at(name);
    }

    static bool has_type(const nlohmann::json& v, const std::string& t) {
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        if (t == "number") return v.is_number();
        if (t == "integer") {
            if (v.is_number_integer()) return true;
            if (!v.is_number_float()) return false;
            double d = v.get<double>();
            return std::isfinite(d) && d == std::floor(d);
        }
        return false;
    }

    void check(const nlohmann::json& v, const nlohmann::json& s, const std::string& at,
               std::vector<std::string>& errors, int depth) const {
        require(depth < 64, ErrorKind::config, "schema nesting too deep");
        if (s.is_boolean()) {
            if (!s.get<bool>()) errors.push_back(at + ": not allowed");
            return;
        }
        if (s.contains("$ref")) {
            check(v, resolve(s["$ref"].get<std::string>()), at, errors, depth + 1);
            return;
        }
        if (s.contains("type")) {
            const auto& t = s["type"];
            bool ok = false;
            if (t.is_string()) {
                ok = has_type(v, t.get<std::string>());
            } else {
                for (const auto& x : t) ok = ok || has_type(v, x.get<std::string>());
            }
            if (!ok) {
                errors.push_back(at + ": expected type " + t.dump());
                return;
            }
        }
        if (s.contains("enum")) {
            bool ok = false;
            for (const auto& x : s["enum"]) ok = ok || x == v;
            if (!ok) errors.push_back(at + ": value " + v.dump() + " not in " + s["enum"].dump());
        }
        if (v.is_number()) {
            double d = v.get<double>();
            if (s.contains("minimum") && d < s["minimum"].get<double>())
                errors.push_back(at + ": must be >= " + s["minimum"].dump());
            if (s.contains("maximum") && d > s["maximum"].get<double>())
                errors.push_back(at + ": must be <= " + s["maximum"].dump());
            if (s.contains("exclusiveMinimum") && d <= s["exclusiveMinimum"].get<double>())
                errors.push_back(at + ": must be > " + s["exclusiveMinimum"].dump());
        }
        if (v.is_array()) {
            if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
                errors.push_back(at + ": needs at least " + s["minItems"].dump() + " items");
            if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
                errors.push_back(at + ": allows at most " + s["maxItems"].dump() + " items");
            if (s.contains("items"))
                for (std::size_t i = 0; i < v.size(); ++i)
                    check(v[i], s["items"], at + "[" + std::to_string(i) + "]", errors, depth + 1);
        }
        if (v.is_object()) {
            if (s.contains("required"))
                for (const auto& r : s["required"])
                    if (!v.contains(r.get<std::string>())) errors.push_back(at + ": missing " + r.dump());
            const nlohmann::json empty = nlohmann::json::object();
            const auto& props = s.contains("properties") ? s["properties"] : empty;
            for (const auto& [key, val] : v.items()) {
                std::string sub = at + "." + key;
                if (props.contains(key)) {
                    check(val, props[key], sub, errors, depth + 1);
                } else if (s.contains("additionalProperties")) {
                    check(val, s["additionalProperties"], sub, errors, depth + 1);
                }
            }
        }
    }
};

} // namespace cuspscope
