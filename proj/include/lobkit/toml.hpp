#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lobkit/errors.hpp"

namespace lobkit::toml {

// Scenario files use a TOML subset: [section] and [section.sub] headers,
// key = value pairs with strings, numbers, booleans and single-line arrays
// of scalars, and '#' comments. Quite enough for flat experiment configs.

class Value;
using Array = std::vector<Value>;

class Value {
  public:
    Value() : data_(std::int64_t{0}) {}
    explicit Value(std::string s) : data_(std::move(s)) {}
    explicit Value(double d) : data_(d) {}
    explicit Value(std::int64_t i) : data_(i) {}
    explicit Value(bool b) : data_(b) {}
    explicit Value(Array a) : data_(std::move(a)) {}

    bool is_string() const { return std::holds_alternative<std::string>(data_); }
    bool is_float() const { return std::holds_alternative<double>(data_); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_number() const { return is_float() || is_integer(); }
    bool is_boolean() const { return std::holds_alternative<bool>(data_); }
    bool is_array() const { return std::holds_alternative<Array>(data_); }

    const std::string& as_string() const {
        require(is_string(), "string");
        return std::get<std::string>(data_);
    }
    double as_number() const {
        require(is_number(), "number");
        return is_float() ? std::get<double>(data_)
                          : static_cast<double>(std::get<std::int64_t>(data_));
    }
    std::int64_t as_integer() const {
        require(is_integer(), "integer");
        return std::get<std::int64_t>(data_);
    }
    bool as_boolean() const {
        require(is_boolean(), "boolean");
        return std::get<bool>(data_);
    }
    const Array& as_array() const {
        require(is_array(), "array");
        return std::get<Array>(data_);
    }

    std::string type_name() const {
        if (is_string()) return "string";
        if (is_float()) return "float";
        if (is_integer()) return "integer";
        if (is_boolean()) return "boolean";
        return "array";
    }

  private:
    void require(bool ok, const char* what) const {
        if (!ok)
            throw ValidationError(std::string("config value is a ") + type_name() +
                                  ", expected a " + what);
    }
    std::variant<std::string, double, std::int64_t, bool, Array> data_;
};

// Flat document: dotted-path key -> value ("section.key" or bare "key").
class Document {
  public:
    void set(const std::string& path, Value v) { entries_[path] = std::move(v); }

    bool has(const std::string& path) const { return entries_.count(path) > 0; }

    const Value& at(const std::string& path) const {
        const auto it = entries_.find(path);
        if (it == entries_.end()) throw ValidationError("missing config key: " + path);
        return it->second;
    }

    const Value* find(const std::string& path) const {
        const auto it = entries_.find(path);
        return it == entries_.end() ? nullptr : &it->second;
    }

    double number_or(const std::string& path, double fallback) const {
        const Value* v = find(path);
        return v ? v->as_number() : fallback;
    }
    std::int64_t integer_or(const std::string& path, std::int64_t fallback) const {
        const Value* v = find(path);
        return v ? v->as_integer() : fallback;
    }
    std::string string_or(const std::string& path, const std::string& fallback) const {
        const Value* v = find(path);
        return v ? v->as_string() : fallback;
    }
    bool boolean_or(const std::string& path, bool fallback) const {
        const Value* v = find(path);
        return v ? v->as_boolean() : fallback;
    }

    const std::map<std::string, Value>& entries() const { return entries_; }

  private:
    std::map<std::string, Value> entries_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline bool valid_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            return false;
    return true;
}

Value parse_scalar(const std::string& text, std::size_t lineno);

inline Value parse_value(const std::string& text, std::size_t lineno) {
    const std::string t = trim(text);
    if (t.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty value");
    if (t.front() == '[') {
        if (t.back() != ']')
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": unterminated array");
        Array items;
        std::string body = t.substr(1, t.size() - 2);
        std::string current;
        bool in_string = false;
        for (char c : body) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!trim(current).empty()) items.push_back(parse_scalar(trim(current), lineno));
                current.clear();
            } else {
                current += c;
            }
        }
        if (!trim(current).empty()) items.push_back(parse_scalar(trim(current), lineno));
        return Value(std::move(items));
    }
    return parse_scalar(t, lineno);
}

inline Value parse_scalar(const std::string& t, std::size_t lineno) {
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            if (t[i] == '\\' && i + 2 < t.size() && (t[i + 1] == '"' || t[i + 1] == '\\')) {
                out += t[i + 1];
                ++i;
            } else {
                out += t[i];
            }
        }
        return Value(out);
    }
    if (t == "true") return Value(true);
    if (t == "false") return Value(false);

    // integer if it parses completely without . e E
    if (t.find_first_of(".eE") == std::string::npos ||
        (t.size() > 2 && (t[0] == '0') && (t[1] == 'x'))) {
        try {
            std::size_t used = 0;
            const std::int64_t i = std::stoll(t, &used, 10);
            if (used == t.size()) return Value(i);
        } catch (...) {
        }
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(t, &used);
        if (used == t.size()) return Value(d);
    } catch (...) {
    }
    throw ValidationError("config line " + std::to_string(lineno) + ": cannot parse value '" + t +
                          "'");
}

}  // namespace detail

inline Document parse(std::istream& in) {
    Document doc;
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(detail::strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": unterminated section header");
            section = detail::trim(t.substr(1, t.size() - 2));
            if (!detail::valid_key(section))
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": bad section name '" + section + "'");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        if (!detail::valid_key(key) || key.find('.') != std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": bad key '" + key +
                                  "'");
        const std::string path = section.empty() ? key : section + "." + key;
        if (doc.has(path))
            throw ValidationError("config line " + std::to_string(lineno) + ": duplicate key '" +
                                  path + "'");
        doc.set(path, detail::parse_value(t.substr(eq + 1), lineno));
    }
    return doc;
}

inline Document parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

inline Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    return parse(in);
}

}  // namespace lobkit::toml
