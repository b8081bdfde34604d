#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qhlab/errors.hpp"

namespace qhlab {

// Minimal TOML-class key-value tree: [section] headers, key = value lines,
// values are strings ("..."), numbers, booleans, or flat arrays thereof.
// Diagnostics carry the line number.
struct ConfigValue {
    std::variant<double, bool, std::string, std::vector<double>,
                 std::vector<std::string>>
        v;
    int line = 0;

    bool is_number() const { return std::holds_alternative<double>(v); }
    bool is_string() const { return std::holds_alternative<std::string>(v); }

    double as_number() const {
        if (!is_number())
            throw schema_error("config line " + std::to_string(line) +
                               ": expected a number");
        return std::get<double>(v);
    }
    bool as_bool() const {
        if (!std::holds_alternative<bool>(v))
            throw schema_error("config line " + std::to_string(line) +
                               ": expected a boolean");
        return std::get<bool>(v);
    }
    const std::string& as_string() const {
        if (!is_string())
            throw schema_error("config line " + std::to_string(line) +
                               ": expected a string");
        return std::get<std::string>(v);
    }
    std::vector<double> as_number_array() const {
        if (std::holds_alternative<std::vector<double>>(v))
            return std::get<std::vector<double>>(v);
        if (is_number()) return {std::get<double>(v)};
        throw schema_error("config line " + std::to_string(line) +
                           ": expected a number array");
    }
    std::vector<std::string> as_string_array() const {
        if (std::holds_alternative<std::vector<std::string>>(v))
            return std::get<std::vector<std::string>>(v);
        if (is_string()) return {std::get<std::string>(v)};
        throw schema_error("config line " + std::to_string(line) +
                           ": expected a string array");
    }
};

class Config {
public:
    using Section = std::map<std::string, ConfigValue>;

    static Config parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw schema_error("cannot open config: " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        return parse_string(ss.str(), path);
    }

    static Config parse_string(const std::string& text,
                               const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream is(text);
        std::string line;
        std::string section;
        int ln = 0;
        while (std::getline(is, line)) {
            ++ln;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw schema_error(origin + ":" + std::to_string(ln) +
                                       ": unterminated section header");
                section = strip(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw schema_error(origin + ":" + std::to_string(ln) +
                                       ": empty section name");
                cfg.sections_[section];
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw schema_error(origin + ":" + std::to_string(ln) +
                                   ": expected 'key = value'");
            const std::string key = strip(s.substr(0, eq));
            const std::string val = strip(s.substr(eq + 1));
            if (key.empty() || val.empty())
                throw schema_error(origin + ":" + std::to_string(ln) +
                                   ": empty key or value");
            cfg.sections_[section][key] = parse_value(val, origin, ln);
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) > 0;
    }
    bool has_section(const std::string& section) const {
        return sections_.count(section) > 0;
    }
    const ConfigValue& at(const std::string& section,
                          const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end() || !it->second.count(key))
            throw schema_error(origin_ + ": missing key [" + section + "] " +
                               key);
        return it->second.at(key);
    }
    double number_or(const std::string& section, const std::string& key,
                     double dflt) const {
        return has(section, key) ? at(section, key).as_number() : dflt;
    }
    std::string string_or(const std::string& section, const std::string& key,
                          const std::string& dflt) const {
        return has(section, key) ? at(section, key).as_string() : dflt;
    }

private:
    static std::string strip(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
            --e;
        return s.substr(b, e - b);
    }

    static ConfigValue parse_scalar(const std::string& v,
                                    const std::string& origin, int ln) {
        ConfigValue out;
        out.line = ln;
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
            out.v = v.substr(1, v.size() - 2);
            return out;
        }
        if (v == "true" || v == "false") {
            out.v = (v == "true");
            return out;
        }
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            out.v = d;
            return out;
        } catch (const std::exception&) {
            throw schema_error(origin + ":" + std::to_string(ln) +
                               ": cannot parse value '" + v + "'");
        }
    }

    static ConfigValue parse_value(const std::string& v,
                                   const std::string& origin, int ln) {
        if (v.front() != '[') return parse_scalar(v, origin, ln);
        if (v.back() != ']')
            throw schema_error(origin + ":" + std::to_string(ln) +
                               ": unterminated array");
        std::vector<std::string> items;
        std::string cur;
        bool in_str = false;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            const char c = v[i];
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                items.push_back(strip(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!strip(cur).empty()) items.push_back(strip(cur));
        ConfigValue out;
        out.line = ln;
        if (items.empty()) {
            out.v = std::vector<double>{};
            return out;
        }
        if (items.front().front() == '"') {
            std::vector<std::string> ss;
            for (const auto& it : items)
                ss.push_back(parse_scalar(it, origin, ln).as_string());
            out.v = std::move(ss);
        } else {
            std::vector<double> ds;
            for (const auto& it : items)
                ds.push_back(parse_scalar(it, origin, ln).as_number());
            out.v = std::move(ds);
        }
        return out;
    }

    std::string origin_;
    std::map<std::string, Section> sections_;
};

} // namespace qhlab
