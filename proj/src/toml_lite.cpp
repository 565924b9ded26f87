#include "critpt/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace critpt::toml {

double Value::as_number() const {
    if (kind != Kind::number) throw std::runtime_error("toml: expected a number");
    return num;
}

const std::string& Value::as_string() const {
    if (kind != Kind::string) throw std::runtime_error("toml: expected a string");
    return str;
}

bool Value::as_bool() const {
    if (kind != Kind::boolean) throw std::runtime_error("toml: expected a boolean");
    return b;
}

const std::vector<Value>& Value::as_array() const {
    if (kind != Kind::array) throw std::runtime_error("toml: expected an array");
    return arr;
}

namespace {

void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
}

Value parse_value(const std::string& s, std::size_t& i);

Value parse_array(const std::string& s, std::size_t& i) {
    Value v;
    v.kind = Value::Kind::array;
    ++i; // '['
    skip_ws(s, i);
    while (i < s.size() && s[i] != ']') {
        v.arr.push_back(parse_value(s, i));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws(s, i);
        }
    }
    if (i >= s.size()) throw std::runtime_error("toml: unterminated array");
    ++i; // ']'
    return v;
}

Value parse_value(const std::string& s, std::size_t& i) {
    skip_ws(s, i);
    if (i >= s.size()) throw std::runtime_error("toml: missing value");
    Value v;
    if (s[i] == '[') return parse_array(s, i);
    if (s[i] == '"') {
        v.kind = Value::Kind::string;
        ++i;
        while (i < s.size() && s[i] != '"') v.str.push_back(s[i++]);
        if (i >= s.size()) throw std::runtime_error("toml: unterminated string");
        ++i;
        return v;
    }
    std::string tok;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '\n' && s[i] != '#' &&
           s[i] != ' ' && s[i] != '\t' && s[i] != '\r')
        tok.push_back(s[i++]);
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::boolean;
        v.b = tok == "true";
        return v;
    }
    if (tok == "-inf" || tok == "inf" || tok == "nan") {
        // keep the sentinel spelling visible to callers
        v.kind = Value::Kind::string;
        v.str = tok;
        return v;
    }
    try {
        std::size_t used = 0;
        v.num = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
        throw std::runtime_error("toml: cannot parse value '" + tok + "'");
    }
    v.kind = Value::Kind::number;
    return v;
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

Table parse(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line, section;
    std::string pending; // buffered multi-line value (unbalanced brackets)
    std::string pending_key;
    while (std::getline(in, line)) {
        line = strip_comment(line);
        if (!pending_key.empty()) {
            pending += "\n" + line;
        } else {
            std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string::npos) {
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("toml: expected key = value: " + t);
            pending_key = trim(t.substr(0, eq));
            if (!section.empty()) pending_key = section + "." + pending_key;
            pending = t.substr(eq + 1);
        }
        // balanced brackets outside strings -> value complete
        int depth = 0;
        bool in_string = false;
        for (char c : pending) {
            if (c == '"') in_string = !in_string;
            if (in_string) continue;
            if (c == '[') ++depth;
            if (c == ']') --depth;
        }
        if (depth > 0) continue;
        std::size_t i = 0;
        table[pending_key] = parse_value(pending, i);
        pending_key.clear();
        pending.clear();
    }
    if (!pending_key.empty()) throw std::runtime_error("toml: unterminated value");
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool has(const Table& t, const std::string& key) { return t.count(key) > 0; }

const Value& get(const Table& t, const std::string& key) {
    auto it = t.find(key);
    if (it == t.end()) throw std::runtime_error("config key missing: " + key);
    return it->second;
}

double get_number(const Table& t, const std::string& key) { return get(t, key).as_number(); }

double get_number_or(const Table& t, const std::string& key, double fallback) {
    return has(t, key) ? get_number(t, key) : fallback;
}

long get_integer(const Table& t, const std::string& key) {
    return static_cast<long>(get_number(t, key));
}

long get_integer_or(const Table& t, const std::string& key, long fallback) {
    return has(t, key) ? get_integer(t, key) : fallback;
}

std::string get_string(const Table& t, const std::string& key) { return get(t, key).as_string(); }

bool get_bool_or(const Table& t, const std::string& key, bool fallback) {
    return has(t, key) ? get(t, key).as_bool() : fallback;
}

std::vector<double> get_number_array(const Table& t, const std::string& key) {
    std::vector<double> out;
    for (const Value& v : get(t, key).as_array()) out.push_back(v.as_number());
    return out;
}

} // namespace critpt::toml
