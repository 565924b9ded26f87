#pragma once

#include <map>
#include <string>
#include <vector>

namespace critpt::toml {

// Reader for the small TOML subset the fixtures use: [section] headers,
// bare keys, strings, numbers, booleans, (nested) arrays, # comments.
// Keys are flattened to "section.key".
struct Value {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::number;
    std::string str;
    double num = 0;
    bool b = false;
    std::vector<Value> arr;

    double as_number() const;
    const std::string& as_string() const;
    bool as_bool() const;
    const std::vector<Value>& as_array() const;
};

using Table = std::map<std::string, Value>;

Table parse(const std::string& text);
Table parse_file(const std::string& path);

bool has(const Table& t, const std::string& key);
double get_number(const Table& t, const std::string& key);
double get_number_or(const Table& t, const std::string& key, double fallback);
long get_integer(const Table& t, const std::string& key);
long get_integer_or(const Table& t, const std::string& key, long fallback);
std::string get_string(const Table& t, const std::string& key);
bool get_bool_or(const Table& t, const std::string& key, bool fallback);
std::vector<double> get_number_array(const Table& t, const std::string& key);
const Value& get(const Table& t, const std::string& key);

} // namespace critpt::toml
