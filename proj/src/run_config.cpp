#include "sceneloc/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

Config Config::parse(std::string_view text) {
    Config c;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
        c.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

void Config::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << serialize();
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

void Config::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw InvalidArgument("override '" + std::string(assignment) + "' is not key=value");
    }
    const auto key = trim(assignment.substr(0, eq));
    if (key.empty()) throw InvalidArgument("override has an empty key");
    values_[std::string(key)] = std::string(trim(assignment.substr(eq + 1)));
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string Config::get_string(const std::string& key, const std::string& def) {
    auto [it, inserted] = values_.try_emplace(key, def);
    return it->second;
}

double Config::get_double(const std::string& key, double def) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        values_[key] = format_double(def);
        return def;
    }
    try {
        return parse_double(it->second);
    } catch (const DataError&) {
        throw InvalidArgument("config key '" + key + "' needs a number, got '" + it->second + "'");
    }
}

int Config::get_int(const std::string& key, int def) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        values_[key] = std::to_string(def);
        return def;
    }
    const std::string_view s = trim(it->second);
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("config key '" + key + "' needs an integer, got '" + it->second + "'");
    }
    return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        values_[key] = std::to_string(def);
        return def;
    }
    const std::string_view s = trim(it->second);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("config key '" + key + "' needs an unsigned integer, got '" + it->second + "'");
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool def) {
    const std::string v = get_string(key, def ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidArgument("config key '" + key + "' needs true/false, got '" + v + "'");
}

std::string Config::require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("missing config key '" + key + "'");
    return it->second;
}

}  // namespace sceneloc
