#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace sceneloc {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
/// Parses the whole string as a double; throws DataError otherwise.
double parse_double(std::string_view s);

/// Flat `key = value` configuration. Lines starting with '#' and blank lines
/// are ignored. Typed getters record their default when the key is absent,
/// so after a run the object holds every parameter that was used.
class Config {
public:
    /// Throws DataError on a line without '='.
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    /// Applies a `key=value` override; throws InvalidArgument if '=' is missing.
    void apply_override(std::string_view assignment);
    /// Copies every entry of `other`, replacing existing keys.
    void merge(const Config& other);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    // Bad values throw InvalidArgument naming the key.
    std::string get_string(const std::string& key, const std::string& def);
    double get_double(const std::string& key, double def);
    int get_int(const std::string& key, int def);
    std::uint64_t get_u64(const std::string& key, std::uint64_t def);
    bool get_bool(const std::string& key, bool def);

    /// Throws InvalidArgument when missing.
    std::string require(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace sceneloc
