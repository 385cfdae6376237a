#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace wmt {

/// Flat `key = value` configuration. Lines starting with '#' and blank lines
/// are ignored; later assignments override earlier ones.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text, std::string_view origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(std::string key, std::string value);
    bool contains(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;

    std::string get_string(std::string_view key, std::string fallback) const;
    long long get_int(std::string_view key, long long fallback) const;
    double get_double(std::string_view key, double fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;

    /// Overlays every entry of `other` onto this config.
    void merge(const KeyValueConfig& other);

    const std::map<std::string, std::string, std::less<>>& entries() const noexcept {
        return entries_;
    }
    /// Canonical text form: sorted `key=value` lines.
    std::string to_string() const;

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace wmt
