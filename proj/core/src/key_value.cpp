#include "wmt/key_value.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "wmt/error.hpp"

namespace wmt {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
    KeyValueConfig config;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw InputError(std::string(origin) + ":" + std::to_string(line_no) +
                             ": expected key = value");
        }
        const std::string_view key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw InputError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
        }
        config.set(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

void KeyValueConfig::set(std::string key, std::string value) {
    entries_[std::move(key)] = std::move(value);
}

bool KeyValueConfig::contains(std::string_view key) const {
    return entries_.find(key) != entries_.end();
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

long long KeyValueConfig::get_int(std::string_view key, long long fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw InputError("config key '" + std::string(key) + "' is not an integer: " + *v);
    }
    return out;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(*v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v->size() || v->empty()) {
        throw InputError("config key '" + std::string(key) + "' is not a number: " + *v);
    }
    return out;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") {
        return true;
    }
    if (*v == "0" || *v == "false" || *v == "no" || *v == "off") {
        return false;
    }
    throw InputError("config key '" + std::string(key) + "' is not a boolean: " + *v);
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
    for (const auto& [k, v] : other.entries_) {
        entries_[k] = v;
    }
}

std::string KeyValueConfig::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

}  // namespace wmt
