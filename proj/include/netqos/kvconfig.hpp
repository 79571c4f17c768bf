#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netqos {

/// Parsed form of the line-oriented config format:
/// `[section]` headers, `key = value` lines, `#` comments, blank lines ignored.
/// Repeated keys (e.g. `event = ...`) are kept in file order.
class KvConfig {
public:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
        std::size_t line = 0;
        mutable bool consumed = false;
    };

    static KvConfig parse(const std::string& text, const std::string& origin = "<config>");
    static KvConfig parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;

    /// Single-valued lookups; throw ConfigError on absent key unless a default is given.
    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& def) const;
    double get_real(const std::string& section, const std::string& key, double def) const;
    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t def) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t def) const;
    bool get_bool(const std::string& section, const std::string& key, bool def) const;

    /// All values for a repeated key, in file order.
    std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

    /// Throws ConfigError naming the first entry never consumed by a getter.
    void reject_unconsumed() const;

    const std::string& origin() const { return origin_; }

private:
    const Entry* find(const std::string& section, const std::string& key) const;

    std::vector<Entry> entries_;
    std::string origin_;
};

} // namespace netqos
