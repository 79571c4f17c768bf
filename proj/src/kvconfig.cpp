#include "netqos/kvconfig.hpp"

#include "netqos/common.hpp"
#include "netqos/errors.hpp"

namespace netqos {

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : split_string(text, '\n')) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        Entry e;
        e.section = section;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (e.key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.entries_.push_back(std::move(e));
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    return parse(read_text_file(path), path);
}

const KvConfig::Entry* KvConfig::find(const std::string& section, const std::string& key) const {
    const Entry* hit = nullptr;
    for (const auto& e : entries_) {
        if (e.section == section && e.key == key) {
            e.consumed = true;
            hit = &e; // last occurrence wins for single-valued keys
        }
    }
    return hit;
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
    for (const auto& e : entries_)
        if (e.section == section && e.key == key) return true;
    return false;
}

std::string KvConfig::get_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(origin_ + ": missing key [" + section + "] " + key);
    return e->value;
}

std::string KvConfig::get_string(const std::string& section, const std::string& key,
                                 const std::string& def) const {
    const Entry* e = find(section, key);
    return e ? e->value : def;
}

double KvConfig::get_real(const std::string& section, const std::string& key, double def) const {
    const Entry* e = find(section, key);
    if (!e) return def;
    try {
        return parse_real(e->value);
    } catch (const std::invalid_argument&) {
        throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": bad real for " + key);
    }
}

std::int64_t KvConfig::get_int(const std::string& section, const std::string& key,
                               std::int64_t def) const {
    const Entry* e = find(section, key);
    if (!e) return def;
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": bad integer for " + key);
    }
}

std::uint64_t KvConfig::get_u64(const std::string& section, const std::string& key,
                                std::uint64_t def) const {
    const Entry* e = find(section, key);
    if (!e) return def;
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": bad unsigned for " + key);
    }
}

bool KvConfig::get_bool(const std::string& section, const std::string& key, bool def) const {
    const Entry* e = find(section, key);
    if (!e) return def;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": bad bool for " + key);
}

std::vector<std::string> KvConfig::get_all(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.section == section && e.key == key) {
            e.consumed = true;
            out.push_back(e.value);
        }
    }
    return out;
}

void KvConfig::reject_unconsumed() const {
    for (const auto& e : entries_) {
        if (!e.consumed)
            throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key [" +
                              e.section + "] " + e.key);
    }
}

} // namespace netqos
