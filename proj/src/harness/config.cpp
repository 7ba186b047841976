#include "gatepose/harness/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gatepose/errors.hpp"

namespace gatepose::harness {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(std::istream& in) {
    Config cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw IoError("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("config line " + std::to_string(lineno) + ": expected key = value");
        cfg.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    return parse(in);
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key).has_value();
}

std::optional<std::string> Config::find(const std::string& section,
                                        const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    return find(section, key).value_or(fallback);
}

double Config::get(const std::string& section, const std::string& key, double fallback) const {
    const auto v = find(section, key);
    if (!v) return fallback;
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw IoError("config [" + section + "] " + key + ": not a number: " + *v);
    }
}

int Config::get(const std::string& section, const std::string& key, int fallback) const {
    const auto v = find(section, key);
    if (!v) return fallback;
    try {
        return std::stoi(*v);
    } catch (const std::exception&) {
        throw IoError("config [" + section + "] " + key + ": not an integer: " + *v);
    }
}

uint64_t Config::get(const std::string& section, const std::string& key,
                     uint64_t fallback) const {
    const auto v = find(section, key);
    if (!v) return fallback;
    try {
        return std::stoull(*v);
    } catch (const std::exception&) {
        throw IoError("config [" + section + "] " + key + ": not an integer: " + *v);
    }
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = value;
}

}  // namespace gatepose::harness
