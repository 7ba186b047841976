#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace gatepose::harness {

/**
 * Flat key/value configuration with [section] headers and '#' comments,
 * one `key = value` per line. Every *Params type reads its knobs from a
 * section named after its module.
 */
class Config {
public:
    static Config parse(std::istream& in);
    static Config parse_file(const std::filesystem::path& path);  // throws IoError

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> find(const std::string& section, const std::string& key) const;

    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get(const std::string& section, const std::string& key, double fallback) const;
    int get(const std::string& section, const std::string& key, int fallback) const;
    uint64_t get(const std::string& section, const std::string& key, uint64_t fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace gatepose::harness
