#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xvars {

/// Line-oriented `key = value` document with optional `[section]` headers.
/// Keys that appear before any header live in the unnamed section "".
/// Comments start with '#' or ';' at the beginning of a line.
class IniDocument {
public:
    struct Entry {
        std::string key;
        std::string value;
        std::size_t line = 0;
    };

    static IniDocument parse(std::string_view text, const std::string& origin = "<memory>");
    static IniDocument load(const std::filesystem::path& path);

    void set(const std::string& section, const std::string& key, std::string value);
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string require(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;
    const std::vector<Entry>& entries(const std::string& section) const;
    std::vector<std::string> sections() const;

    std::string serialize() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> order_;
    std::map<std::string, std::vector<Entry>> sections_;
    std::string origin_ = "<memory>";
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

/// Shortest round-tripping decimal rendering of a double.
std::string format_double(double value);

}  // namespace xvars
