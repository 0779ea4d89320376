#include "xvars/common/ini.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xvars/common/error.hpp"

namespace xvars {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

const std::vector<IniDocument::Entry> kNoEntries;

}  // namespace

IniDocument IniDocument::parse(std::string_view text, const std::string& origin) {
    IniDocument doc;
    doc.origin_ = origin;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        const auto raw = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        pos = (end == std::string_view::npos) ? text.size() + 1 : end + 1;
        ++line_no;

        const auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                fail(ErrorCode::Config, origin + ":" + std::to_string(line_no) +
                                            ": malformed section header '" + std::string(line) + "'");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!doc.sections_.count(section)) {
                doc.order_.push_back(section);
                doc.sections_[section];
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorCode::Config, origin + ":" + std::to_string(line_no) +
                                        ": expected 'key = value', got '" + std::string(line) + "'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) {
            fail(ErrorCode::Config, origin + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!doc.sections_.count(section)) {
            doc.order_.push_back(section);
        }
        auto& entries = doc.sections_[section];
        for (const auto& e : entries) {
            if (e.key == key) {
                fail(ErrorCode::Config, origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                                            std::string(key) + "' (first on line " +
                                            std::to_string(e.line) + ")");
            }
        }
        entries.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

void IniDocument::set(const std::string& section, const std::string& key, std::string value) {
    if (!sections_.count(section)) {
        order_.push_back(section);
    }
    auto& entries = sections_[section];
    for (auto& e : entries) {
        if (e.key == key) {
            e.value = std::move(value);
            return;
        }
    }
    entries.push_back({key, std::move(value), 0});
}

std::optional<std::string> IniDocument::get(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) {
        return std::nullopt;
    }
    for (const auto& e : it->second) {
        if (e.key == key) {
            return e.value;
        }
    }
    return std::nullopt;
}

std::string IniDocument::require(const std::string& section, const std::string& key) const {
    auto value = get(section, key);
    if (!value) {
        fail(ErrorCode::Config, origin_ + ": missing key '" + key + "'" +
                                    (section.empty() ? std::string() : " in section [" + section + "]"));
    }
    return *value;
}

bool IniDocument::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

const std::vector<IniDocument::Entry>& IniDocument::entries(const std::string& section) const {
    const auto it = sections_.find(section);
    return it == sections_.end() ? kNoEntries : it->second;
}

std::vector<std::string> IniDocument::sections() const { return order_; }

std::string IniDocument::serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& name : order_) {
        const auto& entries = sections_.at(name);
        if (!name.empty()) {
            if (!first) {
                out << '\n';
            }
            out << '[' << name << "]\n";
        }
        for (const auto& e : entries) {
            out << e.key << " = " << e.value << '\n';
        }
        first = false;
    }
    return out.str();
}

void IniDocument::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    out << serialize();
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return value;
    } catch (const std::exception&) {
        fail(ErrorCode::Config, what + ": expected a number, got '" + text + "'");
    }
}

long long parse_int(const std::string& text, const std::string& what) {
    long long value = 0;
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        fail(ErrorCode::Config, what + ": expected an integer, got '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    fail(ErrorCode::Config, what + ": expected a boolean, got '" + text + "'");
}

std::string format_double(double value) {
    char buf[64];
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::stod(buf) == value) {
            break;
        }
    }
    return buf;
}

}  // namespace xvars
