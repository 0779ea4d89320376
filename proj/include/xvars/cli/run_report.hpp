#pragma once

#include <filesystem>
#include <string>

#include "xvars/common/ini.hpp"
#include "xvars/training/config.hpp"

namespace xvars::cli {

inline constexpr const char* kRunReportFile = "run_report.txt";

/// The record every command leaves in its output directory. Layout in
/// docs/run_report.md. Contains no timestamps or absolute output paths so
/// that replaying a run reproduces it byte for byte.
class RunReport {
public:
    RunReport(std::string command, std::uint64_t seed, std::string device);

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_metric(const std::string& key, const std::string& value) { set("metrics", key, value); }
    void set_config(const std::string& name, const train::KeyValues& values);
    /// Path as given plus the SHA-256 of the file (a checkpoint directory is
    /// digested through its manifest).
    void add_input(const std::string& name, const std::filesystem::path& path);
    /// `<out_dir>/<name>` must exist; recorded as name = digest.
    void add_artifact(const std::filesystem::path& out_dir, const std::string& name);

    std::string text() const { return doc_.serialize(); }
    const IniDocument& document() const { return doc_; }
    /// Writes `<dir>/run_report.txt`.
    std::filesystem::path write(const std::filesystem::path& dir) const;

private:
    IniDocument doc_;
};

}  // namespace xvars::cli
