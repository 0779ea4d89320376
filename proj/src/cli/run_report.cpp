#include "xvars/cli/run_report.hpp"

#include "xvars/common/digest.hpp"
#include "xvars/common/error.hpp"
#include "xvars/training/checkpoint.hpp"

namespace xvars::cli {

RunReport::RunReport(std::string command, std::uint64_t seed, std::string device) {
    doc_.set("run", "command", std::move(command));
    doc_.set("run", "seed", std::to_string(seed));
    doc_.set("run", "device", std::move(device));
    doc_.set("run", "format", "xvars-run-report/1");
}

void RunReport::set(const std::string& section, const std::string& key, const std::string& value) {
    doc_.set(section, key, value);
}

void RunReport::set_config(const std::string& name, const train::KeyValues& values) {
    for (const auto& [k, v] : values) doc_.set("config." + name, k, v);
}

void RunReport::add_input(const std::string& name, const std::filesystem::path& path) {
    auto file = path;
    if (std::filesystem::is_directory(file)) file /= train::kManifestFileName;
    if (!std::filesystem::is_regular_file(file)) {
        fail(ErrorCode::MissingFile, "missing input " + path.string());
    }
    doc_.set("inputs", name, path.string());
    doc_.set("inputs", name + ".digest", sha256_file(file));
}

void RunReport::add_artifact(const std::filesystem::path& out_dir, const std::string& name) {
    doc_.set("artifacts", name, sha256_file(out_dir / name));
}

std::filesystem::path RunReport::write(const std::filesystem::path& dir) const {
    const auto path = dir / kRunReportFile;
    doc_.save(path);
    return path;
}

}  // namespace xvars::cli
