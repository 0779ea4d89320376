#include "xvars/training/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "xvars/common/digest.hpp"
#include "xvars/common/error.hpp"
#include "xvars/common/ini.hpp"
#include "xvars/nn/serialize.hpp"

namespace fs = std::filesystem;

namespace xvars::train {
namespace {

constexpr std::string_view kArtifactNames[] = {"encoder", "heads", "projection", "lm_base", "lm_adapter", "vocab"};

fs::path manifest_file(const fs::path& path) {
    return fs::is_directory(path) ? path / std::string(kManifestFileName) : path;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::vector<int> split_ints(const std::string& text, const std::string& what) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(static_cast<int>(parse_int(item, what)));
    }
    return out;
}

// Path of `target` as seen from `dir`, with forward slashes.
std::string relative_ref(const fs::path& target, const fs::path& dir) {
    return fs::relative(fs::absolute(target), fs::absolute(dir)).generic_string();
}

CheckpointManifest write_manifest(CheckpointManifest m, const fs::path& dir) {
    m.path = dir / std::string(kManifestFileName);
    std::ofstream out(m.path, std::ios::binary);
    out << m.serialize();
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + m.path.string());
    }
    return m;
}

}  // namespace

fs::path CheckpointManifest::resolve(const std::string& artifact) const {
    const auto it = artifacts.find(artifact);
    if (it == artifacts.end()) {
        fail(ErrorCode::Schema, path.string() + ": no '" + artifact + "' artifact");
    }
    const fs::path ref(it->second.ref);
    return ref.is_absolute() ? ref : path.parent_path() / ref;
}

std::string CheckpointManifest::serialize() const {
    std::ostringstream out;
    out << "format = " << kCheckpointFormat << "\n";
    out << "stage = " << stage << "\n";
    for (const auto name : kArtifactNames) {
        const auto it = artifacts.find(std::string(name));
        if (it == artifacts.end()) continue;
        out << name << "_weights_ref = " << it->second.ref << "\n";
        out << name << "_weights_digest = " << it->second.digest << "\n";
    }
    if (stage == 2) {
        out << "lm.vocab_size = " << vocab_size << "\n";
        out << "adapter.layers = " << join_ints(adapter_layers) << "\n";
        out << "adapter.rank = " << adapter_rank << "\n";
        out << "adapter.alpha = " << format_double(adapter_alpha) << "\n";
    }
    for (const auto& [k, v] : stage1_config) out << "config.stage1." << k << " = " << v << "\n";
    for (const auto& [k, v] : stage2_config) out << "config.stage2." << k << " = " << v << "\n";
    return out.str();
}

CheckpointManifest CheckpointManifest::parse(std::string_view text, const fs::path& path) {
    IniDocument doc;
    try {
        doc = IniDocument::parse(text, path.string());
    } catch (const Error& e) {
        fail(ErrorCode::Schema, e.what());
    }
    CheckpointManifest m;
    m.path = path;
    const auto where = [&](std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; };
    bool format_seen = false;
    bool stage_seen = false;
    for (const auto& e : doc.entries("")) {
        try {
            const auto& k = e.key;
            if (k == "format") {
                if (e.value != kCheckpointFormat) {
                    fail(ErrorCode::Schema, "unsupported format '" + e.value + "'");
                }
                format_seen = true;
            } else if (k == "stage") {
                m.stage = static_cast<int>(parse_int(e.value, k));
                if (m.stage != 1 && m.stage != 2) fail(ErrorCode::Schema, "stage must be 1 or 2");
                stage_seen = true;
            } else if (k.rfind("config.stage1.", 0) == 0) {
                m.stage1_config.emplace_back(k.substr(14), e.value);
            } else if (k.rfind("config.stage2.", 0) == 0) {
                m.stage2_config.emplace_back(k.substr(14), e.value);
            } else if (k == "lm.vocab_size") {
                m.vocab_size = static_cast<int>(parse_int(e.value, k));
            } else if (k == "adapter.layers") {
                m.adapter_layers = split_ints(e.value, k);
            } else if (k == "adapter.rank") {
                m.adapter_rank = static_cast<int>(parse_int(e.value, k));
            } else if (k == "adapter.alpha") {
                m.adapter_alpha = parse_double(e.value, k);
            } else if (k.size() > 12 && k.compare(k.size() - 12, 12, "_weights_ref") == 0) {
                m.artifacts[k.substr(0, k.size() - 12)].ref = e.value;
            } else if (k.size() > 15 && k.compare(k.size() - 15, 15, "_weights_digest") == 0) {
                m.artifacts[k.substr(0, k.size() - 15)].digest = e.value;
            } else {
                fail(ErrorCode::Schema, "unknown key '" + k + "'");
            }
        } catch (const Error& err) {
            fail(ErrorCode::Schema, where(e.line) + err.what());
        }
    }
    if (!format_seen || !stage_seen) {
        fail(ErrorCode::Schema, path.string() + ": manifest needs 'format' and 'stage'");
    }
    std::vector<std::string> required = {"encoder", "heads"};
    if (m.stage == 2) required.insert(required.end(), {"projection", "lm_base", "lm_adapter", "vocab"});
    for (const auto& name : required) {
        const auto it = m.artifacts.find(name);
        if (it == m.artifacts.end() || it->second.ref.empty() || it->second.digest.empty()) {
            fail(ErrorCode::Schema, path.string() + ": missing ref or digest for '" + name + "'");
        }
    }
    return m;
}

CheckpointManifest save_stage1_checkpoint(const fs::path& dir, const ToyVisionEncoder& encoder,
                                          const ClassificationHeads& heads, const Stage1Config& cfg) {
    fs::create_directories(dir);
    CheckpointManifest m;
    m.stage = 1;
    m.artifacts["encoder"] = {"encoder.xvw", nn::save_parameters(dir / "encoder.xvw", encoder.parameters())};
    m.artifacts["heads"] = {"heads.xvw", nn::save_parameters(dir / "heads.xvw", heads.parameters())};
    m.stage1_config = describe(cfg);
    return write_manifest(std::move(m), dir);
}

CheckpointManifest save_stage2_checkpoint(const fs::path& dir, const CheckpointManifest& stage1,
                                          const Stage2Result& trained, const Stage2Config& cfg) {
    fs::create_directories(dir);
    CheckpointManifest m;
    m.stage = 2;
    for (const auto* name : {"encoder", "heads"}) {
        const auto& src = stage1.artifacts.at(name);
        m.artifacts[name] = {relative_ref(stage1.resolve(name), dir), src.digest};
    }
    const auto& lm = *trained.language_model;
    m.artifacts["projection"] = {"projection.xvw",
                                 nn::save_parameters(dir / "projection.xvw",
                                                     std::as_const(*trained.projection).parameters())};
    m.artifacts["lm_base"] = {"lm_base.xvw", nn::save_parameters(dir / "lm_base.xvw", lm.base_parameters())};
    m.artifacts["lm_adapter"] = {"lm_adapter.xvw",
                                 nn::save_parameters(dir / "lm_adapter.xvw", lm.adapter_parameters())};
    trained.tokenizer->save(dir / "vocab.txt");
    m.artifacts["vocab"] = {"vocab.txt", sha256_file(dir / "vocab.txt")};
    m.vocab_size = trained.tokenizer->size();
    m.adapter_layers = lm.adapted_layers();
    m.adapter_rank = cfg.adapter_rank;
    m.adapter_alpha = cfg.adapter_alpha;
    m.stage1_config = stage1.stage1_config;
    m.stage2_config = describe(cfg);
    return write_manifest(std::move(m), dir);
}

CheckpointManifest read_manifest(const fs::path& path) {
    const auto file = manifest_file(path);
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        fail(ErrorCode::MissingFile, "missing checkpoint manifest " + file.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return CheckpointManifest::parse(buf.str(), file);
}

void verify_artifacts(const CheckpointManifest& manifest) {
    for (const auto& [name, artifact] : manifest.artifacts) {
        const auto file = manifest.resolve(name);
        if (!fs::exists(file)) {
            fail(ErrorCode::MissingFile, manifest.path.string() + ": '" + name + "' file " + file.string() +
                                             " does not exist");
        }
        const auto actual = sha256_file(file);
        if (actual != artifact.digest) {
            fail(ErrorCode::DigestMismatch, manifest.path.string() + ": '" + name + "' file " + file.string() +
                                                " has digest " + actual + ", manifest says " + artifact.digest);
        }
    }
}

XVarsModel LoadedCheckpoint::model() const {
    return XVarsModel(encoder, heads, projection, language_model, tokenizer);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
    LoadedCheckpoint out;
    out.manifest = read_manifest(path);
    const auto& m = out.manifest;
    verify_artifacts(m);

    for (const auto& [k, v] : m.stage1_config) set_option(out.stage1, k, v);
    out.encoder = std::make_shared<ToyVisionEncoder>(out.stage1.encoder, 0);
    out.heads = std::make_shared<ClassificationHeads>(out.stage1.encoder.feature_dim, 0);
    nn::load_parameters(m.resolve("encoder"), out.encoder->parameters());
    nn::load_parameters(m.resolve("heads"), out.heads->parameters());
    if (m.stage == 1) return out;

    Stage2Config s2;
    for (const auto& [k, v] : m.stage2_config) set_option(s2, k, v);
    out.stage2 = s2;
    out.tokenizer = std::make_shared<Tokenizer>(Tokenizer::load(m.resolve("vocab")));
    if (out.tokenizer->size() != m.vocab_size) {
        fail(ErrorCode::Schema, m.path.string() + ": vocabulary has " + std::to_string(out.tokenizer->size()) +
                                    " tokens, manifest says " + std::to_string(m.vocab_size));
    }
    auto lm_cfg = s2.language_model;
    lm_cfg.vocab_size = m.vocab_size;
    out.language_model = std::make_shared<ToyLanguageModel>(lm_cfg, 0);
    nn::load_parameters(m.resolve("lm_base"), out.language_model->base_parameters());
    out.language_model->attach_adapters({m.adapter_layers, m.adapter_rank, m.adapter_alpha, 0});
    nn::load_parameters(m.resolve("lm_adapter"), out.language_model->adapter_parameters());
    out.projection = std::make_shared<Projection>(out.stage1.encoder.hidden_dim, lm_cfg.width, 0);
    nn::load_parameters(m.resolve("projection"), out.projection->parameters());
    return out;
}

}  // namespace xvars::train
