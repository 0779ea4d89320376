#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xvars/model/xvars_model.hpp"
#include "xvars/training/config.hpp"
#include "xvars/training/stage2.hpp"

namespace xvars::train {

inline constexpr std::string_view kCheckpointFormat = "xvars-checkpoint/1";
inline constexpr std::string_view kManifestFileName = "checkpoint.manifest";

/// A weight blob or vocabulary file named by a checkpoint manifest. `ref` is
/// relative to the manifest's directory.
struct ArtifactRef {
    std::string ref;
    std::string digest;

    bool operator==(const ArtifactRef&) const = default;
};

/// Text metadata of a checkpoint; layout documented in docs/checkpoint_format.md.
struct CheckpointManifest {
    int stage = 1;
    std::filesystem::path path;                    // the manifest file itself
    std::map<std::string, ArtifactRef> artifacts;  // encoder, heads, projection, lm_base, lm_adapter, vocab
    KeyValues stage1_config;
    KeyValues stage2_config;
    int vocab_size = 0;
    std::vector<int> adapter_layers;
    int adapter_rank = 0;
    double adapter_alpha = 0.0;

    std::filesystem::path resolve(const std::string& artifact) const;
    std::string serialize() const;
    /// Schema errors name the origin and line.
    static CheckpointManifest parse(std::string_view text, const std::filesystem::path& path);
};

/// Writes encoder.xvw, heads.xvw and the manifest into `dir`.
CheckpointManifest save_stage1_checkpoint(const std::filesystem::path& dir, const ToyVisionEncoder& encoder,
                                          const ClassificationHeads& heads, const Stage1Config& cfg);

/// Writes the projection, base LM, adapters and vocabulary into `dir`. The
/// encoder and heads are referenced from the stage-1 checkpoint, not copied.
CheckpointManifest save_stage2_checkpoint(const std::filesystem::path& dir, const CheckpointManifest& stage1,
                                          const Stage2Result& trained, const Stage2Config& cfg);

/// Accepts the manifest file or the directory holding it. MissingFile when
/// absent; Schema when malformed.
CheckpointManifest read_manifest(const std::filesystem::path& path);

/// MissingFile / DigestMismatch for the first artifact that does not verify.
void verify_artifacts(const CheckpointManifest& manifest);

struct LoadedCheckpoint {
    CheckpointManifest manifest;
    Stage1Config stage1;
    std::optional<Stage2Config> stage2;
    std::shared_ptr<ToyVisionEncoder> encoder;
    std::shared_ptr<ClassificationHeads> heads;
    std::shared_ptr<Projection> projection;
    std::shared_ptr<ToyLanguageModel> language_model;
    std::shared_ptr<Tokenizer> tokenizer;

    XVarsModel model() const;
};

/// Verifies every digest, then rebuilds the models from the config snapshot
/// and loads their weights.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xvars::train
