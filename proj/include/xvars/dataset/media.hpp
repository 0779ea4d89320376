#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace xvars::data {

/// Decoded frames: T x H x W x C bytes, row-major, channel fastest.
struct MediaFrames {
    int frames = 0;
    int height = 0;
    int width = 0;
    int channels = 3;
    double fps = 25.0;
    std::vector<std::uint8_t> pixels;

    const std::uint8_t* frame(int t) const {
        return pixels.data() + static_cast<std::size_t>(t) * height * width * channels;
    }
};

/// Source of decoded frames. Implementations must be safe for concurrent reads.
class MediaReader {
public:
    virtual ~MediaReader() = default;
    /// UnreadableMedia when the path is missing, malformed or of an unsupported kind.
    virtual MediaFrames read(const std::filesystem::path& path) const = 0;
};

/// Reads `.xvc` frame stacks and directories of binary PPM (P6) frames
/// named in lexicographic order. See docs/dataset_manifest.md.
class FileMediaReader final : public MediaReader {
public:
    MediaFrames read(const std::filesystem::path& path) const override;
};

// .xvc layout (little-endian): "XVC1" | u32 T | u32 H | u32 W | u32 C | f64 fps | u8[T*H*W*C]
void write_xvc(const std::filesystem::path& path, const MediaFrames& media);
MediaFrames read_xvc(const std::filesystem::path& path);

/// Writes frame_0000.ppm, frame_0001.ppm, ... into `dir`.
void write_ppm_directory(const std::filesystem::path& dir, const MediaFrames& media);
MediaFrames read_ppm_directory(const std::filesystem::path& dir);

}  // namespace xvars::data
