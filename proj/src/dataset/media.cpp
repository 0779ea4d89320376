#include "xvars/dataset/media.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "xvars/common/error.hpp"

namespace xvars::data {
namespace {

constexpr char kXvcMagic[4] = {'X', 'V', 'C', '1'};
constexpr std::uint32_t kMaxDim = 1u << 15;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const std::vector<char>& buf, std::size_t& pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::UnreadableMedia, "cannot open media " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& why) {
    fail(ErrorCode::UnreadableMedia, "malformed media " + path.string() + ": " + why);
}

void validate(const MediaFrames& m) {
    if (m.frames < 1 || m.height < 1 || m.width < 1 || m.channels != 3) {
        fail(ErrorCode::InvalidArgument, "media must have T, H, W >= 1 and 3 channels");
    }
    if (m.pixels.size() != static_cast<std::size_t>(m.frames) * m.height * m.width * m.channels) {
        fail(ErrorCode::InvalidArgument, "media pixel count does not match its dimensions");
    }
}

// Reads the next whitespace-delimited header token of a PPM, skipping comments.
std::string ppm_token(const std::vector<char>& buf, std::size_t& pos) {
    while (pos < buf.size()) {
        if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) tok.push_back(buf[pos++]);
    return tok;
}

}  // namespace

void write_xvc(const std::filesystem::path& path, const MediaFrames& media) {
    validate(media);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    out.write(kXvcMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(media.frames));
    put_u32(out, static_cast<std::uint32_t>(media.height));
    put_u32(out, static_cast<std::uint32_t>(media.width));
    put_u32(out, static_cast<std::uint32_t>(media.channels));
    std::uint64_t fps_bits;
    std::memcpy(&fps_bits, &media.fps, sizeof fps_bits);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((fps_bits >> (8 * i)) & 0xFF));
    out.write(reinterpret_cast<const char*>(media.pixels.data()), static_cast<std::streamsize>(media.pixels.size()));
}

MediaFrames read_xvc(const std::filesystem::path& path) {
    const auto buf = slurp(path);
    if (buf.size() < 28 || std::memcmp(buf.data(), kXvcMagic, 4) != 0) {
        malformed(path, "bad header");
    }
    std::size_t pos = 4;
    const auto T = get_u32(buf, pos), H = get_u32(buf, pos), W = get_u32(buf, pos), C = get_u32(buf, pos);
    std::uint64_t fps_bits = 0;
    for (int i = 0; i < 8; ++i) fps_bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    if (T == 0 || H == 0 || W == 0 || C != 3 || T > kMaxDim || H > kMaxDim || W > kMaxDim) {
        malformed(path, "invalid dimensions");
    }
    const auto expected = static_cast<std::size_t>(T) * H * W * C;
    if (buf.size() - pos != expected) {
        malformed(path, "expected " + std::to_string(expected) + " pixel bytes, found " +
                            std::to_string(buf.size() - pos));
    }
    MediaFrames m;
    m.frames = static_cast<int>(T);
    m.height = static_cast<int>(H);
    m.width = static_cast<int>(W);
    m.channels = static_cast<int>(C);
    std::memcpy(&m.fps, &fps_bits, sizeof m.fps);
    if (!(m.fps > 0)) {
        malformed(path, "non-positive frame rate");
    }
    m.pixels.assign(reinterpret_cast<const std::uint8_t*>(buf.data() + pos),
                    reinterpret_cast<const std::uint8_t*>(buf.data() + buf.size()));
    return m;
}

void write_ppm_directory(const std::filesystem::path& dir, const MediaFrames& media) {
    validate(media);
    std::filesystem::create_directories(dir);
    const auto frame_bytes = static_cast<std::size_t>(media.height) * media.width * media.channels;
    for (int t = 0; t < media.frames; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.ppm", t);
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::Io, "cannot write " + (dir / name).string());
        }
        out << "P6\n" << media.width << ' ' << media.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(media.frame(t)), static_cast<std::streamsize>(frame_bytes));
    }
}

MediaFrames read_ppm_directory(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    if (files.empty()) {
        fail(ErrorCode::UnreadableMedia, "no .ppm frames in " + dir.string());
    }
    std::sort(files.begin(), files.end());
    MediaFrames m;
    m.frames = static_cast<int>(files.size());
    for (const auto& file : files) {
        const auto buf = slurp(file);
        std::size_t pos = 0;
        if (ppm_token(buf, pos) != "P6") {
            malformed(file, "not a binary PPM");
        }
        int w = 0, h = 0, maxval = 0;
        try {
            w = std::stoi(ppm_token(buf, pos));
            h = std::stoi(ppm_token(buf, pos));
            maxval = std::stoi(ppm_token(buf, pos));
        } catch (const std::exception&) {
            malformed(file, "bad header");
        }
        ++pos;  // single whitespace byte after maxval
        if (w < 1 || h < 1 || maxval != 255) {
            malformed(file, "unsupported dimensions or maxval");
        }
        if (m.height == 0) {
            m.height = h;
            m.width = w;
        } else if (h != m.height || w != m.width) {
            malformed(file, "frame size differs from the first frame");
        }
        const auto bytes = static_cast<std::size_t>(w) * h * 3;
        if (pos > buf.size() || buf.size() - pos != bytes) {
            malformed(file, "pixel data has the wrong length");
        }
        m.pixels.insert(m.pixels.end(), reinterpret_cast<const std::uint8_t*>(buf.data() + pos),
                        reinterpret_cast<const std::uint8_t*>(buf.data() + buf.size()));
    }
    return m;
}

MediaFrames FileMediaReader::read(const std::filesystem::path& path) const {
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) {
        return read_ppm_directory(path);
    }
    if (!std::filesystem::exists(path, ec)) {
        fail(ErrorCode::UnreadableMedia, "media not found: " + path.string());
    }
    if (path.extension() == ".xvc") {
        return read_xvc(path);
    }
    fail(ErrorCode::UnreadableMedia, "unsupported media kind '" + path.extension().string() + "' for " +
                                         path.string() + " (expected a .xvc file or a directory of .ppm frames)");
}

}  // namespace xvars::data
