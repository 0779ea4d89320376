#include "xvars/nn/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "xvars/common/digest.hpp"
#include "xvars/common/error.hpp"

namespace xvars::nn {
namespace {

constexpr char kMagic[4] = {'X', 'V', 'W', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
}

class Reader {
public:
    Reader(const std::string& data, std::string origin) : data_(data), origin_(std::move(origin)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        double v = 0;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) {
            fail(ErrorCode::Io, origin_ + ": truncated weight blob");
        }
    }

    const std::string& data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_parameters(const ConstParameterList& params) {
    std::string out(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
        put_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out += p->name;
        put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
        put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
        for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
            for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
                put_f64(out, p->value(i, j));
            }
        }
    }
    return out;
}

std::string save_parameters(const std::filesystem::path& path, const ConstParameterList& params) {
    const std::string blob = serialize_parameters(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) {
        fail(ErrorCode::Io, "short write to " + path.string());
    }
    return sha256_digest(blob);
}

void load_parameters(const std::filesystem::path& path, const ParameterList& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::MissingFile, "missing weight file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string data = buffer.str();
    Reader reader(data, path.string());
    if (reader.bytes(4) != std::string(kMagic, 4)) {
        fail(ErrorCode::Io, path.string() + ": not a weight blob");
    }
    const auto count = reader.u32();
    std::map<std::string, Matrix> stored;
    for (std::uint32_t n = 0; n < count; ++n) {
        const auto name = reader.bytes(reader.u32());
        const auto rows = reader.u32();
        const auto cols = reader.u32();
        Matrix m(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i) {
            for (std::uint32_t j = 0; j < cols; ++j) {
                m(i, j) = reader.f64();
            }
        }
        stored.emplace(name, std::move(m));
    }
    for (auto* p : params) {
        const auto it = stored.find(p->name);
        if (it == stored.end()) {
            fail(ErrorCode::Io, path.string() + ": missing tensor '" + p->name + "'");
        }
        if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
            fail(ErrorCode::DimensionMismatch, path.string() + ": tensor '" + p->name + "' has shape " +
                                                   std::to_string(it->second.rows()) + "x" +
                                                   std::to_string(it->second.cols()));
        }
        p->value = it->second;
    }
}

std::string parameter_digest(const ConstParameterList& params) {
    return sha256_digest(serialize_parameters(params));
}

long long parameter_count(const ConstParameterList& params) {
    long long total = 0;
    for (const auto* p : params) {
        total += p->value.size();
    }
    return total;
}

}  // namespace xvars::nn
