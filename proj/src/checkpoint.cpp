#include "sceneloc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw DataError("checkpoint is truncated");
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return v;
    }

    void expect_magic() {
        if (bytes_.size() < sizeof(kCheckpointMagic) ||
            std::memcmp(bytes_.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
            throw DataError("not a model checkpoint (bad magic)");
        }
        pos_ = sizeof(kCheckpointMagic);
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

int as_int(std::uint32_t v) {
    if (v > 1u << 24) throw DataError("checkpoint field out of range");
    return static_cast<int>(v);
}

}  // namespace

std::string encode_checkpoint(const NetParams& params) {
    const Architecture& a = params.arch;
    if (params.theta.size() != a.parameter_count()) {
        throw InvalidArgument("parameter vector does not match architecture");
    }
    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint32_t>(out, a.in_height);
    put_le<std::uint32_t>(out, a.in_width);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.convs.size()));
    for (const ConvLayerSpec& c : a.convs) {
        put_le<std::uint32_t>(out, c.out_channels);
        put_le<std::uint32_t>(out, c.kernel);
        put_le<std::uint32_t>(out, c.stride);
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.hidden.size()));
    for (int n : a.hidden) put_le<std::uint32_t>(out, n);
    put_le<std::uint32_t>(out, Architecture::kOutputs);
    put_le<std::uint64_t>(out, params.theta.size());
    for (double v : params.theta) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

NetParams decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    r.expect_magic();
    const std::uint32_t version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    NetParams p;
    p.arch.in_height = as_int(r.get<std::uint32_t>());
    p.arch.in_width = as_int(r.get<std::uint32_t>());
    p.arch.convs.resize(as_int(r.get<std::uint32_t>()));
    for (ConvLayerSpec& c : p.arch.convs) {
        c.out_channels = as_int(r.get<std::uint32_t>());
        c.kernel = as_int(r.get<std::uint32_t>());
        c.stride = as_int(r.get<std::uint32_t>());
    }
    p.arch.hidden.resize(as_int(r.get<std::uint32_t>()));
    for (int& n : p.arch.hidden) n = as_int(r.get<std::uint32_t>());
    if (r.get<std::uint32_t>() != Architecture::kOutputs) throw DataError("checkpoint output count is not 6");
    try {
        p.arch.validate();
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("checkpoint architecture invalid: ") + e.what());
    }
    const std::uint64_t n = r.get<std::uint64_t>();
    if (n != p.arch.parameter_count()) throw DataError("checkpoint parameter count mismatch");
    p.theta.resize(n);
    for (double& v : p.theta) v = std::bit_cast<double>(r.get<std::uint64_t>());
    if (!r.at_end()) throw DataError("trailing bytes after checkpoint parameters");
    return p;
}

void save_checkpoint(const NetParams& params, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(params);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write checkpoint " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("failed writing checkpoint " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace sceneloc
