#include "fedleak/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fedleak/errors.hpp"

namespace fedleak {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'G', 'M'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <typename T>
    void le(T value) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (pos_ + n > in_.size()) {
            throw CheckpointError("checkpoint truncated: need " + std::to_string(pos_ + n) + " bytes, have " +
                                  std::to_string(in_.size()));
        }
        auto out = in_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    template <typename T>
    T le() {
        auto b = bytes(sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{b[i]} << (8 * i));
        return value;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params) {
    Writer w;
    w.bytes(kMagic, 4);
    w.le<std::uint16_t>(kCheckpointVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    for (const auto& e : params.entries()) {
        if (e.name.size() > UINT16_MAX) throw CheckpointError("parameter name too long: " + e.name);
        w.le<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
        w.bytes(e.name.data(), e.name.size());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(e.tensor.rank()));
        for (auto extent : e.tensor.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(extent));
        for (float v : e.tensor.values()) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
    return w.take();
}

ParamSet decode_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (bytes.size() < 4 || std::memcmp(r.bytes(4).data(), kMagic, 4) != 0) {
        throw CheckpointError("not a checkpoint: bad magic");
    }
    const auto version = r.le<std::uint16_t>();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = r.le<std::uint32_t>();
    ParamSet params;
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto name_len = r.le<std::uint16_t>();
        const auto name_bytes = r.bytes(name_len);
        std::string name(name_bytes.begin(), name_bytes.end());
        const auto rank = r.le<std::uint8_t>();
        if (rank == 0) throw CheckpointError("tensor '" + name + "' has rank 0");
        Shape shape;
        for (std::uint8_t i = 0; i < rank; ++i) {
            const auto extent = r.le<std::uint32_t>();
            if (extent == 0) throw CheckpointError("tensor '" + name + "' has a zero extent");
            shape.push_back(extent);
        }
        std::vector<float> data(shape_numel(shape));
        for (auto& v : data) v = std::bit_cast<float>(r.le<std::uint32_t>());
        try {
            params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
        } catch (const UsageError& e) {
            throw CheckpointError(e.what());
        }
    }
    if (!r.done()) throw CheckpointError("trailing bytes after last tensor");
    return params;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_checkpoint(bytes);
}

ParamSet load_checkpoint(const std::filesystem::path& path, const ParamSet& layout) {
    ParamSet params = load_checkpoint(path);
    if (!params.same_layout(layout)) {
        throw CheckpointError(path.string() + ": tensor names or shapes do not match the expected architecture");
    }
    return params;
}

}  // namespace fedleak
