#include "fedleak/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <tuple>

#include "fedleak/errors.hpp"

namespace fedleak {

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::mnist: return "mnist";
        case DatasetKind::fashion_mnist: return "fashion_mnist";
        case DatasetKind::cifar10: return "cifar10";
    }
    return "?";
}

DatasetKind dataset_from_string(const std::string& name) {
    if (name == "mnist") return DatasetKind::mnist;
    if (name == "fashion_mnist") return DatasetKind::fashion_mnist;
    if (name == "cifar10") return DatasetKind::cifar10;
    throw UsageError("unknown dataset '" + name + "' (expected mnist, fashion_mnist or cifar10)");
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const std::string& source) {
    if (offset + 4 > bytes.size()) {
        throw ParseError(source + ": truncated IDX header, expected at least " + std::to_string(offset + 4) +
                             " bytes but file has " + std::to_string(bytes.size()),
                         bytes.size());
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::uint32_t magic, std::uint32_t expected, const std::string& source) {
    if (magic != expected) {
        char buf[96];
        std::snprintf(buf, sizeof buf, ": bad IDX magic 0x%08X (expected 0x%08X)", magic, expected);
        throw ParseError(source + buf, 0);
    }
}

void check_payload(std::span<const std::uint8_t> bytes, std::size_t header, std::size_t payload,
                   const std::string& source) {
    if (bytes.size() < header + payload) {
        throw ParseError(source + ": truncated payload, expected " + std::to_string(header + payload) +
                             " bytes but file has " + std::to_string(bytes.size()),
                         bytes.size());
    }
}

}  // namespace

RawImages parse_idx_images(std::span<const std::uint8_t> bytes, const std::string& source) {
    check_magic(read_be32(bytes, 0, source), kIdxImagesMagic, source);
    const std::size_t count = read_be32(bytes, 4, source);
    RawImages out;
    out.rows = read_be32(bytes, 8, source);
    out.cols = read_be32(bytes, 12, source);
    constexpr std::size_t header = 16;
    const std::size_t per_image = out.rows * out.cols;
    check_payload(bytes, header, count * per_image, source);

    out.images.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto* first = bytes.data() + header + i * per_image;
        out.images.emplace_back(first, first + per_image);
    }
    return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes, const std::string& source) {
    check_magic(read_be32(bytes, 0, source), kIdxLabelsMagic, source);
    const std::size_t count = read_be32(bytes, 4, source);
    constexpr std::size_t header = 8;
    check_payload(bytes, header, count, source);
    return {bytes.begin() + header, bytes.begin() + static_cast<std::ptrdiff_t>(header + count)};
}

RawImages load_idx_images(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_idx_images(bytes, path.string());
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_idx_labels(bytes, path.string());
}

std::vector<CifarRecord> parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source) {
    if (bytes.size() % kCifarRecordBytes != 0) {
        throw ParseError(source + ": size " + std::to_string(bytes.size()) + " is not a multiple of " +
                             std::to_string(kCifarRecordBytes),
                         bytes.size() - bytes.size() % kCifarRecordBytes);
    }
    const std::size_t count = bytes.size() / kCifarRecordBytes;
    std::vector<CifarRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = i * kCifarRecordBytes;
        const int label = bytes[offset];
        if (label > 9) throw ParseError(source + ": label byte " + std::to_string(label) + " outside [0,9]", offset);
        const auto* first = bytes.data() + offset + 1;
        out.push_back({label, std::vector<std::uint8_t>(first, first + kCifarRecordBytes - 1)});
    }
    return out;
}

std::vector<CifarRecord> load_cifar10(std::span<const std::filesystem::path> paths) {
    std::vector<CifarRecord> out;
    for (const auto& path : paths) {
        const auto bytes = read_file(path);
        auto records = parse_cifar10(bytes, path.string());
        std::move(records.begin(), records.end(), std::back_inserter(out));
    }
    return out;
}

float byte_to_unit(std::uint8_t value) { return static_cast<float>(value) / 127.5f - 1.0f; }

std::uint8_t unit_to_byte(float value) {
    const float scaled = std::round((value + 1.0f) * 127.5f);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

Tensor preprocess_gray(std::span<const std::uint8_t> pixels, std::size_t rows, std::size_t cols) {
    if (pixels.size() != rows * cols) {
        throw DimensionError("preprocess_gray: " + std::to_string(pixels.size()) + " bytes for a " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " image");
    }
    Tensor out({1, rows, cols});
    for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = byte_to_unit(pixels[i]);
    return out;
}

double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    // Integer weights keep R=G=B exact.
    return (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0;
}

std::vector<double> bilinear_resize(std::span<const double> src, std::size_t src_h, std::size_t src_w,
                                    std::size_t dst_h, std::size_t dst_w) {
    if (src.size() != src_h * src_w) throw DimensionError("bilinear_resize: source size mismatch");
    auto sample_axis = [](std::size_t dst, std::size_t src_n, std::size_t dst_n) {
        double pos = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_n) / static_cast<double>(dst_n) - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(src_n - 1));
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, src_n - 1);
        return std::tuple{lo, hi, pos - static_cast<double>(lo)};
    };
    std::vector<double> out(dst_h * dst_w);
    for (std::size_t y = 0; y < dst_h; ++y) {
        const auto [y0, y1, fy] = sample_axis(y, src_h, dst_h);
        for (std::size_t x = 0; x < dst_w; ++x) {
            const auto [x0, x1, fx] = sample_axis(x, src_w, dst_w);
            const double top = src[y0 * src_w + x0] + (src[y0 * src_w + x1] - src[y0 * src_w + x0]) * fx;
            const double bottom = src[y1 * src_w + x0] + (src[y1 * src_w + x1] - src[y1 * src_w + x0]) * fx;
            out[y * dst_w + x] = top + (bottom - top) * fy;
        }
    }
    return out;
}

Tensor preprocess_rgb(std::span<const std::uint8_t> rgb) {
    constexpr std::size_t plane = kCifarSide * kCifarSide;
    if (rgb.size() != 3 * plane) {
        throw DimensionError("preprocess_rgb: expected " + std::to_string(3 * plane) + " bytes, got " +
                             std::to_string(rgb.size()));
    }
    std::vector<double> gray(plane);
    for (std::size_t i = 0; i < plane; ++i) gray[i] = luma(rgb[i], rgb[plane + i], rgb[2 * plane + i]);
    const auto resized = bilinear_resize(gray, kCifarSide, kCifarSide, kImageSide, kImageSide);
    Tensor out({1, kImageSide, kImageSide});
    for (std::size_t i = 0; i < resized.size(); ++i) {
        out[i] = std::clamp(static_cast<float>(resized[i] / 127.5 - 1.0), -1.0f, 1.0f);
    }
    return out;
}

std::vector<LabeledImage> load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const RawImages raw = load_idx_images(images);
    const std::vector<int> tags = load_idx_labels(labels);
    if (raw.images.size() != tags.size()) {
        throw ParseError(images.string() + " holds " + std::to_string(raw.images.size()) + " images but " +
                             labels.string() + " holds " + std::to_string(tags.size()) + " labels",
                         4);
    }
    std::vector<LabeledImage> out;
    out.reserve(tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (tags[i] < 0 || tags[i] >= kRealClasses) {
            throw ParseError(labels.string() + ": label " + std::to_string(tags[i]) + " outside [0,9]", 8 + i);
        }
        out.push_back({preprocess_gray(raw.images[i], raw.rows, raw.cols), tags[i]});
    }
    return out;
}

namespace {

std::vector<LabeledImage> cifar_to_images(const std::vector<CifarRecord>& records) {
    std::vector<LabeledImage> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({preprocess_rgb(r.rgb), r.label});
    return out;
}

void require_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("missing dataset file: " + path.string());
}

}  // namespace

DatasetSplit load_dataset(DatasetKind kind, const std::filesystem::path& dir) {
    DatasetSplit split;
    if (kind == DatasetKind::cifar10) {
        std::vector<std::filesystem::path> train;
        for (int i = 1; i <= 5; ++i) train.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
        const std::vector<std::filesystem::path> test{dir / "test_batch.bin"};
        for (const auto& p : train) require_file(p);
        require_file(test.front());
        split.train = cifar_to_images(load_cifar10(train));
        split.test = cifar_to_images(load_cifar10(test));
        return split;
    }
    const auto file = [&](const char* name) {
        auto p = dir / name;
        require_file(p);
        return p;
    };
    split.train = load_idx_dataset(file("train-images-idx3-ubyte"), file("train-labels-idx1-ubyte"));
    split.test = load_idx_dataset(file("t10k-images-idx3-ubyte"), file("t10k-labels-idx1-ubyte"));
    return split;
}

std::map<int, Partition> partition_by_class(std::span<const LabeledImage> dataset, std::size_t samples_per_class,
                                            Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(kRealClasses);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int label = dataset[i].label;
        if (label < 0 || label >= kRealClasses) throw DataError("partition_by_class: label out of range");
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    std::map<int, Partition> out;
    for (int c = 0; c < kRealClasses; ++c) {
        auto& indices = by_class[static_cast<std::size_t>(c)];
        if (indices.size() < samples_per_class) {
            throw DataError("class " + std::to_string(c) + " has " + std::to_string(indices.size()) +
                            " samples, fewer than the " + std::to_string(samples_per_class) + " requested");
        }
        rng.shuffle(indices);
        Partition part{c, {}};
        part.samples.reserve(samples_per_class);
        for (std::size_t k = 0; k < samples_per_class; ++k) part.samples.push_back(dataset[indices[k]]);
        out.emplace(c, std::move(part));
    }
    return out;
}

}  // namespace fedleak
